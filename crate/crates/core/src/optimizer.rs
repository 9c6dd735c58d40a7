//! Projected stochastic approximation driven by the queue's own trajectory.
//!
//! [`samcmc_run`] updates the control after every customer using the IPA
//! gradient evaluated at the current queue state. [`goliq_run`] is the
//! batch-data baseline: at iteration `t` it serves `ceil(1 + b_c ln t)`
//! customers at a frozen control and steps along the batch-averaged gradient.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ControlParams, ModelSpec};
use crate::queue::{per_customer_cost, QueueKernel, QueueState};
use crate::rng::QueueStreams;

/// Per-coordinate step sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    /// `gamma / t`
    Linear { gamma_p: f64, gamma_mu: f64 },
    /// `c / (1 + t)^alpha`
    Polynomial { c_p: f64, c_mu: f64, alpha: f64 },
}

/// Step sizes for one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub p: f64,
    pub mu: f64,
}

impl StepSchedule {
    pub fn rates(&self, t: u64) -> StepSizes {
        let t = t as f64;
        match *self {
            Self::Linear { gamma_p, gamma_mu } => StepSizes { p: gamma_p / t, mu: gamma_mu / t },
            Self::Polynomial { c_p, c_mu, alpha } => {
                let d = (1.0 + t).powf(alpha);
                StepSizes { p: c_p / d, mu: c_mu / d }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, alpha) = match *self {
            Self::Linear { gamma_p, gamma_mu } => (gamma_p, gamma_mu, 1.0),
            Self::Polynomial { c_p, c_mu, alpha } => (c_p, c_mu, alpha),
        };
        if !(a.is_finite() && a >= 0.0 && b.is_finite() && b >= 0.0) {
            return Err(Error::InvalidConfig(format!("step coefficients must be non-negative, got ({a}, {b})")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("step exponent must lie in (0, 1], got {alpha}")));
        }
        Ok(())
    }
}

/// Stochastic gradient `H(theta, x)` of the steady-state cost rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradientEstimate {
    pub g_p: f64,
    pub g_mu: f64,
}

/// IPA gradient estimator. Unbiased for the steady-state gradient when
/// `x` is drawn from the stationary law of `(W, Y)` at `theta`.
pub fn gradient_h(model: &ModelSpec, theta: &ControlParams, x: &QueueState) -> GradientEstimate {
    let lambda = model.demand.lambda(theta.p);
    let dlambda = model.demand.lambda_prime(theta.p);
    let h0 = model.holding_cost;
    let sojourn = x.w + x.y + 1.0 / theta.mu;
    GradientEstimate {
        g_p: -lambda - theta.p * dlambda + h0 * dlambda * sojourn,
        g_mu: model.cost.derivative(theta.mu) - h0 * (lambda / theta.mu) * sojourn,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub schedule: StepSchedule,
    /// Number of parameter updates.
    pub iterations: u64,
    /// `0` runs single-sample updates; positive values grow the batch as
    /// `ceil(1 + b_c ln t)`.
    pub batch_coefficient: f64,
    pub initial_params: ControlParams,
    pub initial_state: QueueState,
    /// Stop once this many customers have been served. The batch cut short
    /// by the budget is simulated but not used for an update.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub customer_budget: Option<u64>,
    /// Restart every batch of more than one customer from `initial_state`
    /// instead of the current queue. Off by default; kept for comparing the
    /// two readings of the batch baseline.
    #[serde(default)]
    pub reset_batches: bool,
}

impl OptimizerConfig {
    pub fn new(schedule: StepSchedule, iterations: u64, initial_params: ControlParams) -> Self {
        Self {
            schedule,
            iterations,
            batch_coefficient: 0.0,
            initial_params,
            initial_state: QueueState::EMPTY,
            customer_budget: None,
            reset_batches: false,
        }
    }

    pub fn with_batch_coefficient(mut self, b_c: f64) -> Self {
        self.batch_coefficient = b_c;
        self
    }

    pub fn with_customer_budget(mut self, budget: u64) -> Self {
        self.customer_budget = Some(budget);
        self
    }

    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        self.schedule.validate()?;
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.batch_coefficient.is_finite() && self.batch_coefficient >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "batch coefficient must be non-negative, got {}",
                self.batch_coefficient
            )));
        }
        if !model.bounds.contains(&self.initial_params) {
            return Err(Error::InvalidConfig(format!(
                "initial parameters {:?} lie outside the feasible box",
                self.initial_params
            )));
        }
        let x = self.initial_state;
        if !(x.w >= 0.0 && x.y >= 0.0 && x.w.is_finite() && x.y.is_finite()) {
            return Err(Error::InvalidConfig(format!("initial queue state must be non-negative, got {x:?}")));
        }
        if self.customer_budget == Some(0) {
            return Err(Error::InvalidConfig("customer budget must be at least 1".into()));
        }
        Ok(())
    }

    /// Batch size at iteration `t` (1-based).
    pub fn batch_size(&self, t: u64) -> u64 {
        batch_size(self.batch_coefficient, t)
    }
}

/// `ceil(1 + b_c ln t)`, never below one.
pub fn batch_size(b_c: f64, t: u64) -> u64 {
    if b_c == 0.0 || t <= 1 {
        return 1;
    }
    (1.0 + b_c * (t as f64).ln()).ceil().max(1.0) as u64
}

/// One served customer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CustomerRecord {
    /// Iteration whose parameter was in force.
    pub iteration: u64,
    pub params: ControlParams,
    /// State seen by this customer on entering service.
    pub state: QueueState,
    pub service_time: f64,
    /// Time until the next customer enters service.
    pub interval: f64,
    pub cost: f64,
}

/// What the optimizer did during one iteration.
#[derive(Debug, Clone, Copy)]
pub struct IterationEvent {
    pub iteration: u64,
    pub params: ControlParams,
    pub next_params: ControlParams,
    pub step: StepSizes,
    pub gradient: GradientEstimate,
    pub batch_size: u64,
    pub customers: u64,
}

/// Full record of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    /// `theta_1, ..., theta_{T+1}`.
    pub iterates: Vec<ControlParams>,
    /// Step sizes `(eta_p, eta_mu)` used at each iteration.
    pub step_sizes: Vec<[f64; 2]>,
    pub batch_sizes: Vec<u64>,
    pub customers: Vec<CustomerRecord>,
    /// Queue state after the last served customer.
    pub final_state: QueueState,
}

impl RunTrace {
    pub fn customer_count(&self) -> u64 {
        self.customers.len() as u64
    }

    pub fn iterations(&self) -> u64 {
        self.batch_sizes.len() as u64
    }

    pub fn final_params(&self) -> ControlParams {
        *self.iterates.last().expect("trace holds the initial parameter")
    }

    /// Writes `iteration,customers,mu,p,w,y,interval,cost`, one row per customer.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        use crate::fmt_f64 as f;
        writeln!(out, "iteration,customers,mu,p,w,y,interval,cost")?;
        for (i, c) in self.customers.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.iteration,
                i + 1,
                f(c.params.mu),
                f(c.params.p),
                f(c.state.w),
                f(c.state.y),
                f(c.interval),
                f(c.cost)
            )?;
        }
        Ok(())
    }
}

/// Drives the shared single-sample / batch loop, reporting every served
/// customer and every iteration to the callbacks. Returns the final
/// parameter and queue state.
pub fn run_with<C, I>(
    model: &ModelSpec,
    config: &OptimizerConfig,
    streams: &mut QueueStreams,
    mut on_customer: C,
    mut on_iteration: I,
) -> Result<(ControlParams, QueueState)>
where
    C: FnMut(&CustomerRecord),
    I: FnMut(&IterationEvent),
{
    config.validate(model)?;
    let kernel = QueueKernel::new(model);
    let budget = config.customer_budget.unwrap_or(u64::MAX);
    let mut theta = config.initial_params;
    let mut x = config.initial_state;
    let mut served = 0u64;

    for t in 1..=config.iterations {
        if served >= budget {
            break;
        }
        let batch = config.batch_size(t);
        let (mut sum_p, mut sum_mu) = (0.0, 0.0);
        let mut taken = 0u64;
        if config.reset_batches && batch > 1 {
            x = config.initial_state;
        }
        while taken < batch && served < budget {
            let g = gradient_h(model, &theta, &x);
            sum_p += g.g_p;
            sum_mu += g.g_mu;
            let rec = kernel.step(model, &theta, x, streams);
            on_customer(&CustomerRecord {
                iteration: t,
                params: theta,
                state: x,
                service_time: rec.service_time,
                interval: rec.interval,
                cost: per_customer_cost(model, &theta, x.w, rec.service_time, rec.interval),
            });
            x = rec.next;
            taken += 1;
            served += 1;
        }
        if taken < batch {
            // leftover customers of a truncated batch do not produce an update
            break;
        }
        let n = batch as f64;
        let gradient = GradientEstimate { g_p: sum_p / n, g_mu: sum_mu / n };
        let step = config.schedule.rates(t);
        let next = model.project(ControlParams {
            mu: theta.mu - step.mu * gradient.g_mu,
            p: theta.p - step.p * gradient.g_p,
        });
        on_iteration(&IterationEvent {
            iteration: t,
            params: theta,
            next_params: next,
            step,
            gradient,
            batch_size: batch,
            customers: served,
        });
        theta = next;
    }
    Ok((theta, x))
}

fn collect_trace(model: &ModelSpec, config: &OptimizerConfig, streams: &mut QueueStreams) -> Result<RunTrace> {
    let mut customers = Vec::new();
    let mut iterates = vec![config.initial_params];
    let mut step_sizes = Vec::new();
    let mut batch_sizes = Vec::new();
    let (_, final_state) = run_with(
        model,
        config,
        streams,
        |c| customers.push(*c),
        |ev| {
            iterates.push(ev.next_params);
            step_sizes.push([ev.step.p, ev.step.mu]);
            batch_sizes.push(ev.batch_size);
        },
    )?;
    Ok(RunTrace { iterates, step_sizes, batch_sizes, customers, final_state })
}

/// Single-sample projected SGD: one customer per update.
pub fn samcmc_run(model: &ModelSpec, config: &OptimizerConfig, streams: &mut QueueStreams) -> Result<RunTrace> {
    if config.batch_coefficient != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "single-sample runs need batch coefficient 0, got {}",
            config.batch_coefficient
        )));
    }
    collect_trace(model, config, streams)
}

/// Growing-batch baseline. With `b_c = 0` this reproduces [`samcmc_run`].
pub fn goliq_run(model: &ModelSpec, config: &OptimizerConfig, streams: &mut QueueStreams) -> Result<RunTrace> {
    collect_trace(model, config, streams)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostFunction, DemandCurve, FeasibleBox, UnitMeanDistribution};

    fn model(cost: CostFunction) -> ModelSpec {
        ModelSpec::new(
            UnitMeanDistribution::Exponential,
            UnitMeanDistribution::Exponential,
            DemandCurve::new(10.0, 4.1).unwrap(),
            cost,
            1.0,
            FeasibleBox::new([3.5, 10.0], [6.56, 15.0]).unwrap(),
        )
        .unwrap()
    }

    fn config(iterations: u64) -> OptimizerConfig {
        OptimizerConfig::new(
            StepSchedule::Linear { gamma_p: 1.25, gamma_mu: 12.5 },
            iterations,
            ControlParams::new(8.0, 7.0),
        )
    }

    #[test]
    fn gradient_hand_value() {
        let m = model(CostFunction::Quadratic(1.0));
        let g = gradient_h(&m, &ControlParams::new(4.0, 7.0), &QueueState::EMPTY);
        let (l, dl) = (m.demand.lambda(7.0), m.demand.lambda_prime(7.0));
        assert!((g.g_p - (-l - 7.0 * dl + dl * 0.25)).abs() < 1e-12);
        assert!((g.g_p - 2.81523).abs() < 1e-5, "{}", g.g_p);
        assert!((g.g_mu - 3.96740).abs() < 1e-5, "{}", g.g_mu);
    }

    #[test]
    fn gradient_price_part_ignores_state_without_holding_cost() {
        let m = ModelSpec { holding_cost: 0.0, ..model(CostFunction::Quadratic(1.0)) };
        let theta = ControlParams::new(4.0, 7.0);
        let a = gradient_h(&m, &theta, &QueueState::EMPTY);
        let b = gradient_h(&m, &theta, &QueueState::new(12.0, 3.0));
        assert_eq!(a.g_p, b.g_p);
        let expected = -m.lambda(7.0) - 7.0 * m.demand.lambda_prime(7.0);
        assert!((a.g_p - expected).abs() < 1e-15);
    }

    #[test]
    fn schedules() {
        let lin = StepSchedule::Linear { gamma_p: 1.25, gamma_mu: 12.5 };
        assert_eq!(lin.rates(5), StepSizes { p: 0.25, mu: 2.5 });
        let poly = StepSchedule::Polynomial { c_p: 1.0, c_mu: 20.0, alpha: 1.0 };
        assert_eq!(poly.rates(3), StepSizes { p: 0.25, mu: 5.0 });
        let poly = StepSchedule::Polynomial { c_p: 1.0, c_mu: 20.0, alpha: 0.99 };
        let mut prev = f64::INFINITY;
        for t in 1..1000 {
            let r = poly.rates(t);
            assert!(r.p > 0.0 && r.p < prev);
            prev = r.p;
        }
        assert!(StepSchedule::Polynomial { c_p: 1.0, c_mu: 1.0, alpha: 1.5 }.validate().is_err());
        assert!(StepSchedule::Linear { gamma_p: -1.0, gamma_mu: 1.0 }.validate().is_err());
    }

    #[test]
    fn batch_sizes() {
        assert_eq!(batch_size(5.0, 1), 1);
        assert_eq!(batch_size(0.0, 1000), 1);
        assert_eq!(batch_size(1.0, 3), 3); // 1 + ln 3 = 2.0986
        assert_eq!(batch_size(10.0, 100), (1.0 + 10.0 * 100f64.ln()).ceil() as u64);
    }

    #[test]
    fn zero_steps_freeze_the_iterate() {
        let m = model(CostFunction::Quadratic(0.2));
        let mut cfg = config(500);
        cfg.schedule = StepSchedule::Linear { gamma_p: 0.0, gamma_mu: 0.0 };
        let trace = samcmc_run(&m, &cfg, &mut QueueStreams::from_seed(1)).unwrap();
        assert!(trace.iterates.iter().all(|t| *t == cfg.initial_params));
        assert_eq!(trace.customer_count(), 500);
    }

    #[test]
    fn replay_is_identical() {
        let m = model(CostFunction::Quadratic(0.2));
        let cfg = config(2000);
        let a = samcmc_run(&m, &cfg, &mut QueueStreams::from_seed(4)).unwrap();
        let b = samcmc_run(&m, &cfg, &mut QueueStreams::from_seed(4)).unwrap();
        assert_eq!(a, b);
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn iterates_stay_in_the_box() {
        let m = model(CostFunction::Quadratic(1.0));
        let mut cfg = config(5000);
        cfg.schedule = StepSchedule::Linear { gamma_p: 50.0, gamma_mu: 50.0 };
        let trace = samcmc_run(&m, &cfg, &mut QueueStreams::from_seed(2)).unwrap();
        assert!(trace.iterates.iter().all(|t| m.bounds.contains(t)));
    }

    #[test]
    fn single_sample_rejects_batches() {
        let m = model(CostFunction::Quadratic(1.0));
        let cfg = config(10).with_batch_coefficient(1.0);
        assert!(samcmc_run(&m, &cfg, &mut QueueStreams::from_seed(1)).is_err());
    }

    #[test]
    fn batch_of_one_matches_single_sample() {
        let m = model(CostFunction::Quadratic(0.2));
        let cfg = config(3000);
        let a = samcmc_run(&m, &cfg, &mut QueueStreams::from_seed(9)).unwrap();
        let b = goliq_run(&m, &cfg, &mut QueueStreams::from_seed(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn goliq_customer_accounting() {
        let m = model(CostFunction::Quadratic(0.2));
        let cfg = config(400).with_batch_coefficient(5.0);
        let trace = goliq_run(&m, &cfg, &mut QueueStreams::from_seed(3)).unwrap();
        let expected: u64 = (1..=400).map(|t| batch_size(5.0, t)).sum();
        assert_eq!(trace.customer_count(), expected);
        assert_eq!(trace.iterations(), 400);
        assert_eq!(trace.batch_sizes[0], 1);
        assert_eq!(trace.iterates.len(), 401);
        // parameter is frozen inside each batch
        for w in trace.customers.windows(2) {
            if w[0].iteration == w[1].iteration {
                assert_eq!(w[0].params, w[1].params);
            }
        }
    }

    #[test]
    fn customer_budget_truncates_the_last_batch() {
        let m = model(CostFunction::Quadratic(0.2));
        let cfg = config(u64::MAX).with_batch_coefficient(10.0).with_customer_budget(1000);
        let trace = goliq_run(&m, &cfg, &mut QueueStreams::from_seed(3)).unwrap();
        assert_eq!(trace.customer_count(), 1000);
        let full: u64 = trace.batch_sizes.iter().sum();
        assert!(full <= 1000);
    }

    #[test]
    fn trace_csv_header() {
        let m = model(CostFunction::Quadratic(0.2));
        let trace = samcmc_run(&m, &config(2), &mut QueueStreams::from_seed(1)).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,customers,mu,p,w,y,interval,cost\n1,1,"));
        assert_eq!(text.lines().count(), 3);
    }
}
