//! Embedded chain of the queue at enter-service epochs.
//!
//! Each transition moves from customer `t` to customer `t + 1`:
//!
//! ```text
//! w' = max(w - u/lambda(p) + v/mu, 0)
//! y' = (y + u/lambda(p)) * 1{w' > 0}
//! ```
//!
//! `u/lambda(p)` is the gap between the two arrivals and `v/mu` is customer
//! `t`'s service time. The time between the two enter-service epochs is
//! `I = w' + u/lambda(p) - w`.

use std::io::Write;

use rand_distr::Distribution;

use crate::model::{ControlParams, ModelSpec, Sampler};
use crate::rng::QueueStreams;

/// Waiting time and observed busy period of the customer entering service.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct QueueState {
    pub w: f64,
    pub y: f64,
}

impl QueueState {
    pub const EMPTY: QueueState = QueueState { w: 0.0, y: 0.0 };

    pub fn new(w: f64, y: f64) -> Self {
        debug_assert!(w >= 0.0 && y >= 0.0);
        Self { w, y }
    }
}

/// Outcome of one customer's transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub prev: QueueState,
    pub next: QueueState,
    /// Unit-mean interarrival draw `U`.
    pub u: f64,
    /// Unit-mean service draw `V`.
    pub v: f64,
    /// Time between this customer's and the next customer's service start.
    pub interval: f64,
    /// This customer's service time, `v / mu`.
    pub service_time: f64,
}

/// Lindley update for given scaled interarrival and service times.
pub fn lindley(x: QueueState, interarrival: f64, service: f64) -> QueueState {
    let w = (x.w - interarrival + service).max(0.0);
    let y = if w > 0.0 { x.y + interarrival } else { 0.0 };
    QueueState { w, y }
}

/// Pre-built samplers for the two unit-mean sequences of a model.
#[derive(Debug, Clone, Copy)]
pub struct QueueKernel {
    arrivals: Sampler,
    services: Sampler,
}

impl QueueKernel {
    pub fn new(model: &ModelSpec) -> Self {
        Self { arrivals: model.interarrival.sampler(), services: model.service.sampler() }
    }

    /// Draws one `(U, V)` pair and advances the chain under `theta`.
    pub fn step(
        &self,
        model: &ModelSpec,
        theta: &ControlParams,
        x: QueueState,
        streams: &mut QueueStreams,
    ) -> TransitionRecord {
        let u = self.arrivals.sample(&mut streams.arrivals);
        let v = self.services.sample(&mut streams.services);
        transition(model, theta, x, u, v)
    }
}

/// Transition for already-drawn unit-mean variates.
pub fn transition(model: &ModelSpec, theta: &ControlParams, x: QueueState, u: f64, v: f64) -> TransitionRecord {
    let gap = u / model.lambda(theta.p);
    let service_time = v / theta.mu;
    let next = lindley(x, gap, service_time);
    TransitionRecord { prev: x, next, u, v, interval: next.w + gap - x.w, service_time }
}

/// One transition with freshly built samplers; prefer [`QueueKernel`] in loops.
pub fn step(model: &ModelSpec, theta: &ControlParams, x: QueueState, streams: &mut QueueStreams) -> TransitionRecord {
    QueueKernel::new(model).step(model, theta, x, streams)
}

/// Cost attributed to one customer: sojourn holding cost, minus the fee,
/// plus staffing cost over the interval until the next service start.
pub fn per_customer_cost(model: &ModelSpec, theta: &ControlParams, w: f64, service_time: f64, interval: f64) -> f64 {
    model.holding_cost * (w + service_time) - theta.p + model.cost.value(theta.mu) * interval
}

/// `n` transitions at a fixed parameter, returning the visited states
/// `x_2, ..., x_{n+1}`.
pub fn simulate_fixed(
    model: &ModelSpec,
    theta: &ControlParams,
    x0: QueueState,
    n: usize,
    streams: &mut QueueStreams,
) -> Vec<QueueState> {
    let kernel = QueueKernel::new(model);
    let mut x = x0;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        x = kernel.step(model, theta, x, streams).next;
        out.push(x);
    }
    out
}

/// Writes `(t, w, y, mu, p, I, cost)` rows for a fixed-parameter trajectory.
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    model: &ModelSpec,
    theta: &ControlParams,
    x0: QueueState,
    n: usize,
    streams: &mut QueueStreams,
) -> std::io::Result<()> {
    let kernel = QueueKernel::new(model);
    writeln!(out, "t,w,y,mu,p,interval,cost")?;
    let mut x = x0;
    for t in 1..=n {
        let rec = kernel.step(model, theta, x, streams);
        let cost = per_customer_cost(model, theta, rec.prev.w, rec.service_time, rec.interval);
        writeln!(
            out,
            "{t},{},{},{},{},{},{}",
            crate::fmt_f64(x.w),
            crate::fmt_f64(x.y),
            crate::fmt_f64(theta.mu),
            crate::fmt_f64(theta.p),
            crate::fmt_f64(rec.interval),
            crate::fmt_f64(cost)
        )?;
        x = rec.next;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostFunction, DemandCurve, FeasibleBox, UnitMeanDistribution};

    fn mm1() -> ModelSpec {
        ModelSpec::new(
            UnitMeanDistribution::Exponential,
            UnitMeanDistribution::Exponential,
            DemandCurve::new(10.0, 4.1).unwrap(),
            CostFunction::Quadratic(1.0),
            1.0,
            FeasibleBox::new([3.5, 10.0], [6.56, 15.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn lindley_hand_cases() {
        assert_eq!(lindley(QueueState::new(5.0, 3.0), 10.0, 2.0), QueueState::new(0.0, 0.0));
        assert_eq!(lindley(QueueState::new(0.0, 0.0), 1.0, 3.0), QueueState::new(2.0, 1.0));
        assert_eq!(lindley(QueueState::new(2.0, 1.0), 1.0, 1.0), QueueState::new(2.0, 2.0));
    }

    #[test]
    fn transition_interval_identity() {
        let m = mm1();
        let theta = ControlParams::new(4.0, 4.1); // lambda = 5, so u = 5 gives a unit gap
        let rec = transition(&m, &theta, QueueState::new(2.0, 1.0), 5.0, 4.0);
        assert_eq!(rec.next, QueueState::new(2.0, 2.0));
        assert_eq!(rec.service_time, 1.0);
        assert_eq!(rec.interval, 1.0);
    }

    #[test]
    fn per_customer_cost_cases() {
        let m = mm1();
        // c(4) = 8 for the quadratic cost with c0 = 1
        let theta = ControlParams::new(4.0, 7.0);
        assert_eq!(per_customer_cost(&m, &theta, 0.0, 1.0, 0.5), -2.0);

        let free = ModelSpec { holding_cost: 0.0, cost: CostFunction::Linear(0.0), ..m };
        let zero_price = ControlParams::new(4.0, 0.0);
        assert_eq!(per_customer_cost(&free, &zero_price, 3.0, 1.5, 2.0), 0.0);

        let doubled = ModelSpec { holding_cost: 2.0, ..free };
        assert_eq!(per_customer_cost(&doubled, &zero_price, 3.0, 1.5, 2.0), 2.0 * 4.5);
    }

    #[test]
    fn empty_trajectory() {
        let m = mm1();
        let mut s = QueueStreams::from_seed(1);
        assert!(simulate_fixed(&m, &ControlParams::new(4.0, 7.0), QueueState::EMPTY, 0, &mut s).is_empty());
    }

    #[test]
    fn clamp_and_reset_hold_along_a_path() {
        let m = mm1();
        let theta = ControlParams::new(3.5, 6.56);
        let mut s = QueueStreams::from_seed(3);
        for x in simulate_fixed(&m, &theta, QueueState::EMPTY, 20_000, &mut s) {
            assert!(x.w >= 0.0 && x.y >= 0.0);
            assert_eq!(x.w == 0.0, x.y == 0.0);
        }
    }

    #[test]
    fn intervals_telescope() {
        let m = mm1();
        let kernel = QueueKernel::new(&m);
        let mut s = QueueStreams::from_seed(5);
        let mut x = QueueState::EMPTY;
        let (mut sum_i, mut sum_gap) = (0.0, 0.0);
        let w1 = x.w;
        for t in 0..5000 {
            // vary the parameter along the path
            let theta = ControlParams::new(3.5 + (t % 7) as f64 * 0.5, 6.6 + (t % 5) as f64 * 0.3);
            let rec = kernel.step(&m, &theta, x, &mut s);
            sum_i += rec.interval;
            sum_gap += rec.u / m.lambda(theta.p);
            assert!(rec.interval > 0.0);
            x = rec.next;
        }
        let rhs = x.w - w1 + sum_gap;
        assert!((sum_i - rhs).abs() <= 1e-9 * rhs.abs());
    }

    #[test]
    fn coupled_chains_are_ordered() {
        let m = mm1();
        let theta = ControlParams::new(4.0, 7.0);
        let kernel = QueueKernel::new(&m);
        let mut s = QueueStreams::from_seed(8);
        let (mut lo, mut hi) = (QueueState::EMPTY, QueueState::new(3.0, 1.0));
        for _ in 0..10_000 {
            let before = s.clone();
            let a = kernel.step(&m, &theta, lo, &mut s);
            let mut replay = before;
            let b = kernel.step(&m, &theta, hi, &mut replay);
            assert_eq!((a.u, a.v), (b.u, b.v));
            assert!(a.next.w <= b.next.w);
            lo = a.next;
            hi = b.next;
        }
    }

    #[test]
    fn trajectory_csv_has_fixed_header() {
        let m = mm1();
        let mut buf = Vec::new();
        let mut s = QueueStreams::from_seed(2);
        write_trajectory_csv(&mut buf, &m, &ControlParams::new(4.0, 7.0), QueueState::EMPTY, 3, &mut s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,w,y,mu,p,interval,cost");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,0.0000000000000000e0,"));
    }
}
