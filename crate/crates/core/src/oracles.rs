//! Steady-state ground truth for the model classes that admit one.
//!
//! * M/M/1: closed form.
//! * M/GI/1: Pollaczek-Khinchine mean queue length.
//! * GI/M/1: `sigma = A*(mu (1 - sigma))` solved by bisection, where `A*` is
//!   the Laplace-Stieltjes transform of the interarrival time. For Gamma
//!   interarrivals with shape `k` and mean `1/lambda`,
//!   `A*(s) = (k lambda / (k lambda + s))^k`.
//!
//! [`find_optimum`] minimizes any of these over the feasible box with a
//! coarse grid followed by nested refinement. No randomness is involved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ControlParams, ModelSpec, UnitMeanDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateSummary {
    pub mean_wait: f64,
    pub mean_queue: f64,
    pub rho: f64,
}

impl SteadyStateSummary {
    /// Fills in the mean queue length from Little's law.
    fn from_wait(lambda: f64, mu: f64, mean_wait: f64) -> Self {
        Self { mean_wait, mean_queue: lambda * (mean_wait + 1.0 / mu), rho: lambda / mu }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub params: ControlParams,
    pub value: f64,
}

fn stable_rates(model: &ModelSpec, theta: &ControlParams) -> Result<(f64, f64)> {
    let lambda = model.lambda(theta.p);
    if !(lambda < theta.mu) {
        return Err(Error::Infeasible { lambda, mu: theta.mu });
    }
    Ok((lambda, theta.mu))
}

/// Exponential interarrival and service times.
pub fn mm1_summary(model: &ModelSpec, theta: &ControlParams) -> Result<SteadyStateSummary> {
    let (lambda, mu) = stable_rates(model, theta)?;
    let rho = lambda / mu;
    Ok(SteadyStateSummary { mean_wait: rho / (mu - lambda), mean_queue: rho / (1.0 - rho), rho })
}

/// `h0 lambda / (mu - lambda) + c(mu) - p lambda`.
pub fn mm1_objective(model: &ModelSpec, theta: &ControlParams) -> Result<f64> {
    let (lambda, mu) = stable_rates(model, theta)?;
    Ok(model.holding_cost * lambda / (mu - lambda) + model.cost.value(mu) - theta.p * lambda)
}

/// Pollaczek-Khinchine: `E[Q] = rho + rho^2/(1-rho) * (1 + c_s^2)/2`.
pub fn mg1_mean_queue(model: &ModelSpec, theta: &ControlParams, cv: f64) -> Result<SteadyStateSummary> {
    let (lambda, mu) = stable_rates(model, theta)?;
    let rho = lambda / mu;
    let mean_queue = rho + rho * rho / (1.0 - rho) * (1.0 + cv * cv) / 2.0;
    Ok(SteadyStateSummary { mean_wait: mean_queue / lambda - 1.0 / mu, mean_queue, rho })
}

/// GI/M/1 with Gamma (Erlang when integer) interarrival times.
pub fn gim1_mean_wait(model: &ModelSpec, theta: &ControlParams) -> Result<SteadyStateSummary> {
    let shape = match model.interarrival {
        UnitMeanDistribution::Exponential => 1.0,
        UnitMeanDistribution::Gamma { shape } => shape,
    };
    if !model.service.is_exponential() {
        return Err(Error::UnsupportedModel("GI/M/1 root method needs exponential service".into()));
    }
    let (lambda, mu) = stable_rates(model, theta)?;
    let sigma = gim1_root(shape, lambda, mu)?;
    Ok(SteadyStateSummary::from_wait(lambda, mu, sigma / (mu * (1.0 - sigma))))
}

/// Root in `(0, 1)` of `sigma = (k lambda / (k lambda + mu (1 - sigma)))^k`.
pub fn gim1_root(shape: f64, lambda: f64, mu: f64) -> Result<f64> {
    let g = |s: f64| (shape * lambda / (shape * lambda + mu * (1.0 - s))).powf(shape) - s;
    let mut lo = 0.0;
    let mut hi = 1.0 - 1e-9;
    if !(g(lo) > 0.0 && g(hi) < 0.0) {
        return Err(Error::NoRoot(format!("no sign change for k={shape}, lambda={lambda}, mu={mu}")));
    }
    // bisect to machine resolution
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which steady-state formula applies to a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelClass {
    Mm1,
    /// Poisson arrivals, general service with the given coefficient of variation.
    Mg1 { cv: f64 },
    /// Gamma interarrivals, exponential service.
    Gim1,
}

impl ModelClass {
    pub fn of(model: &ModelSpec) -> Result<Self> {
        match (model.interarrival.is_exponential(), model.service.is_exponential()) {
            (true, true) => Ok(Self::Mm1),
            (true, false) => Ok(Self::Mg1 { cv: model.service.scv().sqrt() }),
            (false, true) => Ok(Self::Gim1),
            (false, false) => Err(Error::UnsupportedModel(format!(
                "interarrival {:?} with service {:?}",
                model.interarrival, model.service
            ))),
        }
    }
}

pub fn steady_state(model: &ModelSpec, theta: &ControlParams) -> Result<SteadyStateSummary> {
    match ModelClass::of(model)? {
        ModelClass::Mm1 => mm1_summary(model, theta),
        ModelClass::Mg1 { cv } => mg1_mean_queue(model, theta, cv),
        ModelClass::Gim1 => gim1_mean_wait(model, theta),
    }
}

/// Steady-state cost rate `h0 E[Q] + c(mu) - p lambda(p)`.
pub fn objective(model: &ModelSpec, theta: &ControlParams) -> Result<f64> {
    let summary = steady_state(model, theta)?;
    Ok(model.holding_cost * summary.mean_queue + model.cost.value(theta.mu) - theta.p * model.lambda(theta.p))
}

const COARSE_GRID: usize = 201;
const FINE_GRID: usize = 21;
const PARAM_TOLERANCE: f64 = 1e-7;

/// Grid search over the box followed by nested grids around the incumbent.
/// Infeasible points are skipped.
pub fn find_optimum<F>(model: &ModelSpec, objective: F) -> Result<Optimum>
where
    F: Fn(&ControlParams) -> Result<f64>,
{
    let b = model.bounds;
    let eval = |theta: ControlParams| objective(&theta).ok().filter(|v| v.is_finite());

    let mut best: Option<Optimum> = None;
    let consider = |theta: ControlParams, best: &mut Option<Optimum>| {
        if let Some(value) = eval(theta) {
            if best.map_or(true, |o| value < o.value) {
                *best = Some(Optimum { params: theta, value });
            }
        }
    };
    let lerp = |range: [f64; 2], i: usize, n: usize| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64;

    for i in 0..COARSE_GRID {
        for j in 0..COARSE_GRID {
            consider(ControlParams::new(lerp(b.mu, i, COARSE_GRID), lerp(b.p, j, COARSE_GRID)), &mut best);
        }
    }
    let mut best = best.ok_or(Error::AllInfeasible)?;

    let mut half_mu = (b.mu[1] - b.mu[0]) / (COARSE_GRID - 1) as f64;
    let mut half_p = (b.p[1] - b.p[0]) / (COARSE_GRID - 1) as f64;
    while half_mu.max(half_p) > PARAM_TOLERANCE {
        let center = best.params;
        let mu_range = [(center.mu - half_mu).max(b.mu[0]), (center.mu + half_mu).min(b.mu[1])];
        let p_range = [(center.p - half_p).max(b.p[0]), (center.p + half_p).min(b.p[1])];
        let mut incumbent = Some(best);
        for i in 0..FINE_GRID {
            for j in 0..FINE_GRID {
                consider(ControlParams::new(lerp(mu_range, i, FINE_GRID), lerp(p_range, j, FINE_GRID)), &mut incumbent);
            }
        }
        best = incumbent.expect("incumbent kept");
        // the window spans 2 half-widths over FINE_GRID - 1 cells; keep two cells of slack
        half_mu *= 4.0 / (FINE_GRID - 1) as f64;
        half_p *= 4.0 / (FINE_GRID - 1) as f64;
    }
    Ok(best)
}

/// [`find_optimum`] of [`objective`].
pub fn optimum(model: &ModelSpec) -> Result<Optimum> {
    ModelClass::of(model)?;
    find_optimum(model, |theta| objective(model, theta))
}

/// Central-difference gradient `(d/dmu, d/dp)`.
pub fn numerical_gradient<F>(f: F, theta: &ControlParams, h: f64) -> Result<[f64; 2]>
where
    F: Fn(&ControlParams) -> Result<f64>,
{
    let d_mu = (f(&ControlParams::new(theta.mu + h, theta.p))? - f(&ControlParams::new(theta.mu - h, theta.p))?) / (2.0 * h);
    let d_p = (f(&ControlParams::new(theta.mu, theta.p + h))? - f(&ControlParams::new(theta.mu, theta.p - h))?) / (2.0 * h);
    Ok([d_mu, d_p])
}
