//! Problem definition for the priced, capacity-controlled GI/GI/1 queue.
//!
//! Interarrival times are `U / lambda(p)` and service times are `V / mu`,
//! where `U` and `V` are unit-mean draws from a [`UnitMeanDistribution`].
//! The decision variable is [`ControlParams`] `(mu, p)`, constrained to a
//! [`FeasibleBox`] on which the queue is uniformly stable.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit-mean, non-negative random variate source.
///
/// `Gamma { shape: k }` has shape `k` and rate `k`, so its mean is one and
/// its squared coefficient of variation is `1 / k`. Integer `k` gives the
/// Erlang-k distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnitMeanDistribution {
    Exponential,
    Gamma { shape: f64 },
}

impl UnitMeanDistribution {
    /// Gamma law with the requested coefficient of variation `c_s`.
    pub fn from_cv(cv: f64) -> Result<Self> {
        if !(cv.is_finite() && cv > 0.0) {
            return Err(Error::InvalidModel(format!("coefficient of variation must be positive, got {cv}")));
        }
        Ok(Self::Gamma { shape: 1.0 / (cv * cv) })
    }

    pub fn erlang(k: u32) -> Self {
        Self::Gamma { shape: f64::from(k) }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exponential => Ok(()),
            Self::Gamma { shape } if shape.is_finite() && shape > 0.0 => Ok(()),
            Self::Gamma { shape } => Err(Error::InvalidModel(format!("gamma shape must be positive, got {shape}"))),
        }
    }

    /// Squared coefficient of variation.
    pub fn scv(&self) -> f64 {
        match *self {
            Self::Exponential => 1.0,
            Self::Gamma { shape } => 1.0 / shape,
        }
    }

    /// `Some(k)` when the law is exponential (`k = 1`) or Erlang-k.
    pub fn erlang_shape(&self) -> Option<u32> {
        match *self {
            Self::Exponential => Some(1),
            Self::Gamma { shape } if shape >= 1.0 && shape.fract() == 0.0 && shape <= u32::MAX as f64 => {
                Some(shape as u32)
            }
            Self::Gamma { .. } => None,
        }
    }

    pub fn is_exponential(&self) -> bool {
        self.erlang_shape() == Some(1)
    }

    pub fn sampler(&self) -> Sampler {
        match *self {
            Self::Exponential => Sampler::Exponential,
            Self::Gamma { shape } => {
                Sampler::Gamma(Gamma::new(shape, 1.0 / shape).expect("validated gamma shape"))
            }
        }
    }

    /// One draw. Building a [`Sampler`] once is cheaper inside loops.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().sample(rng)
    }
}

/// Prepared sampler for a [`UnitMeanDistribution`].
#[derive(Debug, Clone, Copy)]
pub enum Sampler {
    Exponential,
    Gamma(Gamma<f64>),
}

impl Distribution<f64> for Sampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Exponential => Exp1.sample(rng),
            Sampler::Gamma(g) => g.sample(rng),
        }
    }
}

/// Logistic demand `lambda(p) = M exp(a - p) / (1 + exp(a - p))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandCurve {
    pub market_size: f64,
    pub offset: f64,
}

impl DemandCurve {
    pub fn new(market_size: f64, offset: f64) -> Result<Self> {
        if !(market_size.is_finite() && market_size > 0.0 && offset.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "demand curve needs a positive market size and finite offset, got M={market_size}, a={offset}"
            )));
        }
        Ok(Self { market_size, offset })
    }

    /// Arrival rate at price `p`.
    pub fn lambda(&self, p: f64) -> f64 {
        self.market_size * logistic(self.offset - p)
    }

    /// Derivative of [`lambda`](Self::lambda) with respect to the price.
    pub fn lambda_prime(&self, p: f64) -> f64 {
        let s = logistic(self.offset - p);
        -self.market_size * s * (1.0 - s)
    }
}

// e^z / (1 + e^z), evaluated without overflow on either tail.
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Staffing cost rate `c(mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "c0", rename_all = "snake_case")]
pub enum CostFunction {
    /// `c0 * mu^2 / 2`
    Quadratic(f64),
    /// `c0 * mu`
    Linear(f64),
}

impl CostFunction {
    pub fn coefficient(&self) -> f64 {
        match *self {
            Self::Quadratic(c0) | Self::Linear(c0) => c0,
        }
    }

    pub fn value(&self, mu: f64) -> f64 {
        match *self {
            Self::Quadratic(c0) => 0.5 * c0 * mu * mu,
            Self::Linear(c0) => c0 * mu,
        }
    }

    pub fn derivative(&self, mu: f64) -> f64 {
        match *self {
            Self::Quadratic(c0) => c0 * mu,
            Self::Linear(c0) => c0,
        }
    }
}

/// Decision variable `(mu, p)`: service rate and price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    pub mu: f64,
    pub p: f64,
}

impl ControlParams {
    pub const fn new(mu: f64, p: f64) -> Self {
        Self { mu, p }
    }

    /// Coordinates in `(mu, p)` order.
    pub fn to_array(self) -> [f64; 2] {
        [self.mu, self.p]
    }

    pub fn from_array([mu, p]: [f64; 2]) -> Self {
        Self { mu, p }
    }

    pub fn dist_sq(&self, other: &Self) -> f64 {
        let (dm, dp) = (self.mu - other.mu, self.p - other.p);
        dm * dm + dp * dp
    }
}

/// Feasible rectangle `[mu_lo, mu_hi] x [p_lo, p_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleBox {
    pub mu: [f64; 2],
    pub p: [f64; 2],
}

impl FeasibleBox {
    pub fn new(mu: [f64; 2], p: [f64; 2]) -> Result<Self> {
        let b = Self { mu, p };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.mu.iter().chain(&self.p).all(|v| v.is_finite());
        if !finite || self.mu[0] <= 0.0 || self.mu[0] >= self.mu[1] || self.p[0] >= self.p[1] {
            return Err(Error::InvalidModel(format!(
                "box must satisfy 0 < mu_lo < mu_hi and p_lo < p_hi, got mu={:?} p={:?}",
                self.mu, self.p
            )));
        }
        Ok(())
    }

    /// Euclidean projection, i.e. a componentwise clamp.
    pub fn project(&self, theta: ControlParams) -> ControlParams {
        ControlParams {
            mu: theta.mu.clamp(self.mu[0], self.mu[1]),
            p: theta.p.clamp(self.p[0], self.p[1]),
        }
    }

    pub fn contains(&self, theta: &ControlParams) -> bool {
        (self.mu[0]..=self.mu[1]).contains(&theta.mu) && (self.p[0]..=self.p[1]).contains(&theta.p)
    }
}

/// One queueing problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub interarrival: UnitMeanDistribution,
    pub service: UnitMeanDistribution,
    pub demand: DemandCurve,
    pub cost: CostFunction,
    pub holding_cost: f64,
    pub bounds: FeasibleBox,
}

impl ModelSpec {
    /// Validates every field and rejects boxes that are not uniformly stable,
    /// i.e. requires `lambda(p_lo) < mu_lo`.
    pub fn new(
        interarrival: UnitMeanDistribution,
        service: UnitMeanDistribution,
        demand: DemandCurve,
        cost: CostFunction,
        holding_cost: f64,
        bounds: FeasibleBox,
    ) -> Result<Self> {
        let spec = Self { interarrival, service, demand, cost, holding_cost, bounds };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.interarrival.validate()?;
        self.service.validate()?;
        DemandCurve::new(self.demand.market_size, self.demand.offset)?;
        self.bounds.validate()?;
        let c0 = self.cost.coefficient();
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::InvalidModel(format!("cost coefficient must be non-negative, got {c0}")));
        }
        if !(self.holding_cost.is_finite() && self.holding_cost >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "holding cost must be non-negative, got {}",
                self.holding_cost
            )));
        }
        let lambda_max = self.max_arrival_rate();
        if lambda_max >= self.bounds.mu[0] {
            return Err(Error::InvalidModel(format!(
                "box is not uniformly stable: lambda(p_lo) = {lambda_max} >= mu_lo = {}",
                self.bounds.mu[0]
            )));
        }
        Ok(())
    }

    /// `lambda(p_lo)`, the largest arrival rate over the box.
    pub fn max_arrival_rate(&self) -> f64 {
        self.demand.lambda(self.bounds.p[0])
    }

    pub fn lambda(&self, p: f64) -> f64 {
        self.demand.lambda(p)
    }

    pub fn project(&self, theta: ControlParams) -> ControlParams {
        self.bounds.project(theta)
    }

    pub fn traffic_intensity(&self, theta: &ControlParams) -> f64 {
        self.lambda(theta.p) / theta.mu
    }
}
