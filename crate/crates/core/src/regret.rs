//! Cumulative regret of a run against the steady-state optimum.
//!
//! Customer `n` contributes `cost_n - f* I_n`, where `cost_n` is the
//! per-customer cost stored in the trace and `I_n` the time until the next
//! service start. The first customer is excluded. The suboptimality part
//! `R2 = sum (f(theta_n) - f*) I_n` needs a steady-state oracle;
//! nonstationarity `R1 = R - R2` is the residual.

use crate::error::{Error, Result};
use crate::model::{ControlParams, ModelSpec};
use crate::optimizer::{CustomerRecord, RunTrace};
use crate::oracles::{self, ModelClass, Optimum};
use crate::queue::per_customer_cost;

/// Prefix sums indexed by customer: entry `n - 1` covers customers `2..=n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretSeries {
    pub regret: Vec<f64>,
    pub nonstationarity: Option<Vec<f64>>,
    pub suboptimality: Option<Vec<f64>>,
}

impl RegretSeries {
    pub fn len(&self) -> usize {
        self.regret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regret.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.regret.last().copied().unwrap_or(0.0)
    }
}

/// Streaming version used by the experiment runners.
#[derive(Debug, Clone)]
pub struct RegretAccumulator {
    model: ModelSpec,
    optimal_rate: f64,
    decompose: bool,
    seen: u64,
    regret: f64,
    suboptimality: f64,
    elapsed: f64,
    cached: Option<(ControlParams, f64)>,
}

impl RegretAccumulator {
    pub fn new(model: &ModelSpec, optimum: &Optimum, decompose: bool) -> Result<Self> {
        if !model.bounds.contains(&optimum.params) {
            return Err(Error::ModelMismatch(format!("optimum {:?} lies outside the model's box", optimum.params)));
        }
        if decompose {
            ModelClass::of(model)?;
        }
        Ok(Self {
            model: *model,
            optimal_rate: optimum.value,
            decompose,
            seen: 0,
            regret: 0.0,
            suboptimality: 0.0,
            elapsed: 0.0,
            cached: None,
        })
    }

    pub fn push(&mut self, c: &CustomerRecord) -> Result<()> {
        let cost = per_customer_cost(&self.model, &c.params, c.state.w, c.service_time, c.interval);
        if cost != c.cost || !self.model.bounds.contains(&c.params) {
            return Err(Error::ModelMismatch(format!("customer record {c:?} was not produced by this model")));
        }
        self.seen += 1;
        if self.seen == 1 {
            return Ok(());
        }
        self.regret += c.cost - self.optimal_rate * c.interval;
        self.elapsed += c.interval;
        if self.decompose {
            let f = self.rate_at(&c.params)?;
            self.suboptimality += (f - self.optimal_rate) * c.interval;
        }
        Ok(())
    }

    fn rate_at(&mut self, theta: &ControlParams) -> Result<f64> {
        match self.cached {
            Some((t, f)) if t == *theta => Ok(f),
            _ => {
                let f = oracles::objective(&self.model, theta)?;
                self.cached = Some((*theta, f));
                Ok(f)
            }
        }
    }

    pub fn customers(&self) -> u64 {
        self.seen
    }

    pub fn regret(&self) -> f64 {
        self.regret
    }

    pub fn suboptimality(&self) -> Option<f64> {
        self.decompose.then_some(self.suboptimality)
    }

    pub fn nonstationarity(&self) -> Option<f64> {
        self.decompose.then(|| self.regret - self.suboptimality)
    }

    /// Total of the intervals inside the regret window.
    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }
}

fn series(model: &ModelSpec, trace: &RunTrace, optimum: &Optimum, decompose: bool) -> Result<RegretSeries> {
    let mut acc = RegretAccumulator::new(model, optimum, decompose)?;
    let n = trace.customers.len();
    let mut out = RegretSeries {
        regret: Vec::with_capacity(n),
        nonstationarity: decompose.then(|| Vec::with_capacity(n)),
        suboptimality: decompose.then(|| Vec::with_capacity(n)),
    };
    for c in &trace.customers {
        acc.push(c)?;
        out.regret.push(acc.regret());
        if let (Some(r1), Some(r2)) = (out.nonstationarity.as_mut(), out.suboptimality.as_mut()) {
            r1.push(acc.nonstationarity().unwrap_or_default());
            r2.push(acc.suboptimality().unwrap_or_default());
        }
    }
    Ok(out)
}

pub fn cumulative_regret(model: &ModelSpec, trace: &RunTrace, optimum: &Optimum) -> Result<RegretSeries> {
    series(model, trace, optimum, false)
}

/// Fails with [`Error::UnsupportedModel`] when no steady-state oracle exists.
pub fn regret_decomposition(model: &ModelSpec, trace: &RunTrace, optimum: &Optimum) -> Result<RegretSeries> {
    series(model, trace, optimum, true)
}
