//! Experiment configuration, stored as TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::Direction;
use crate::model::{ControlParams, CostFunction, DemandCurve, FeasibleBox, ModelSpec, UnitMeanDistribution};
use crate::optimizer::{OptimizerConfig, StepSchedule};

/// Queueing model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Exponential interarrivals and services.
    Mm1,
    /// Exponential interarrivals, gamma services with coefficient of variation `cs`.
    Mg1,
    /// Erlang-2 interarrivals, exponential services.
    E2m1,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::Mm1, Setting::Mg1, Setting::E2m1];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Mm1 => "mm1",
            Setting::Mg1 => "mg1",
            Setting::E2m1 => "e2m1",
        }
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|set| set.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown setting {s:?}, expected one of mm1, mg1, e2m1")))
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which study a preset is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Convergence,
    Coverage,
    Sweep,
    StepSizes,
}

impl Study {
    pub const ALL: [Study; 4] = [Study::Convergence, Study::Coverage, Study::Sweep, Study::StepSizes];

    pub fn name(self) -> &'static str {
        match self {
            Study::Convergence => "convergence",
            Study::Coverage => "coverage",
            Study::Sweep => "sweep",
            Study::StepSizes => "stepsizes",
        }
    }
}

impl std::str::FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Study::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown study {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub market_size: f64,
    pub offset: f64,
    pub holding_cost: f64,
    pub cost: CostFunction,
    pub mu_bounds: [f64; 2],
    pub p_bounds: [f64; 2],
    /// Service-time coefficient of variation; only read by `mg1`.
    #[serde(default = "one")]
    pub cs: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerParams {
    pub schedule: StepSchedule,
    /// Customer budget per replication.
    pub customers: u64,
    /// `0` runs the single-sample algorithm, positive values the batch baseline.
    pub batch_coefficients: Vec<f64>,
    pub initial_mu: f64,
    pub initial_p: f64,
    /// Start each batch of the baseline from an empty queue instead of
    /// where the previous batch left it.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reset_batches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceParams {
    /// Two-sided confidence levels.
    pub levels: Vec<f64>,
    /// Directions in `(mu, p)` coordinates; normalized before use.
    pub directions: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub cs_min: f64,
    pub cs_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub replications: u64,
    pub seed: u64,
    /// Also split regret into suboptimality and nonstationarity.
    #[serde(default)]
    pub decompose_regret: bool,
    pub model: ModelParams,
    pub optimizer: OptimizerParams,
    pub inference: InferenceParams,
    pub sweep: SweepParams,
    /// `(c_p, c_mu)` pairs for the step-size study, each run as `c / (1 + t)`.
    pub step_pairs: Vec<[f64; 2]>,
}

impl ExperimentConfig {
    /// Defaults for a setting and study.
    pub fn preset(setting: Setting, study: Study) -> Self {
        let model = match setting {
            Setting::Mm1 => ModelParams {
                market_size: 10.0,
                offset: 4.1,
                holding_cost: 1.0,
                cost: CostFunction::Quadratic(0.2),
                mu_bounds: [6.56, 15.0],
                p_bounds: [3.5, 10.0],
                cs: 1.0,
            },
            Setting::Mg1 | Setting::E2m1 => ModelParams {
                market_size: 10.0,
                offset: 4.1,
                holding_cost: 1.0,
                cost: CostFunction::Linear(1.0),
                mu_bounds: [6.5, 10.0],
                p_bounds: [3.5, 7.0],
                cs: 1.0,
            },
        };
        let (schedule, replications, batch_coefficients) = match study {
            Study::Coverage => (StepSchedule::Polynomial { c_p: 1.0, c_mu: 20.0, alpha: 0.99 }, 500, vec![0.0]),
            Study::Sweep => (StepSchedule::Linear { gamma_p: 1.25, gamma_mu: 12.5 }, 20, vec![0.0]),
            Study::StepSizes => (StepSchedule::Polynomial { c_p: 1.0, c_mu: 1.0, alpha: 1.0 }, 200, vec![0.0]),
            Study::Convergence => (
                StepSchedule::Linear { gamma_p: 1.25, gamma_mu: 12.5 },
                200,
                vec![0.0, 1.0, 5.0, 10.0, 20.0],
            ),
        };
        Self {
            setting,
            replications,
            seed: 2024,
            decompose_regret: study == Study::Convergence,
            model,
            optimizer: OptimizerParams {
                schedule,
                customers: 100_000,
                batch_coefficients,
                initial_mu: 8.0,
                initial_p: 3.5,
                reset_batches: false,
            },
            inference: InferenceParams { levels: vec![0.95], directions: vec![[1.0, 0.0], [0.0, 1.0]] },
            sweep: SweepParams { cs_min: 0.1, cs_max: 3.0, points: 50 },
            step_pairs: vec![[1.0, 1.0], [1.0, 5.0], [5.0, 1.0], [5.0, 5.0], [1.0, 10.0]],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// The model at the configured service variability.
    pub fn model(&self) -> Result<ModelSpec> {
        self.model_with_cs(self.model.cs)
    }

    /// The model with service coefficient of variation `cs` (only `mg1`
    /// depends on it).
    pub fn model_with_cs(&self, cs: f64) -> Result<ModelSpec> {
        let (interarrival, service) = match self.setting {
            Setting::Mm1 => (UnitMeanDistribution::Exponential, UnitMeanDistribution::Exponential),
            Setting::Mg1 => (UnitMeanDistribution::Exponential, UnitMeanDistribution::from_cv(cs)?),
            Setting::E2m1 => (UnitMeanDistribution::erlang(2), UnitMeanDistribution::Exponential),
        };
        let m = &self.model;
        ModelSpec::new(
            interarrival,
            service,
            DemandCurve::new(m.market_size, m.offset)?,
            m.cost,
            m.holding_cost,
            FeasibleBox::new(m.mu_bounds, m.p_bounds)?,
        )
    }

    pub fn initial_params(&self) -> ControlParams {
        ControlParams::new(self.optimizer.initial_mu, self.optimizer.initial_p)
    }

    /// Optimizer settings for one batch coefficient, budgeted in customers.
    pub fn optimizer_config(&self, schedule: StepSchedule, batch_coefficient: f64) -> OptimizerConfig {
        let customers = self.optimizer.customers;
        let iterations = if batch_coefficient == 0.0 { customers } else { u64::MAX };
        let mut cfg = OptimizerConfig::new(schedule, iterations, self.initial_params())
            .with_batch_coefficient(batch_coefficient)
            .with_customer_budget(customers);
        cfg.reset_batches = self.optimizer.reset_batches;
        cfg
    }

    pub fn directions(&self) -> Result<Vec<Direction>> {
        self.inference.directions.iter().map(|&v| Direction::new(v)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.model()?;
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be positive".into()));
        }
        let o = &self.optimizer;
        if o.customers == 0 {
            return Err(Error::InvalidConfig("customer budget must be positive".into()));
        }
        if o.batch_coefficients.is_empty() {
            return Err(Error::InvalidConfig("batch_coefficients must not be empty".into()));
        }
        for &b in &o.batch_coefficients {
            self.optimizer_config(o.schedule, b).validate(&model)?;
        }
        for &l in &self.inference.levels {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::InvalidConfig(format!("confidence level must lie in (0, 1), got {l}")));
            }
        }
        self.directions()?;
        let s = &self.sweep;
        if !(s.cs_min > 0.0 && s.cs_min <= s.cs_max && s.points >= 1) {
            return Err(Error::InvalidConfig(format!("bad sweep range {s:?}")));
        }
        for &[c_p, c_mu] in &self.step_pairs {
            StepSchedule::Polynomial { c_p, c_mu, alpha: 1.0 }.validate()?;
        }
        Ok(())
    }

    /// Evenly spaced `cs` values of the sweep.
    pub fn cs_grid(&self) -> Vec<f64> {
        let s = &self.sweep;
        if s.points == 1 {
            return vec![s.cs_min];
        }
        let h = (s.cs_max - s.cs_min) / (s.points - 1) as f64;
        (0..s.points).map(|i| s.cs_min + h * i as f64).collect()
    }
}
