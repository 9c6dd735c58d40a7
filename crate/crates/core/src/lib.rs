//! Online pricing and capacity sizing for a GI/GI/1 queue.
//!
//! The control `(mu, p)` is updated after every served customer by projected
//! stochastic gradient descent, using an IPA gradient computed from the
//! queue's current waiting time and observed busy period. The running
//! average of the iterates carries an online confidence interval that costs
//! constant work per step.
//!
//! | module | contents |
//! |---|---|
//! | [`model`] | unit-mean variates, demand curve, staffing cost, feasible box |
//! | [`queue`] | Lindley chain at enter-service epochs, per-customer cost |
//! | [`optimizer`] | IPA gradient, step schedules, single-sample and batch runs |
//! | [`inference`] | running average, O-statistics, critical values, intervals |
//! | [`oracles`] | M/M/1, Pollaczek-Khinchine and GI/M/1 steady states, optimum search |
//! | [`regret`] | cumulative regret and its decomposition |
//! | [`experiments`] | configuration, replicated studies, CSV/JSON output |

pub mod error;
pub mod experiments;
pub mod inference;
pub mod model;
pub mod oracles;
pub mod optimizer;
pub mod queue;
pub mod regret;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use inference::{ConfidenceInterval, CriticalValueTable, Direction, InferenceState};
pub use model::{ControlParams, CostFunction, DemandCurve, FeasibleBox, ModelSpec, UnitMeanDistribution};
pub use optimizer::{goliq_run, gradient_h, samcmc_run, GradientEstimate, OptimizerConfig, RunTrace, StepSchedule};
pub use oracles::{find_optimum, Optimum, SteadyStateSummary};
pub use queue::{QueueState, TransitionRecord};
pub use regret::{cumulative_regret, regret_decomposition, RegretSeries};
pub use rng::QueueStreams;

/// Float formatting used in every CSV: 17 significant digits, which
/// round-trips any `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
