//! Cumulative regret of one run, split into the suboptimality of the
//! visited controls and the cost of the queue not being in steady state.

use samcmc::experiments::{ExperimentConfig, Setting, Study};
use samcmc::{oracles, regret_decomposition, ControlParams, samcmc_run, OptimizerConfig, QueueStreams, StepSchedule};

fn main() -> samcmc::Result<()> {
    let model = ExperimentConfig::preset(Setting::Mm1, Study::Convergence).model()?;
    let opt = oracles::optimum(&model)?;
    let run = OptimizerConfig::new(StepSchedule::Linear { gamma_p: 1.25, gamma_mu: 12.5 }, 50_000, ControlParams::new(8.0, 3.5));
    let trace = samcmc_run(&model, &run, &mut QueueStreams::from_seed(5))?;
    let r = regret_decomposition(&model, &trace, &opt)?;
    let (r1, r2) = (r.nonstationarity.as_ref().unwrap(), r.suboptimality.as_ref().unwrap());

    println!("{:>8} {:>12} {:>12} {:>12}", "n", "R", "R1", "R2");
    for n in [100usize, 1_000, 10_000, 50_000] {
        println!("{n:>8} {:>12.2} {:>12.2} {:>12.2}", r.regret[n - 1], r1[n - 1], r2[n - 1]);
    }
    Ok(())
}
