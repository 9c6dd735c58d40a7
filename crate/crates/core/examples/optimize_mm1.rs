//! One single-sample run on the M/M/1 setting, printing the iterate at a
//! few customer counts and writing the full trace as CSV.
//!
//!     cargo run --release --example optimize_mm1 -- trace.csv

use std::fs::File;
use std::io::BufWriter;

use samcmc::experiments::{ExperimentConfig, Setting, Study};
use samcmc::{oracles, samcmc_run, OptimizerConfig, QueueStreams, StepSchedule};

fn main() -> samcmc::Result<()> {
    let cfg = ExperimentConfig::preset(Setting::Mm1, Study::Convergence);
    let model = cfg.model()?;
    let opt = oracles::optimum(&model)?;

    let schedule = StepSchedule::Linear { gamma_p: 1.25, gamma_mu: 12.5 };
    let run = OptimizerConfig::new(schedule, 100_000, cfg.initial_params());
    let trace = samcmc_run(&model, &run, &mut QueueStreams::from_seed(11))?;

    println!("optimum  mu = {:.4}  p = {:.4}", opt.params.mu, opt.params.p);
    for t in [1usize, 10, 100, 1_000, 10_000, 100_000] {
        let th = trace.iterates[t];
        println!("t = {t:>6}  mu = {:.4}  p = {:.4}  |err|^2 = {:.3e}", th.mu, th.p, th.dist_sq(&opt.params));
    }

    if let Some(path) = std::env::args().nth(1) {
        trace.write_csv(&mut BufWriter::new(File::create(&path)?))?;
        println!("wrote {} customers to {path}", trace.customer_count());
    }
    Ok(())
}
