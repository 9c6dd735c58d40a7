//! Confidence intervals for the averaged iterate, maintained in O(1) per
//! step alongside a single optimizer run.

use samcmc::experiments::{ExperimentConfig, Setting, Study};
use samcmc::optimizer::run_with;
use samcmc::{oracles, CriticalValueTable, Direction, InferenceState, QueueStreams};

fn main() -> samcmc::Result<()> {
    let cfg = ExperimentConfig::preset(Setting::Mm1, Study::Coverage);
    let model = cfg.model()?;
    let opt = oracles::optimum(&model)?;
    let q = CriticalValueTable::default().two_sided(0.95)?;

    let mut mu = InferenceState::new(Direction::SERVICE_RATE);
    let mut p = InferenceState::new(Direction::PRICE);
    let run = cfg.optimizer_config(cfg.optimizer.schedule, 0.0);
    let mut streams = QueueStreams::from_seed(3);

    println!("true mu* = {:.4}, p* = {:.4}", opt.params.mu, opt.params.p);
    run_with(&model, &run, &mut streams, |_| {}, |ev| {
        mu.update(&ev.params);
        p.update(&ev.params);
        if ev.iteration.is_power_of_two() && ev.iteration >= 1024 || ev.iteration == run.iterations {
            let (a, b) = (mu.interval_with(q, 0.95), p.interval_with(q, 0.95));
            println!(
                "t = {:>6}  mu in [{:.4}, {:.4}]  p in [{:.4}, {:.4}]",
                ev.iteration, a.lo, a.hi, b.lo, b.hi
            );
        }
    })?;
    Ok(())
}
