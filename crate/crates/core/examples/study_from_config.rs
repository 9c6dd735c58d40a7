//! Loads a study from TOML, writes its CSVs and manifest, and re-aggregates
//! the replication files from disk.
//!
//!     cargo run --release --example study_from_config -- configs/mm1_convergence.toml out/

use std::path::PathBuf;

use samcmc::experiments::{aggregate_directory, run_study, ExperimentConfig, Study};

fn main() -> samcmc::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "configs/mm1_convergence.toml".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "results/example".into()));

    let mut cfg = ExperimentConfig::load(path.as_ref())?;
    // keep the demo short
    cfg.replications = cfg.replications.min(20);
    cfg.optimizer.customers = cfg.optimizer.customers.min(20_000);

    let study = if cfg.optimizer.batch_coefficients.len() > 1 { Study::Convergence } else { Study::StepSizes };
    let report = run_study(study, &cfg)?;
    report.write(&out, &cfg)?;

    for v in &report.variants {
        let again = aggregate_directory(&out.join(&v.name))?;
        println!("{:<12} reloaded aggregate identical: {}", v.name, again == v.aggregate);
    }
    Ok(())
}
