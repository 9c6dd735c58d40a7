//! Single-sample updates against growing batches at an equal customer
//! budget, on common random numbers.

use samcmc::experiments::{run_convergence_study, ExperimentConfig, Setting, Study};

fn main() -> samcmc::Result<()> {
    let mut cfg = ExperimentConfig::preset(Setting::Mm1, Study::Convergence);
    cfg.replications = 50;
    cfg.optimizer.customers = 20_000;
    cfg.decompose_regret = false;

    let report = run_convergence_study(&cfg)?;
    println!("{:<12} {:>14} {:>12}", "variant", "mean |err|^2", "regret");
    for v in &report.variants {
        println!(
            "{:<12} {:>14.4e} {:>12.1}",
            v.name,
            v.final_mean("error").unwrap_or(f64::NAN),
            v.final_mean("regret").unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
