//! Optimal price and service rate of M/GI/1 as service variability grows,
//! with the mean final iterate of a few short runs beside them.

use samcmc::experiments::{run_cs_sweep, ExperimentConfig, Setting, Study};

fn main() -> samcmc::Result<()> {
    let mut cfg = ExperimentConfig::preset(Setting::Mg1, Study::Sweep);
    cfg.sweep.points = 12;
    cfg.replications = 5;
    cfg.optimizer.customers = 30_000;

    let report = run_cs_sweep(&cfg)?;
    let oracle = report.extra("oracle").expect("oracle curve");
    let runs = &report.variants[0].aggregate;
    let (mu, p) = (runs.column("mu_mean").unwrap(), runs.column("p_mean").unwrap());
    println!("{:>6} {:>9} {:>9} {:>9} {:>9}", "cs", "mu*", "p*", "mu_T", "p_T");
    for (i, cs) in oracle.keys.iter().enumerate() {
        println!(
            "{cs:>6.2} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            oracle.rows[i][0], oracle.rows[i][1], mu[i], p[i]
        );
    }
    Ok(())
}
