use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use samcmc::experiments::{self, AggregateReport, ExperimentConfig, Setting, Study};
use samcmc::inference::simulate_critical_values;
use samcmc::{oracles, CriticalValueTable, Result};

#[derive(Parser)]
#[command(name = "samcmc", version, about = "Online pricing and staffing of a GI/GI/1 queue")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Base seed (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replications (critval: Brownian paths)
    #[arg(long, global = true)]
    reps: Option<u64>,
    /// Customers per replication
    #[arg(long, global = true)]
    iters: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state optimum of a setting
    Oracle {
        setting: Setting,
        /// Service coefficient of variation (mg1 only)
        #[arg(long)]
        cs: Option<f64>,
    },
    /// Convergence and regret of the single-sample and batch algorithms
    Optimize { config: String },
    /// Coverage of the online confidence intervals
    Coverage { config: String },
    /// Optima and final iterates across service variability (mg1)
    Sweep { config: String },
    /// Robustness to per-coordinate step constants
    Stepsizes { config: String },
    /// Regenerates the critical values of the pivot
    Critval {
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// Prints a preset configuration as TOML
    Config { setting: Setting, study: Study },
}

/// A config file path, or a setting name for the built-in preset.
fn load_config(arg: &str, study: Study, common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = if Path::new(arg).exists() {
        ExperimentConfig::load(Path::new(arg))?
    } else {
        ExperimentConfig::preset(arg.parse()?, study)
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.reps {
        cfg.replications = r;
    }
    if let Some(n) = common.iters {
        cfg.optimizer.customers = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_fits(report: &AggregateReport) {
    println!("{:<16} {:>12} {:>10} {:>12} {:>10} {:>8}", "variant", "final error", "slope", "regret", "R2(ln)", "R/T dec");
    for v in &report.variants {
        let err = v.final_mean("error").unwrap_or(f64::NAN);
        let reg = v.final_mean("regret").unwrap_or(f64::NAN);
        let (slope, r2, dec) = v.fit.map_or((f64::NAN, f64::NAN, false), |f| {
            (f.error.slope, f.regret.r_squared, f.regret_rate_decreasing)
        });
        println!("{:<16} {err:>12.4e} {slope:>10.3} {reg:>12.2} {r2:>10.3} {dec:>8}", v.name);
    }
}

fn print_coverage(report: &AggregateReport, cfg: &ExperimentConfig) {
    let agg = &report.variants[0].aggregate;
    for col in agg.columns.iter().filter(|c| c.starts_with("covered_") && c.ends_with("_mean")) {
        let name = col.trim_start_matches("covered_").trim_end_matches("_mean");
        let width = agg.last(&format!("hi_{name}_mean")).zip(agg.last(&format!("lo_{name}_mean")));
        println!(
            "{name:<10} coverage {:.3}  mean width {:.4e}",
            agg.last(col).unwrap_or(f64::NAN),
            width.map_or(f64::NAN, |(h, l)| h - l)
        );
    }
    println!("{} replications, {} customers", cfg.replications, cfg.optimizer.customers);
}

fn print_sweep(report: &AggregateReport) {
    let oracle = report.extra("oracle").expect("sweep reports carry the oracle curve");
    let agg = &report.variants[0].aggregate;
    let (mu, p) = (agg.column("mu_mean").unwrap_or_default(), agg.column("p_mean").unwrap_or_default());
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "cs", "mu*", "p*", "mu_T", "p_T");
    for (i, cs) in oracle.keys.iter().enumerate() {
        println!("{cs:>6.3} {:>10.5} {:>10.5} {:>10.5} {:>10.5}", oracle.rows[i][0], oracle.rows[i][1], mu[i], p[i]);
    }
}

fn run_study(study: Study, arg: &str, common: &Common) -> Result<()> {
    let cfg = load_config(arg, study, common)?;
    let start = Instant::now();
    let report = experiments::with_threads(common.threads, || experiments::run_study(study, &cfg))??;
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("results")).join(format!("{}_{}", study.name(), cfg.setting));
    report.write(&dir, &cfg)?;
    if let Some(o) = report.optimum {
        println!("optimum mu* = {:.6}, p* = {:.6}, f* = {:.6}", o.params.mu, o.params.p, o.value);
    }
    match study {
        Study::Coverage => print_coverage(&report, &cfg),
        Study::Sweep => print_sweep(&report),
        Study::Convergence | Study::StepSizes => print_fits(&report),
    }
    eprintln!("wrote {} in {:.1?}", dir.display(), start.elapsed());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    match cli.command {
        Command::Oracle { setting, cs } => {
            let mut cfg = ExperimentConfig::preset(setting, Study::Convergence);
            if let Some(cs) = cs {
                cfg.model.cs = cs;
            }
            let model = cfg.model()?;
            let start = Instant::now();
            let opt = oracles::optimum(&model)?;
            let ss = oracles::steady_state(&model, &opt.params)?;
            println!("setting  {setting}");
            println!("mu*      {:.6}", opt.params.mu);
            println!("p*       {:.6}", opt.params.p);
            println!("f*       {:.6}", opt.value);
            println!("rho      {:.6}", ss.rho);
            println!("E[Q]     {:.6}", ss.mean_queue);
            eprintln!("solved in {:.1?}", start.elapsed());
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir)?;
                let json = serde_json::json!({
                    "setting": setting, "mu": opt.params.mu, "p": opt.params.p, "value": opt.value,
                    "rho": ss.rho, "mean_queue": ss.mean_queue,
                });
                std::fs::write(dir.join(format!("oracle_{setting}.json")), serde_json::to_string_pretty(&json)? + "\n")?;
            }
        }
        Command::Optimize { config } => run_study(Study::Convergence, &config, common)?,
        Command::Coverage { config } => run_study(Study::Coverage, &config, common)?,
        Command::Sweep { config } => run_study(Study::Sweep, &config, common)?,
        Command::Stepsizes { config } => run_study(Study::StepSizes, &config, common)?,
        Command::Critval { steps } => {
            let reps = common.reps.unwrap_or(50_000) as usize;
            let levels: Vec<f64> = CriticalValueTable::default().entries().iter().map(|e| e.0).collect();
            let start = Instant::now();
            let table = experiments::with_threads(common.threads, || {
                simulate_critical_values(steps, reps, &levels, common.seed.unwrap_or(2024))
            })??;
            let mut out = Vec::new();
            table.write_csv(&mut out)?;
            print!("{}", String::from_utf8_lossy(&out));
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("critval.csv"), &out)?;
            }
            eprintln!("{reps} paths of {steps} steps in {:.1?}", start.elapsed());
        }
        Command::Config { setting, study } => print!("{}", ExperimentConfig::preset(setting, study).to_toml()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
