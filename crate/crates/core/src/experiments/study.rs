//! Replicated studies. Each replication owns its streams and returns a
//! checkpoint [`Table`]; aggregation is a single ordered reduce, so reports
//! do not depend on the thread count.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Setting, Study};
use super::output::{aggregate, write_replications, Table};
use crate::error::{Error, Result};
use crate::inference::{CriticalValueTable, Direction, InferenceState};
use crate::model::{ControlParams, ModelSpec};
use crate::optimizer::{run_with, StepSchedule};
use crate::oracles::{self, Optimum};
use crate::regret::RegretAccumulator;
use crate::rng::QueueStreams;
use crate::stats::{checkpoint_grid, linear_fit, LinearFit};

/// Version string recorded in manifests.
pub const VERSION: &str = concat!("samcmc-v", env!("CARGO_PKG_VERSION"));

/// Log-log error slope and regret-vs-log fit over the last decade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Fit of `log10(mean error)` on `log10(customers)`.
    pub error: LinearFit,
    /// Fit of mean regret on `ln(customers)`.
    pub regret: LinearFit,
    /// Whether `R / customers` strictly decreases over the last three checkpoints.
    pub regret_rate_decreasing: bool,
}

impl TailFit {
    /// Needs `error_mean` and `regret_mean` columns keyed by customers.
    pub fn of(aggregate: &Table) -> Option<Self> {
        let err = aggregate.column("error_mean")?;
        let reg = aggregate.column("regret_mean")?;
        let last = *aggregate.keys.last()?;
        let tail: Vec<usize> = (0..aggregate.len()).filter(|&i| aggregate.keys[i] >= last / 10.0).collect();
        if tail.len() < 3 {
            return None;
        }
        let x10: Vec<f64> = tail.iter().map(|&i| aggregate.keys[i].log10()).collect();
        let xe: Vec<f64> = tail.iter().map(|&i| aggregate.keys[i].ln()).collect();
        let ye: Vec<f64> = tail.iter().map(|&i| err[i].log10()).collect();
        let yr: Vec<f64> = tail.iter().map(|&i| reg[i]).collect();
        let rate: Vec<f64> = tail.iter().rev().take(3).rev().map(|&i| reg[i] / aggregate.keys[i]).collect();
        Some(Self {
            error: linear_fit(&x10, &ye),
            regret: linear_fit(&xe, &yr),
            regret_rate_decreasing: rate.windows(2).all(|w| w[1] < w[0]),
        })
    }
}

/// Results of one algorithm variant.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantReport {
    pub name: String,
    pub replications: Vec<Table>,
    pub aggregate: Table,
    pub fit: Option<TailFit>,
}

impl VariantReport {
    fn new(name: String, replications: Vec<Table>) -> Result<Self> {
        let aggregate = aggregate(&replications)?;
        let fit = TailFit::of(&aggregate);
        Ok(Self { name, replications, aggregate, fit })
    }

    pub fn final_mean(&self, column: &str) -> Option<f64> {
        self.aggregate.last(&format!("{column}_mean"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub study: Study,
    pub setting: Setting,
    pub optimum: Option<Optimum>,
    pub variants: Vec<VariantReport>,
    /// Study-specific side tables, written as `<name>.csv`.
    pub extra: Vec<(String, Table)>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    study: &'static str,
    setting: Setting,
    variants: Vec<&'a str>,
    optimum: Option<[f64; 3]>,
    config: &'a ExperimentConfig,
}

impl AggregateReport {
    pub fn variant(&self, name: &str) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.name == name)
    }

    pub fn extra(&self, name: &str) -> Option<&Table> {
        self.extra.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// `variant,error_slope,error_r2,regret_slope,regret_r2,regret_rate_decreasing`.
    pub fn fits_table(&self) -> Option<String> {
        use crate::fmt_f64 as f;
        let mut out = String::from("variant,error_slope,error_r2,regret_slope,regret_r2,regret_rate_decreasing\n");
        let mut any = false;
        for v in &self.variants {
            if let Some(fit) = v.fit {
                any = true;
                out += &format!(
                    "{},{},{},{},{},{}\n",
                    v.name,
                    f(fit.error.slope),
                    f(fit.error.r_squared),
                    f(fit.regret.slope),
                    f(fit.regret.r_squared),
                    fit.regret_rate_decreasing
                );
            }
        }
        any.then_some(out)
    }

    /// Writes replication CSVs, aggregates, side tables, fits and a JSON
    /// manifest under `dir`.
    pub fn write(&self, dir: &Path, config: &ExperimentConfig) -> Result<()> {
        fs::create_dir_all(dir)?;
        for v in &self.variants {
            write_replications(&dir.join(&v.name), &v.replications)?;
            v.aggregate.write_file(&dir.join(format!("{}.csv", v.name)))?;
        }
        for (name, t) in &self.extra {
            t.write_file(&dir.join(format!("{name}.csv")))?;
        }
        if let Some(fits) = self.fits_table() {
            fs::write(dir.join("fits.csv"), fits)?;
        }
        let manifest = Manifest {
            version: VERSION,
            study: self.study.name(),
            setting: self.setting,
            variants: self.variants.iter().map(|v| v.name.as_str()).collect(),
            optimum: self.optimum.map(|o| [o.params.mu, o.params.p, o.value]),
            config,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

fn replicate<F>(reps: u64, f: F) -> Result<Vec<Table>>
where
    F: Fn(u64) -> Result<Table> + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

fn variant_name(batch_coefficient: f64) -> String {
    if batch_coefficient == 0.0 {
        "samcmc".to_owned()
    } else {
        format!("goliq_bc{batch_coefficient}")
    }
}

/// Error, iterate, and regret at each checkpoint of one replication.
pub fn trajectory_table(
    model: &ModelSpec,
    config: &ExperimentConfig,
    optimum: &Optimum,
    schedule: StepSchedule,
    batch_coefficient: f64,
    replication: u64,
) -> Result<Table> {
    let decompose = config.decompose_regret;
    let mut columns: Vec<String> = ["error", "mu", "p", "regret"].map(String::from).into();
    if decompose {
        columns.extend(["nonstationarity", "suboptimality"].map(String::from));
    }
    let mut table = Table::new("customers", columns);
    let grid = checkpoint_grid(config.optimizer.customers);
    let opt_cfg = config.optimizer_config(schedule, batch_coefficient);
    let mut acc = RegretAccumulator::new(model, optimum, decompose)?;
    let mut streams = QueueStreams::for_replication(config.seed, replication);
    let mut failure = None;
    let mut k = 0;
    run_with(
        model,
        &opt_cfg,
        &mut streams,
        |c| {
            if failure.is_some() {
                return;
            }
            if let Err(e) = acc.push(c) {
                failure = Some(e);
                return;
            }
            if k < grid.len() && acc.customers() == grid[k] {
                let mut row = vec![c.params.dist_sq(&optimum.params), c.params.mu, c.params.p, acc.regret()];
                if decompose {
                    row.push(acc.nonstationarity().unwrap_or_default());
                    row.push(acc.suboptimality().unwrap_or_default());
                }
                table.push(grid[k] as f64, row);
                k += 1;
            }
        },
        |_| {},
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(table),
    }
}

/// Single-sample and batch variants on common random numbers.
pub fn run_convergence_study(config: &ExperimentConfig) -> Result<AggregateReport> {
    config.validate()?;
    let model = config.model()?;
    let optimum = oracles::optimum(&model)?;
    let schedule = config.optimizer.schedule;
    let mut variants = Vec::new();
    for &b in &config.optimizer.batch_coefficients {
        let reps = replicate(config.replications, |r| trajectory_table(&model, config, &optimum, schedule, b, r))?;
        variants.push(VariantReport::new(variant_name(b), reps)?);
    }
    Ok(AggregateReport { study: Study::Convergence, setting: config.setting, optimum: Some(optimum), variants, extra: vec![] })
}

/// The five `c / (1 + t)` pairs, all on the same streams.
pub fn run_stepsize_robustness(config: &ExperimentConfig) -> Result<AggregateReport> {
    config.validate()?;
    let model = config.model()?;
    let optimum = oracles::optimum(&model)?;
    let mut variants = Vec::new();
    for &[c_p, c_mu] in &config.step_pairs {
        let schedule = StepSchedule::Polynomial { c_p, c_mu, alpha: 1.0 };
        let reps = replicate(config.replications, |r| trajectory_table(&model, config, &optimum, schedule, 0.0, r))?;
        variants.push(VariantReport::new(format!("cp{c_p}_cmu{c_mu}"), reps)?);
    }
    Ok(AggregateReport { study: Study::StepSizes, setting: config.setting, optimum: Some(optimum), variants, extra: vec![] })
}

fn direction_label(i: usize, d: Direction) -> String {
    if d == Direction::SERVICE_RATE {
        "mu".to_owned()
    } else if d == Direction::PRICE {
        "p".to_owned()
    } else {
        format!("v{i}")
    }
}

/// Percent label of a confidence level, e.g. `95` or `97.5`.
pub fn level_label(level: f64) -> String {
    format!("{}", (level * 1e4).round() / 100.0)
}

/// Column names of the coverage tables.
pub fn coverage_columns(directions: &[Direction], levels: &[f64]) -> Vec<String> {
    let mut cols = vec!["mu_bar".to_owned(), "p_bar".to_owned()];
    for (i, &d) in directions.iter().enumerate() {
        let name = direction_label(i, d);
        cols.push(format!("est_{name}"));
        for &l in levels {
            let l = level_label(l);
            cols.extend([format!("lo_{name}_{l}"), format!("hi_{name}_{l}"), format!("covered_{name}_{l}")]);
        }
    }
    cols
}

fn coverage_table(
    model: &ModelSpec,
    config: &ExperimentConfig,
    truth: &ControlParams,
    directions: &[Direction],
    quantiles: &[f64],
    replication: u64,
) -> Result<Table> {
    let levels = &config.inference.levels;
    let mut table = Table::new("customers", coverage_columns(directions, levels));
    let grid = checkpoint_grid(config.optimizer.customers);
    let opt_cfg = config.optimizer_config(config.optimizer.schedule, 0.0);
    let mut states: Vec<InferenceState> = directions.iter().map(|&d| InferenceState::new(d)).collect();
    let mut streams = QueueStreams::for_replication(config.seed, replication);
    let mut k = 0;
    run_with(
        model,
        &opt_cfg,
        &mut streams,
        |_| {},
        |ev| {
            states.iter_mut().for_each(|s| s.update(&ev.params));
            if k < grid.len() && ev.iteration == grid[k] {
                let mean = states[0].mean();
                let mut row = vec![mean.mu, mean.p];
                for s in &states {
                    row.push(s.estimate());
                    let target = s.direction().dot(truth);
                    for (&l, &q) in levels.iter().zip(quantiles) {
                        let ci = s.interval_with(q, l);
                        row.extend([ci.lo, ci.hi, if ci.contains(target) { 1.0 } else { 0.0 }]);
                    }
                }
                table.push(grid[k] as f64, row);
                k += 1;
            }
        },
    )?;
    Ok(table)
}

/// Coverage of the online intervals around the oracle optimum.
pub fn run_coverage_study(config: &ExperimentConfig) -> Result<AggregateReport> {
    let optimum = oracles::optimum(&config.model()?)?;
    run_coverage_study_against(config, &optimum.params).map(|mut r| {
        r.optimum = Some(optimum);
        r
    })
}

/// Coverage against an arbitrary `truth`; a wrong truth should rarely be covered.
pub fn run_coverage_study_against(config: &ExperimentConfig, truth: &ControlParams) -> Result<AggregateReport> {
    config.validate()?;
    if !matches!(config.optimizer.schedule, StepSchedule::Polynomial { .. }) {
        return Err(Error::InvalidConfig("the coverage study needs a polynomial step schedule".into()));
    }
    let model = config.model()?;
    let directions = config.directions()?;
    let table = CriticalValueTable::default();
    let quantiles = config.inference.levels.iter().map(|&l| table.two_sided(l)).collect::<Result<Vec<f64>>>()?;
    let reps = replicate(config.replications, |r| coverage_table(&model, config, truth, &directions, &quantiles, r))?;

    let mut finals = Table::new("rep", vec!["mu_bar".into(), "p_bar".into()]);
    for (r, t) in reps.iter().enumerate() {
        finals.push(r as f64, t.rows.last().map(|row| row[..2].to_vec()).unwrap_or_default());
    }
    let variant = VariantReport::new("samcmc".into(), reps)?;
    Ok(AggregateReport {
        study: Study::Coverage,
        setting: config.setting,
        optimum: None,
        variants: vec![variant],
        extra: vec![("final_estimates".into(), finals)],
    })
}

/// Mean interval width per checkpoint, from a coverage report.
pub fn mean_widths(report: &AggregateReport, direction: &str, level: f64) -> Option<Vec<f64>> {
    let agg = &report.variants.first()?.aggregate;
    let l = level_label(level);
    let lo = agg.column(&format!("lo_{direction}_{l}_mean"))?;
    let hi = agg.column(&format!("hi_{direction}_{l}_mean"))?;
    Some(hi.iter().zip(&lo).map(|(h, l)| h - l).collect())
}

/// Oracle optimum and final iterates across the `cs` grid (M/GI/1 only).
pub fn run_cs_sweep(config: &ExperimentConfig) -> Result<AggregateReport> {
    config.validate()?;
    if config.setting != Setting::Mg1 {
        return Err(Error::InvalidConfig(format!("the cs sweep needs the mg1 setting, got {}", config.setting)));
    }
    let grid = config.cs_grid();
    let models = grid.iter().map(|&cs| config.model_with_cs(cs)).collect::<Result<Vec<_>>>()?;
    let optima = models.par_iter().map(oracles::optimum).collect::<Result<Vec<_>>>()?;

    let mut oracle = Table::new("cs", vec!["mu_star".into(), "p_star".into(), "value".into()]);
    for (cs, o) in grid.iter().zip(&optima) {
        oracle.push(*cs, vec![o.params.mu, o.params.p, o.value]);
    }

    let opt_cfg = config.optimizer_config(config.optimizer.schedule, 0.0);
    let reps = replicate(config.replications, |r| {
        let mut t = Table::new("cs", vec!["mu".into(), "p".into(), "error".into()]);
        for ((cs, model), o) in grid.iter().zip(&models).zip(&optima) {
            let mut streams = QueueStreams::for_replication(config.seed, r);
            let (theta, _) = run_with(model, &opt_cfg, &mut streams, |_| {}, |_| {})?;
            t.push(*cs, vec![theta.mu, theta.p, theta.dist_sq(&o.params)]);
        }
        Ok(t)
    })?;
    Ok(AggregateReport {
        study: Study::Sweep,
        setting: config.setting,
        optimum: None,
        variants: vec![VariantReport::new("samcmc".into(), reps)?],
        extra: vec![("oracle".into(), oracle)],
    })
}

pub fn run_study(study: Study, config: &ExperimentConfig) -> Result<AggregateReport> {
    match study {
        Study::Convergence => run_convergence_study(config),
        Study::Coverage => run_coverage_study(config),
        Study::Sweep => run_cs_sweep(config),
        Study::StepSizes => run_stepsize_robustness(config),
    }
}
