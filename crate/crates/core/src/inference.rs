//! Online confidence intervals from the trajectory average.
//!
//! For a unit direction `v` let `z_i = v'theta_bar_i` and
//!
//! ```text
//! sigma_t^2 = (1/t^2) * sum_{i<=t} i^2 (z_i - z_t)^2
//!           = (O1 - 2 O2 z_t + O3 z_t^2) / t^2
//! ```
//!
//! with `O1 = sum i^2 z_i^2`, `O2 = sum i^2 z_i`, `O3 = sum i^2`. This is the
//! rectangle-rule value of `int_0^1 (phi(r) - r phi(1))^2 dr` for the partial
//! sum process `phi(i/t) = i (z_i - z*) / sqrt(t)`, while `phi(1)` itself is
//! `sqrt(t) (z_t - z*)`. The studentized ratio is therefore
//! `sqrt(t) (z_t - z*) / sigma_t`, which converges to the pivot
//! `W(1) / sqrt(int_0^1 (W(r) - r W(1))^2 dr)` of a standard Brownian motion,
//! and the interval is `z_t -/+ q sigma_t / sqrt(t)`. Quantiles of the pivot
//! live in a [`CriticalValueTable`].

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ControlParams;
use crate::rng::critical_value_stream;

/// Unit vector in `(mu, p)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction([f64; 2]);

impl Direction {
    pub const SERVICE_RATE: Direction = Direction([1.0, 0.0]);
    pub const PRICE: Direction = Direction([0.0, 1.0]);

    /// Normalizes `v`; fails on a zero or non-finite vector.
    pub fn new(v: [f64; 2]) -> Result<Self> {
        let norm = v[0].hypot(v[1]);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidConfig(format!("direction must be a non-zero vector, got {v:?}")));
        }
        Ok(Self([v[0] / norm, v[1] / norm]))
    }

    pub fn components(&self) -> [f64; 2] {
        self.0
    }

    pub fn dot(&self, theta: &ControlParams) -> f64 {
        self.0[0] * theta.mu + self.0[1] * theta.p
    }
}

/// Fixed-size running state: the average and the three O-statistics.
///
/// The O-statistics are kept in centered form (their weight, the weighted
/// mean of the projected averages and the weighted sum of squares about
/// it), updated Welford-style. Expanding `O1 - 2 O2 z + O3 z^2` directly
/// loses most of its digits once the averages settle; the centered form is
/// a sum of non-negative terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceState {
    direction: Direction,
    t: u64,
    mean: [f64; 2],
    anchor: f64,
    weight: f64,
    center: f64,
    spread: f64,
}

impl InferenceState {
    pub fn new(direction: Direction) -> Self {
        Self { direction, t: 0, mean: [0.0; 2], anchor: 0.0, weight: 0.0, center: 0.0, spread: 0.0 }
    }

    /// Folds in the next iterate. Constant work per call.
    pub fn update(&mut self, theta: &ControlParams) {
        let t1 = self.t + 1;
        let n = t1 as f64;
        let x = theta.to_array();
        for (m, xi) in self.mean.iter_mut().zip(x) {
            *m += (xi - *m) / n;
        }
        let z_abs = self.direction.dot(&ControlParams::from_array(self.mean));
        if self.t == 0 {
            self.anchor = z_abs;
        }
        let z = z_abs - self.anchor;
        let w = n * n;
        self.weight += w;
        let delta = z - self.center;
        self.center += w * delta / self.weight;
        self.spread += w * delta * (z - self.center);
        self.t = t1;
    }

    pub fn count(&self) -> u64 {
        self.t
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn mean(&self) -> ControlParams {
        ControlParams::from_array(self.mean)
    }

    /// `v' theta_bar_t`.
    pub fn estimate(&self) -> f64 {
        self.direction.dot(&self.mean())
    }

    /// `(O1, O2, O3)` about the first projected average.
    pub fn o_statistics(&self) -> (f64, f64, f64) {
        let o2 = self.weight * self.center;
        (self.spread + o2 * self.center, o2, self.weight)
    }

    pub fn sigma(&self) -> f64 {
        if self.t == 0 {
            return 0.0;
        }
        let gap = self.estimate() - self.anchor - self.center;
        let n = self.t as f64;
        (self.spread.max(0.0) + self.weight * gap * gap).sqrt() / n
    }

    /// `sigma_t / sqrt(t)`, the scale of the interval.
    pub fn standard_error(&self) -> f64 {
        if self.t == 0 {
            return 0.0;
        }
        self.sigma() / (self.t as f64).sqrt()
    }

    /// Interval using the table's quantile at `level`.
    pub fn interval(&self, table: &CriticalValueTable, level: f64) -> Result<ConfidenceInterval> {
        let q = table.get(level)?;
        Ok(self.interval_with(q, level))
    }

    pub fn interval_with(&self, q: f64, level: f64) -> ConfidenceInterval {
        let center = self.estimate();
        let half = q * self.standard_error();
        ConfidenceInterval { lo: center - half, hi: center + half, level }
    }

    /// The pivot evaluated at `value`: `sqrt(t) (v'theta_bar_t - value) / sigma_t`.
    pub fn studentized(&self, value: f64) -> f64 {
        (self.estimate() - value) / self.standard_error()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lo <= value && value <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Same quantity as [`InferenceState::sigma`], recomputed from the whole
/// path of averages.
pub fn batch_sigma(direction: Direction, iterates: &[ControlParams]) -> f64 {
    let mut mean = [0.0; 2];
    let mut z = Vec::with_capacity(iterates.len());
    for (i, theta) in iterates.iter().enumerate() {
        let n = (i + 1) as f64;
        for (m, xi) in mean.iter_mut().zip(theta.to_array()) {
            *m += (xi - *m) / n;
        }
        z.push(direction.dot(&ControlParams::from_array(mean)));
    }
    let Some(&last) = z.last() else { return 0.0 };
    let t = z.len() as f64;
    let s: f64 = z.iter().enumerate().map(|(i, zi)| ((i + 1) as f64).powi(2) * (zi - last).powi(2)).sum();
    s.sqrt() / t
}

/// Quantiles `q` of the Brownian pivot, keyed by probability.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValueTable {
    entries: Vec<(f64, f64)>,
}

const LEVEL_TOLERANCE: f64 = 1e-9;

impl Default for CriticalValueTable {
    /// Published values from 1000-step, 50 000-path simulation.
    fn default() -> Self {
        Self::from_entries(vec![
            (0.01, -8.628),
            (0.025, -6.758),
            (0.05, -5.316),
            (0.10, -3.873),
            (0.50, 0.0),
            (0.90, 3.873),
            (0.95, 5.316),
            (0.975, 6.758),
            (0.99, 8.628),
        ])
    }
}

impl CriticalValueTable {
    pub fn from_entries(mut entries: Vec<(f64, f64)>) -> Self {
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { entries }
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn get(&self, level: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|(l, _)| (l - level).abs() < LEVEL_TOLERANCE)
            .map(|&(_, q)| q)
            .ok_or(Error::MissingCriticalValue(level))
    }

    /// Half-width multiplier for a two-sided interval of the given
    /// confidence: the quantile at `(1 + confidence) / 2`, since the pivot
    /// is symmetric.
    pub fn two_sided(&self, confidence: f64) -> Result<f64> {
        self.get(0.5 * (1.0 + confidence)).map_err(|_| Error::MissingCriticalValue(confidence))
    }

    /// Two-column `level,q` CSV.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "level,q")?;
        for (level, q) in &self.entries {
            writeln!(out, "{},{}", crate::fmt_f64(*level), crate::fmt_f64(*q))?;
        }
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("level,q") {
            return Err(Error::Parse("critical value table must start with 'level,q'".into()));
        }
        let mut entries = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("malformed row {line:?}")))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            entries.push((parse(a)?, parse(b)?));
        }
        Ok(Self::from_entries(entries))
    }
}

/// `h(W)` for a path given by its partial sums `s_1..s_n` (any scale).
pub fn pivot_of_partial_sums(partial_sums: &[f64]) -> f64 {
    let n = partial_sums.len() as f64;
    let end = *partial_sums.last().expect("non-empty path");
    let ss: f64 = partial_sums
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let bridge = s - ((i + 1) as f64 / n) * end;
            bridge * bridge
        })
        .sum();
    end / (ss / n).sqrt()
}

/// Samples of the pivot from `replications` discretized Brownian paths.
pub fn simulate_pivot_samples(steps: usize, replications: usize, seed: u64) -> Vec<f64> {
    (0..replications)
        .into_par_iter()
        .map_init(
            || vec![0.0; steps],
            |path, r| {
                let mut rng = critical_value_stream(seed, r as u64);
                let mut acc = 0.0;
                for s in path.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    acc += z;
                    *s = acc;
                }
                pivot_of_partial_sums(path)
            },
        )
        .collect()
}

/// Regenerates critical values by simulation.
pub fn simulate_critical_values(
    steps: usize,
    replications: usize,
    levels: &[f64],
    seed: u64,
) -> Result<CriticalValueTable> {
    if steps < 2 || replications < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 steps and 2 replications, got {steps} and {replications}"
        )));
    }
    if let Some(bad) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::InvalidConfig(format!("levels must lie in (0, 1), got {bad}")));
    }
    let mut samples = simulate_pivot_samples(steps, replications, seed);
    samples.sort_by(f64::total_cmp);
    Ok(CriticalValueTable::from_entries(levels.iter().map(|&l| (l, empirical_quantile(&samples, l))).collect()))
}

/// Linear-interpolation quantile of sorted data.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// One row of a CI stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalRow {
    pub t: u64,
    pub interval: ConfidenceInterval,
    pub covered: Option<bool>,
}

/// Writes `t,lo,hi[,covered]` rows.
pub fn write_interval_stream<W: Write>(out: &mut W, rows: &[IntervalRow]) -> std::io::Result<()> {
    use crate::fmt_f64 as f;
    let with_truth = rows.iter().any(|r| r.covered.is_some());
    writeln!(out, "{}", if with_truth { "t,lo,hi,covered" } else { "t,lo,hi" })?;
    for r in rows {
        match (with_truth, r.covered) {
            (true, Some(c)) => writeln!(out, "{},{},{},{}", r.t, f(r.interval.lo), f(r.interval.hi), u8::from(c))?,
            (true, None) => writeln!(out, "{},{},{},", r.t, f(r.interval.lo), f(r.interval.hi))?,
            _ => writeln!(out, "{},{},{}", r.t, f(r.interval.lo), f(r.interval.hi))?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn along_price(values: &[f64]) -> Vec<ControlParams> {
        values.iter().map(|&p| ControlParams::new(5.0, p)).collect()
    }

    #[test]
    fn hand_sigma() {
        // iterates 1, 2, 3 give averages 1, 1.5, 2
        let mut s = InferenceState::new(Direction::PRICE);
        for th in along_price(&[1.0, 2.0, 3.0]) {
            s.update(&th);
        }
        let expected = 2f64.sqrt() / 3.0;
        assert!((s.sigma() - expected).abs() < 1e-15);
        assert!((s.estimate() - 2.0).abs() < 1e-15);
        assert_eq!(s.o_statistics().2, 14.0);
        let ci = s.interval_with(5.316, 0.95);
        let half = 5.316 * expected / 3f64.sqrt();
        assert!((ci.hi - 2.0 - half).abs() < 1e-14 && (2.0 - ci.lo - half).abs() < 1e-14);
    }

    #[test]
    fn constant_iterates_collapse() {
        let table = CriticalValueTable::default();
        let mut s = InferenceState::new(Direction::SERVICE_RATE);
        for _ in 0..1000 {
            s.update(&ControlParams::new(4.25, 7.0));
        }
        assert_eq!(s.sigma(), 0.0);
        let ci = s.interval(&table, 0.95).unwrap();
        assert_eq!((ci.lo, ci.hi), (4.25, 4.25));
    }

    #[test]
    fn o3_is_sum_of_squares() {
        let mut s = InferenceState::new(Direction::PRICE);
        for t in 1..=500u64 {
            s.update(&ControlParams::new(1.0, t as f64));
            let n = t as f64;
            assert_eq!(s.o_statistics().2, n * (n + 1.0) * (2.0 * n + 1.0) / 6.0);
        }
    }

    #[test]
    fn interval_arithmetic() {
        let state = |center: f64| {
            // two iterates whose average is `center` along the price
            let mut s = InferenceState::new(Direction::PRICE);
            s.update(&ControlParams::new(0.0, center));
            s
        };
        let s = state(7.10);
        let ci = s.interval_with(5.316, 0.95);
        assert_eq!((ci.lo, ci.hi), (7.10, 7.10));
        let table = CriticalValueTable::default();
        assert_eq!(table.get(0.95).unwrap(), 5.316);
        assert_eq!(table.get(0.5).unwrap(), 0.0);
        assert_eq!(table.two_sided(0.95).unwrap(), 6.758);
        assert!(matches!(table.get(0.42), Err(Error::MissingCriticalValue(_))));
        assert!(matches!(s.interval(&table, 0.42), Err(Error::MissingCriticalValue(_))));

        let ci = ConfidenceInterval { lo: 7.10 - 5.316 * 0.01, hi: 7.10 + 5.316 * 0.01, level: 0.95 };
        assert!((ci.lo - 7.04684).abs() < 1e-12 && (ci.hi - 7.15316).abs() < 1e-12);
    }

    #[test]
    fn incremental_matches_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let offset = rng.random_range(-10.0..10.0);
            let n = rng.random_range(2..400);
            let iterates: Vec<ControlParams> = (0..n)
                .map(|_| ControlParams::new(rng.random_range(-1.0..1.0), offset + rng.random_range(-1.0..1.0)))
                .collect();
            let dir = Direction::new([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).unwrap();
            let mut s = InferenceState::new(dir);
            iterates.iter().for_each(|t| s.update(t));
            let b = batch_sigma(dir, &iterates);
            assert!(((s.sigma() - b) / b).abs() < 1e-10, "{} vs {}", s.sigma(), b);
        }
    }

    #[test]
    fn pivot_is_scale_invariant_and_odd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut acc = 0.0;
        let path: Vec<f64> = (0..200)
            .map(|_| {
                acc += rng.sample::<f64, _>(StandardNormal);
                acc
            })
            .collect();
        let h = pivot_of_partial_sums(&path);
        let scaled: Vec<f64> = path.iter().map(|s| 3.5 * s).collect();
        let neg: Vec<f64> = path.iter().map(|s| -s).collect();
        assert!((pivot_of_partial_sums(&scaled) - h).abs() < 1e-12 * h.abs().max(1.0));
        assert_eq!(pivot_of_partial_sums(&neg), -h);
    }

    #[test]
    fn studentized_statistic_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = ControlParams::new(4.0, 7.0);
        let devs: Vec<[f64; 2]> = (0..300).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let run = |a: f64| {
            let mut s = InferenceState::new(Direction::PRICE);
            for d in &devs {
                s.update(&ControlParams::new(truth.mu + a * d[0], truth.p + a * d[1]));
            }
            s
        };
        let (one, two) = (run(1.0), run(2.0));
        assert!((two.sigma() - 2.0 * one.sigma()).abs() < 1e-9 * one.sigma());
        assert!((two.studentized(truth.p) - one.studentized(truth.p)).abs() < 1e-8);
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&xs, 0.5), 2.0);
        assert_eq!(empirical_quantile(&xs, 0.125), 0.5);
        assert_eq!(empirical_quantile(&xs, 1.0), 4.0);
    }

    #[test]
    fn table_csv_round_trip() {
        let t = CriticalValueTable::default();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = CriticalValueTable::parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn small_simulation_is_symmetric_and_deterministic() {
        let a = simulate_critical_values(200, 4000, &[0.05, 0.5, 0.95], 11).unwrap();
        let b = simulate_critical_values(200, 4000, &[0.05, 0.5, 0.95], 11).unwrap();
        assert_eq!(a, b);
        assert!(a.get(0.5).unwrap().abs() < 0.2);
        assert!((a.get(0.95).unwrap() + a.get(0.05).unwrap()).abs() < 0.6);
        assert!(simulate_critical_values(1, 10, &[0.5], 0).is_err());
        assert!(simulate_critical_values(10, 10, &[1.5], 0).is_err());
    }

    #[test]
    fn interval_stream_csv() {
        let rows = [
            IntervalRow { t: 1, interval: ConfidenceInterval { lo: 0.0, hi: 1.0, level: 0.95 }, covered: Some(true) },
            IntervalRow { t: 2, interval: ConfidenceInterval { lo: 0.5, hi: 1.0, level: 0.95 }, covered: Some(false) },
        ];
        let mut buf = Vec::new();
        write_interval_stream(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,lo,hi,covered");
        assert!(lines[1].ends_with(",1") && lines[2].ends_with(",0"));
    }
}
