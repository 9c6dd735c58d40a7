//! Checkpoint tables, their CSV form, and the mean/stderr reduce.
//!
//! Key columns are written with `f64`'s shortest round-trip form and value
//! columns with 17 significant digits, so a table read back from disk is
//! bit-identical to the one that was written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::stats::mean_stderr;

/// Rows keyed by a checkpoint (customer count, `cs`, ...).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub key: String,
    pub columns: Vec<String>,
    pub keys: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(key: &str, columns: Vec<String>) -> Self {
        Self { key: key.to_owned(), columns, keys: Vec::new(), rows: Vec::new() }
    }

    pub fn push(&mut self, key: f64, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.keys.push(key);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        let j = self.column_index(name)?;
        self.rows.last().map(|r| r[j])
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "{}", self.key)?;
        for c in &self.columns {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
        for (k, row) in self.keys.iter().zip(&self.rows) {
            write!(out, "{k}")?;
            for v in row {
                write!(out, ",{}", fmt_f64(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty table".into()))?;
        let mut names = header.split(',').map(str::to_owned);
        let key = names.next().unwrap_or_default();
        let mut table = Table::new(&key, names.collect());
        for line in lines {
            let mut fields = line.split(',').map(|s| {
                s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?} in {line:?}: {e}")))
            });
            let k = fields.next().ok_or_else(|| Error::Parse(format!("empty row {line:?}")))??;
            let row = fields.collect::<Result<Vec<f64>>>()?;
            if row.len() != table.columns.len() {
                return Err(Error::Parse(format!("row {line:?} has {} values, header has {}", row.len(), table.columns.len())));
            }
            table.push(k, row);
        }
        Ok(table)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse_csv(&fs::read_to_string(path)?)
    }
}

/// Mean and standard error of every value column across replications.
/// Output columns are `<name>_mean, <name>_se` plus a `reps` count.
pub fn aggregate(replications: &[Table]) -> Result<Table> {
    let first = replications.first().ok_or_else(|| Error::InvalidConfig("nothing to aggregate".into()))?;
    for t in replications {
        if t.key != first.key || t.columns != first.columns || t.keys != first.keys {
            return Err(Error::Parse("replication tables disagree on layout".into()));
        }
    }
    let mut columns = Vec::with_capacity(2 * first.columns.len() + 1);
    for c in &first.columns {
        columns.push(format!("{c}_mean"));
        columns.push(format!("{c}_se"));
    }
    columns.push("reps".to_owned());
    let mut out = Table::new(&first.key, columns);
    let mut xs = Vec::with_capacity(replications.len());
    for (i, &k) in first.keys.iter().enumerate() {
        let mut row = Vec::with_capacity(out.columns.len());
        for j in 0..first.columns.len() {
            xs.clear();
            xs.extend(replications.iter().map(|t| t.rows[i][j]));
            let (m, se) = mean_stderr(&xs);
            row.push(m);
            row.push(se);
        }
        row.push(replications.len() as f64);
        out.push(k, row);
    }
    Ok(out)
}

pub fn replication_file(dir: &Path, r: u64) -> PathBuf {
    dir.join(format!("rep_{r:05}.csv"))
}

/// Writes one CSV per replication into `dir`.
pub fn write_replications(dir: &Path, tables: &[Table]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (r, t) in tables.iter().enumerate() {
        t.write_file(&replication_file(dir, r as u64))?;
    }
    Ok(())
}

/// Reads every `rep_*.csv` in `dir`, in replication order.
pub fn read_replications(dir: &Path) -> Result<Vec<Table>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("rep_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    files.iter().map(|p| Table::read_file(p)).collect()
}

/// Re-aggregates a directory of replication CSVs.
pub fn aggregate_directory(dir: &Path) -> Result<Table> {
    aggregate(&read_replications(dir)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(shift: f64) -> Table {
        let mut t = Table::new("customers", vec!["error".into(), "regret".into()]);
        t.push(100.0, vec![0.1 + shift, 1.0 / 3.0]);
        t.push(1000.0, vec![std::f64::consts::PI * shift, -2.5e-300]);
        t
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample(0.7);
        let back = Table::parse_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert!(t.to_csv().starts_with("customers,error,regret\n100,"));
    }

    #[test]
    fn aggregate_columns() {
        let agg = aggregate(&[sample(0.0), sample(1.0)]).unwrap();
        assert_eq!(agg.columns, ["error_mean", "error_se", "regret_mean", "regret_se", "reps"]);
        assert!((agg.rows[0][0] - 0.6).abs() < 1e-15);
        assert!((agg.rows[0][1] - 0.5).abs() < 1e-15);
        assert_eq!(agg.rows[0][3], 0.0);
        assert_eq!(agg.rows[1][4], 2.0);
    }

    #[test]
    fn directory_aggregation_matches_memory() {
        let tables: Vec<Table> = (0..12).map(|i| sample(i as f64 * 0.37)).collect();
        let dir = tempfile::tempdir().unwrap();
        write_replications(dir.path(), &tables).unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        assert_eq!(aggregate_directory(dir.path()).unwrap().to_csv(), aggregate(&tables).unwrap().to_csv());
    }

    #[test]
    fn mismatched_layouts_are_rejected() {
        let mut other = sample(0.0);
        other.keys[1] = 999.0;
        assert!(aggregate(&[sample(0.0), other]).is_err());
        assert!(aggregate(&[]).is_err());
        assert!(Table::parse_csv("k,a\n1,2,3\n").is_err());
    }
}
