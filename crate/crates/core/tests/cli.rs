use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn samcmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samcmc")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Every file under `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    files
}

#[test]
fn oracle_prints_the_optimum() {
    let text = stdout(&samcmc(&["oracle", "mm1"]));
    assert!(text.contains("mu*      7.1031"), "{text}");
    assert!(text.contains("p*       4.0233"), "{text}");
}

#[test]
fn unknown_setting_fails_cleanly() {
    let out = samcmc(&["oracle", "gg1"]);
    assert!(!out.status.success());
}

#[test]
fn printed_config_loads_back() {
    let text = stdout(&samcmc(&["config", "mm1", "coverage"]));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, &text).unwrap();
    let cfg = samcmc::experiments::ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.replications, 500);
}

#[test]
fn critval_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let text = stdout(&samcmc(&["critval", "--steps", "200", "--reps", "2000", "--out", out]));
    assert!(text.starts_with("level,q\n"));
    let table = samcmc::CriticalValueTable::parse_csv(&std::fs::read_to_string(dir.path().join("critval.csv")).unwrap()).unwrap();
    assert_eq!(table.entries().len(), 9);
}

#[test]
fn studies_are_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "2")] {
        let out = dir.path().to_str().unwrap();
        for study in ["optimize", "stepsizes"] {
            stdout(&samcmc(&[study, "mm1", "--reps", "4", "--iters", "3000", "--threads", threads, "--out", out]));
        }
        stdout(&samcmc(&["coverage", "mm1", "--reps", "4", "--iters", "3000", "--threads", threads, "--out", out]));
    }
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert!(sa.contains_key("convergence_mm1/samcmc/rep_00003.csv"));
    assert!(sa.contains_key("coverage_mm1/manifest.json"));
    assert_eq!(sa, sb);
}

#[test]
fn seed_flag_changes_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&a, "1"), (&b, "2")] {
        let out = dir.path().to_str().unwrap();
        stdout(&samcmc(&["optimize", "mm1", "--reps", "2", "--iters", "500", "--seed", seed, "--out", out]));
    }
    let f = "convergence_mm1/samcmc.csv";
    assert_ne!(snapshot(a.path())[f], snapshot(b.path())[f]);
}
