//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p bvlab-cli --test acceptance`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bvlab_cli::checks::{self, Check, Outcome, TABLE2_PRINTED};

const SEED: u64 = 20_240_611;

struct Verdict {
    passed: bool,
    summary: String,
}

fn combine(outcomes: Vec<Outcome>, elapsed: Duration, limit: Duration) -> Verdict {
    let mut passed = elapsed < limit;
    let mut parts = Vec::new();
    for o in &outcomes {
        passed &= o.passed;
        parts.push(format!(
            "{} {} {:.3e} (bound {:.3e})",
            o.name,
            if o.passed { "ok" } else { "FAILED" },
            o.measured,
            o.bound
        ));
    }
    parts.push(format!("{:.2}s of {}s", elapsed.as_secs_f64(), limit.as_secs()));
    Verdict {
        passed,
        summary: parts.join("; "),
    }
}

fn run_checks(list: &[Check], limit_secs: u64) -> Verdict {
    let start = Instant::now();
    let mut outcomes = Vec::new();
    for check in list {
        match check(SEED) {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                return Verdict {
                    passed: false,
                    summary: format!("error: {e}"),
                }
            }
        }
    }
    combine(outcomes, start.elapsed(), Duration::from_secs(limit_secs))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_bvlab")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bvlab-acceptance-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn table2_cli() -> Verdict {
    let start = Instant::now();
    let mut v = run_checks(&[|_| checks::table2()], 1);
    let dir = scratch("table2");
    let out = Command::new(bin())
        .args(["table2", "--format", "csv", "--output-dir"])
        .arg(&dir)
        .output()
        .expect("run bvlab");
    let csv = std::fs::read_to_string(dir.join("table2.csv")).unwrap_or_default();
    let mut rows_ok = out.status.success();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    rows_ok &= rows.len() == TABLE2_PRINTED.len();
    for (line, (d, lam, imp)) in rows.iter().zip(TABLE2_PRINTED) {
        let f: Vec<&str> = line.split(',').collect();
        let num = |i: usize| f.get(i).and_then(|s| s.parse::<f64>().ok()).unwrap_or(f64::NAN);
        let cut = |x: f64| bvlab_core::bounds::truncate_decimals(x, 4);
        rows_ok &= num(0) == d as f64 && cut(num(1)) == lam && cut(num(2)) == imp;
    }
    let elapsed = start.elapsed();
    v.passed &= rows_ok && elapsed < Duration::from_secs(1);
    v.summary = format!("{}; csv rows {}", v.summary, if rows_ok { "ok" } else { "FAILED" });
    let _ = std::fs::remove_dir_all(&dir);
    v
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    if let Ok(entries) = std::fs::read_dir(dir) {
        for e in entries.flatten() {
            let name = e.file_name().to_string_lossy().into_owned();
            out.insert(name, std::fs::read(e.path()).unwrap_or_default());
        }
    }
    out
}

/// Each command runs twice, once on one thread and once on four, with the
/// same config file and seed; every written file must match byte for byte.
fn determinism() -> Verdict {
    let start = Instant::now();
    let base = scratch("determinism");
    std::fs::create_dir_all(&base).expect("scratch dir");
    let config = base.join("var.json");
    std::fs::write(&config, r#"{"command": "dynamics var", "seed": 11, "n": 16, "samples": 60000, "blaschke": [[0.3, 0.0]]}"#)
        .expect("config");
    let config_arg = config.to_string_lossy().into_owned();
    let runs: Vec<Vec<&str>> = vec![
        vec!["table2"],
        vec!["variance", "shell", "--d", "4"],
        vec!["order2", "--grid-d", "4,8,16", "--shells", "12", "--max-freq", "1e9"],
        vec!["means-curve", "lacunary", "--d", "3", "--points", "20"],
        vec!["truncate"],
        vec!["dynamics", "var", "--config", &config_arg],
        vec!["dynamics", "var", "--n", "30", "--samples", "50000", "--seed", "5", "--format", "csv"],
        vec!["selfcheck", "--only", "monte_carlo,basic_coefficients"],
    ];
    let mut mismatches = Vec::new();
    let mut files = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut trees = Vec::new();
        for threads in ["1", "4"] {
            let dir = base.join(format!("run{i}-{threads}"));
            let out = Command::new(bin())
                .args(args)
                .arg("--output-dir")
                .arg(&dir)
                .env("RAYON_NUM_THREADS", threads)
                .env_remove("BVLAB_OUT")
                .output()
                .expect("run bvlab");
            if !out.status.success() {
                mismatches.push(format!("{} exited with {}", args.join(" "), out.status));
            }
            trees.push((read_tree(&dir), out.stdout));
        }
        files += trees[0].0.len();
        if trees[0].0.is_empty() || trees[0].0 != trees[1].0 {
            mismatches.push(format!("{}: files differ", args.join(" ")));
        }
        if trees[0].1 != trees[1].1 && args[0] != "selfcheck" {
            // selfcheck prints timings to stdout; its files carry none
            mismatches.push(format!("{}: stdout differs", args.join(" ")));
        }
    }
    let _ = std::fs::remove_dir_all(&base);
    Verdict {
        passed: mismatches.is_empty(),
        summary: if mismatches.is_empty() {
            format!("{} commands, {files} files identical across runs; {:.2}s", runs.len(), start.elapsed().as_secs_f64())
        } else {
            mismatches.join("; ")
        },
    }
}

fn main() -> ExitCode {
    type Criterion = (&'static str, Box<dyn Fn() -> Verdict>);
    let criteria: Vec<Criterion> = vec![
        ("1 table reproduction", Box::new(table2_cli)),
        ("2 optimal degrees", Box::new(|| run_checks(&[|_| checks::optimum()], 1))),
        (
            "3 transform pipeline",
            Box::new(|| run_checks(&[checks::basic_coefficients, checks::dbar, checks::pullback], 60)),
        ),
        ("4 variance concordance", Box::new(|| run_checks(&[|_| checks::concordance()], 120))),
        (
            "5 upper-bound property",
            Box::new(|| run_checks(&[checks::growth_slopes, checks::third_derivative], 120)),
        ),
        (
            "6 second-order bound",
            Box::new(|| run_checks(&[|_| checks::order2_total(), |_| checks::order2_routes()], 600)),
        ),
        (
            "7 dynamics cross-check",
            Box::new(|| run_checks(&[|_| checks::coboundary(), |_| checks::mean_relation()], 60)),
        ),
        ("8 formula spot checks", Box::new(|| run_checks(&[checks::formulas], 60))),
        ("9 truncation", Box::new(|| run_checks(&[|_| checks::truncation()], 60))),
        ("10 determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let v = run();
        if !v.passed {
            failed += 1;
        }
        println!("criterion {name}: {} | {}", if v.passed { "PASS" } else { "FAIL" }, v.summary);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
