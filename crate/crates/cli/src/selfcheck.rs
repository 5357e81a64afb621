//! `selfcheck`: runs every comparison in [`crate::checks`].

use clap::Args;
use serde_json::json;

use crate::checks::{self, Outcome};
use crate::config::Common;
use crate::output::{Report, Table};
use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct SelfcheckArgs {
    /// Run only these checks (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
}

pub fn run(a: &SelfcheckArgs, common: &Common) -> Result<Report, CliError> {
    for name in &a.only {
        if !checks::ALL.iter().any(|(n, _)| n == name) {
            let known: Vec<&str> = checks::ALL.iter().map(|(n, _)| *n).collect();
            return Err(CliError::Usage(format!("unknown check {name:?}; known: {}", known.join(", "))));
        }
    }
    let mut outcomes: Vec<Outcome> = Vec::new();
    for (name, check) in checks::ALL {
        if a.only.is_empty() || a.only.iter().any(|n| n == name) {
            outcomes.push(checks::timed(*check, common.seed)?);
        }
    }
    let mut t = Table::new(&["check", "passed", "measured", "bound"]);
    for o in &outcomes {
        t.push(vec![o.name.into(), o.passed.into(), o.measured.into(), o.bound.into()]);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    // timings vary between runs and stay out of the files
    let rows: Vec<_> = outcomes
        .iter()
        .map(|o| json!({"name": o.name, "passed": o.passed, "measured": o.measured, "bound": o.bound, "detail": o.detail}))
        .collect();
    let json = json!({"seed": common.seed, "passed": outcomes.len() - failed, "failed": failed, "checks": rows});
    let mut report = Report::new("selfcheck", t, json, json!({"only": a.only, "seed": common.seed}))?;
    let mut summary: String = outcomes.iter().map(|o| o.line() + "\n").collect();
    summary.push_str(&format!("{} passed, {failed} failed\n", outcomes.len() - failed));
    report.summary = Some(summary);
    Ok(report)
}
