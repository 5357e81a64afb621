//! `bvlab`: asymptotic variance laboratory.

use std::process::ExitCode;

use bvlab_cli::config::{ConfigFile, Format, GlobalArgs};
use bvlab_cli::{commands, output, selfcheck, CliError};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "bvlab", version, about = "Asymptotic variance of Beurling transforms of annular Beltrami coefficients")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// k^2 coefficients for d = 2, 3, 4, 20: lambda-lemma vs shell construction.
    Table2,
    /// Asymptotic variance of the shell construction or the lacunary field.
    Variance(commands::VarianceArgs),
    /// Best integer and real degree for the shell bound.
    Optimize(commands::OptimizeArgs),
    /// Two-term bound sigma^2(S mu) + sigma^2(w), or a parameter search.
    Order2(commands::Order2Args),
    /// Second-order Julia set dimensions against the upper bound 1 + k^2.
    Dimension(commands::DimensionArgs),
    /// Integral means I(R) and I(R)/log(1/(R-1)) on a geometric grid.
    MeansCurve(commands::MeansCurveArgs),
    /// Truncate a coefficient so its exterior Cauchy transform is a polynomial.
    Truncate(commands::TruncateArgs),
    /// Birkhoff variance on the circle.
    Dynamics {
        #[command(subcommand)]
        command: commands::DynamicsCommand,
    },
    /// Compare closed forms with brute-force references.
    Selfcheck(selfcheck::SelfcheckArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Table2 => "table2",
            Command::Variance(_) => "variance",
            Command::Optimize(_) => "optimize",
            Command::Order2(_) => "order2",
            Command::Dimension(_) => "dimension",
            Command::MeansCurve(_) => "means-curve",
            Command::Truncate(_) => "truncate",
            Command::Dynamics { command } => command.name(),
            Command::Selfcheck(_) => "selfcheck",
        }
    }

    /// Format used when neither flag nor config chooses one.
    fn default_format(&self) -> Format {
        match self {
            Command::Order2(_) | Command::Truncate(_) | Command::Dynamics { .. } => Format::Json,
            _ => Format::Csv,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.global.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let name = cli.command.name();
    if let Some(c) = &file.command {
        if c != name {
            return Err(CliError::Config(format!("config is for `{c}`, invoked `{name}`")));
        }
    }
    let common = cli.global.resolve(&file, cli.command.default_format());
    let report = match &cli.command {
        Command::Table2 => commands::table2(),
        Command::Variance(a) => commands::variance(a, &file),
        Command::Optimize(a) => commands::optimize(a, &file),
        Command::Order2(a) => commands::order2(a, &file),
        Command::Dimension(a) => commands::dimension(a, &file),
        Command::MeansCurve(a) => commands::means_curve_cmd(a, &file),
        Command::Truncate(a) => commands::truncate(a, &file),
        Command::Dynamics { command } => commands::dynamics(command, &file, &common),
        Command::Selfcheck(a) => selfcheck::run(a, &common),
    }?;
    output::emit(&report, &common, name)?;
    match &report.summary {
        Some(s) => print!("{s}"),
        None => match common.format {
            Format::Csv => print!("{}", report.table.display(common.precision)),
            Format::Json => print!("{}", output::pretty(&report.json)),
        },
    }
    if let Some(f) = &report.footer {
        print!("{f}");
    }
    if let Some(failed) = report.json.get("failed").and_then(|v| v.as_u64()).filter(|&n| n > 0) {
        return Err(CliError::SelfcheckFailed(failed as usize));
    }
    Ok(())
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message, "exit_code": code }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return fail("usage", e.render().to_string().trim_end().to_string(), 2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string(), e.exit_code()),
    }
}
