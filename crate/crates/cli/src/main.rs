mod check;
mod config;
mod error;
mod output;
mod runner;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, DEFAULT_TRACE_EVERY, PRESETS};
use error::CliError;
use runner::Plan;

const DEFAULT_OUT: &str = "lonr-out";

#[derive(Debug, Parser)]
#[command(name = "lonr", version, about = "Local no-regret learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a preset or a JSON experiment config.
    Run(RunArgs),
    /// Evaluate the acceptance criteria of finished results.
    Check {
        /// Output directory of a previous run [env: LONR_OUT]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in presets.
    ListPresets,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// JSON experiment document.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use seeds 0..N instead of the configured ones.
    #[arg(long, value_name = "N")]
    seeds: Option<u64>,
    /// Output root; falls back to the config, then LONR_OUT, then ./lonr-out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate the acceptance criteria after the run.
    #[arg(long)]
    check: bool,
    /// Write every N-th iteration to trace.csv (0 disables).
    #[arg(long, value_name = "N")]
    trace_every: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn env_out() -> Option<PathBuf> {
    std::env::var_os("LONR_OUT")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn plan(args: &RunArgs) -> Result<Plan, CliError> {
    let config = match (&args.preset, &args.config) {
        (Some(name), _) => ExperimentConfig {
            preset: Some(name.clone()),
            runs: Vec::new(),
            seeds: Vec::new(),
            trace_every: None,
            out: None,
        },
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(CliError::Config("give --preset or --config".into())),
    };
    let mut config = config;
    if let Some(n) = args.seeds {
        if n == 0 {
            return Err(CliError::Config("--seeds must be at least 1".into()));
        }
        config.seeds = (0..n).collect();
    }
    let config = config.resolve()?;
    let trace_every = args
        .trace_every
        .or(config.trace_every)
        .unwrap_or(DEFAULT_TRACE_EVERY);
    let out = args
        .out
        .clone()
        .or_else(|| config.out.clone())
        .or_else(env_out)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(Plan {
        config,
        trace_every,
        out,
    })
}

fn report(report: &check::AcceptanceReport) -> Result<(), CliError> {
    for c in &report.criteria {
        let comparison = serde_json::to_value(c.comparison).expect("comparisons serialize");
        println!(
            "{} {}: {} {} {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            comparison.as_str().unwrap_or("?"),
            c.threshold
        );
    }
    if report.pass {
        println!("acceptance: PASS ({} criteria)", report.criteria.len());
        Ok(())
    } else {
        let failed = report.criteria.iter().filter(|c| !c.pass).count();
        Err(CliError::CheckFailed(format!(
            "{failed} of {} criteria failed",
            report.criteria.len()
        )))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let plan = plan(&args)?;
            let summary = runner::run_experiment(&plan, args.jobs)?;
            println!(
                "wrote {} runs to {}",
                summary.runs.len(),
                plan.out.display()
            );
            if args.check {
                report(&check::check_acceptance(&plan.out)?)?;
            }
            Ok(())
        }
        Command::Check { out } => {
            let out = out
                .or_else(env_out)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            report(&check::check_acceptance(&out)?)
        }
        Command::ListPresets => {
            for p in &PRESETS {
                println!("{:<14} {}", p.name, p.description);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
