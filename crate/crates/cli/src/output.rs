use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lonr::analysis::{last_iterate_report, BoundSummary, LastIterateReport, Table, TraceRecord};
use lonr::lonr::Evaluation;
use lonr::{ActionDistribution, Algorithm, MinimizerKind, RunResult};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::CliError;

pub const TRACE_HEADER: &str =
    "iteration,player,state,action,q,q_avg,pi,pi_avg,residual,regret,selected";
pub const CONFIG_ECHO: &str = "config.echo.json";
pub const SUMMARY: &str = "summary.json";
pub const TRACE: &str = "trace.csv";
pub const ACCEPTANCE: &str = "acceptance.json";

/// Per-action statistics over the final iterations of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub state: usize,
    pub report: LastIterateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSummary {
    pub player: usize,
    pub q: Table,
    pub q_avg: Table,
    pub q_avg_exclusive: Table,
    pub policy: Table,
    pub average_policy: Table,
    pub regret: Vec<f64>,
    pub bounds: Vec<BoundSummary>,
    /// Current policy over the trailing `last_window` iterations.
    pub last_iterate: Vec<WindowReport>,
    /// Average policy over the trailing `average_window` iterations.
    pub average_iterate: Vec<WindowReport>,
}

/// Everything a check needs from one (run, seed) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub minimizer: MinimizerKind,
    pub iterations: u64,
    pub discount: f64,
    pub players: Vec<PlayerSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
}

/// Index of an experiment's outputs, written next to the config echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub preset: Option<String>,
    pub seeds: Vec<u64>,
    pub trace_every: u64,
    pub runs: Vec<RunEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub label: String,
    pub seed: u64,
    /// Relative to the output root.
    pub dir: PathBuf,
}

pub fn run_dir(seed: u64, label: &str) -> PathBuf {
    Path::new(&format!("seed-{seed}")).join(label)
}

fn probs(policy: &[ActionDistribution]) -> Table {
    policy.iter().map(|p| p.probs().to_vec()).collect()
}

fn window_reports(
    result: &RunResult,
    window: u64,
    average: bool,
) -> Result<Vec<WindowReport>, CliError> {
    if window == 0 {
        return Ok(Vec::new());
    }
    (0..result.q.num_states())
        .map(|state| {
            let trace = if average {
                result.average_policy_trace(state)
            } else {
                result.policy_trace(state)
            };
            let report = last_iterate_report(&trace, window as usize)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(WindowReport { state, report })
        })
        .collect()
}

pub fn player_summary(
    result: &RunResult,
    last_window: u64,
    average_window: u64,
) -> Result<PlayerSummary, CliError> {
    Ok(PlayerSummary {
        player: result.player,
        q: result.q.values().clone(),
        q_avg: result.q.avg_inclusive(),
        q_avg_exclusive: result.q.avg_exclusive(),
        policy: probs(&result.current_policy),
        average_policy: probs(&result.average_policy),
        regret: result.regret.clone(),
        bounds: result.bounds.clone(),
        last_iterate: window_reports(result, last_window, false)?,
        average_iterate: window_reports(result, average_window, true)?,
    })
}

/// Trace rows for iterations divisible by `every`, ordered by iteration then player.
pub fn trace_csv(results: &[RunResult], every: u64, states: Option<&[usize]>) -> String {
    let mut records: Vec<&TraceRecord> = results
        .iter()
        .flat_map(|r| &r.trace)
        .filter(|r| every > 0 && r.iteration % every == 0)
        .collect();
    records.sort_by_key(|r| (r.iteration, r.player));
    let mut out = String::with_capacity(64 * records.len());
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let all: Vec<usize>;
        let states = match states {
            Some(s) => s,
            None => {
                all = (0..r.q.len()).collect();
                &all
            }
        };
        for &s in states {
            for a in 0..r.q[s].len() {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.iteration,
                    r.player,
                    s,
                    a,
                    r.q[s][a],
                    r.q_avg[s][a],
                    r.policy[s][a],
                    r.avg_policy[s][a],
                    r.residual,
                    r.regret[s],
                    u8::from(r.selected[s])
                )
                .expect("writing to a String cannot fail");
            }
        }
    }
    out
}

/// One parsed `trace.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub player: usize,
    pub state: usize,
    pub action: usize,
    pub q: f64,
    pub q_avg: f64,
    pub pi: f64,
    pub pi_avg: f64,
    pub residual: f64,
    pub regret: f64,
    pub selected: bool,
}

pub fn parse_trace(path: &Path) -> Result<Vec<TraceRow>, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err(CliError::MissingResults(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad =
                || CliError::MissingResults(format!("{}: malformed row {}", path.display(), i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(bad());
            }
            let float = |k: usize| f[k].parse::<f64>().map_err(|_| bad());
            let int = |k: usize| f[k].parse::<u64>().map_err(|_| bad());
            Ok(TraceRow {
                iteration: int(0)?,
                player: int(1)? as usize,
                state: int(2)? as usize,
                action: int(3)? as usize,
                q: float(4)?,
                q_avg: float(5)?,
                pi: float(6)?,
                pi_avg: float(7)?,
                residual: float(8)?,
                regret: float(9)?,
                selected: match f[10] {
                    "1" => true,
                    "0" => false,
                    _ => return Err(bad()),
                },
            })
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(CliError::MissingResults(format!(
                "{} not found",
                path.display()
            )))
        }
        Err(e) => return Err(CliError::io(path)(e)),
    };
    serde_json::from_str(&text)
        .map_err(|e| CliError::MissingResults(format!("{}: {e}", path.display())))
}
