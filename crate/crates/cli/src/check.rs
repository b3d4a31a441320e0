use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use lonr::analysis::{nosde_best_response_oracle, nosde_equilibrium};
use lonr::env_model::{CliffGrid, GridAction, KEEP, SEND};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{
    parse_trace, read_json, ExperimentSummary, RunSummary, ACCEPTANCE, SUMMARY, TRACE,
};

const POLICY_TOL: f64 = 0.02;
const VALUE_TOL: f64 = 0.05;
const CYCLE_AMPLITUDE: f64 = 0.2;
const LAST_WINDOW: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub measured: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub pass: bool,
}

impl Criterion {
    fn new(name: impl Into<String>, measured: f64, comparison: Comparison, threshold: f64) -> Self {
        let pass = match comparison {
            Comparison::AtMost => measured <= threshold,
            Comparison::Below => measured < threshold,
            Comparison::AtLeast => measured >= threshold,
            Comparison::Above => measured > threshold,
        };
        Self {
            name: name.into(),
            measured,
            comparison,
            threshold,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub preset: Option<String>,
    pub criteria: Vec<Criterion>,
    pub pass: bool,
}

/// Loaded outputs of one experiment, keyed by label then seed.
struct Results<'a> {
    out: &'a Path,
    index: ExperimentSummary,
    runs: BTreeMap<String, BTreeMap<u64, RunSummary>>,
}

impl Results<'_> {
    fn label(&self, label: &str) -> Result<&BTreeMap<u64, RunSummary>, CliError> {
        self.runs
            .get(label)
            .ok_or_else(|| CliError::MissingResults(format!("no results for run {label:?}")))
    }

    fn first(&self, label: &str) -> Result<&RunSummary, CliError> {
        Ok(self
            .label(label)?
            .values()
            .next()
            .expect("labels are only indexed with a run"))
    }

    fn trace_path(&self, label: &str, seed: u64) -> Result<std::path::PathBuf, CliError> {
        self.index
            .runs
            .iter()
            .find(|e| e.label == label && e.seed == seed)
            .map(|e| self.out.join(&e.dir).join(TRACE))
            .ok_or_else(|| CliError::MissingResults(format!("no trace for {label:?} seed {seed}")))
    }
}

fn load(out: &Path) -> Result<Results<'_>, CliError> {
    let empty = fs::read_dir(out)
        .map(|mut d| d.next().is_none())
        .unwrap_or(true);
    if empty {
        return Err(CliError::MissingResults(format!(
            "{} is missing or empty",
            out.display()
        )));
    }
    let index: ExperimentSummary = read_json(&out.join(SUMMARY))?;
    if index.runs.is_empty() {
        return Err(CliError::MissingResults(
            "the experiment lists no runs".into(),
        ));
    }
    let mut runs: BTreeMap<String, BTreeMap<u64, RunSummary>> = BTreeMap::new();
    for entry in &index.runs {
        let summary: RunSummary = read_json(&out.join(&entry.dir).join(SUMMARY))?;
        runs.entry(entry.label.clone())
            .or_default()
            .insert(entry.seed, summary);
    }
    Ok(Results { out, index, runs })
}

fn nosde_target(summary: &RunSummary) -> Result<f64, CliError> {
    Ok(nosde_equilibrium(summary.discount)?.p_send)
}

/// (mean, amplitude) of player 1's current SEND probability over the last window.
fn last_send(summary: &RunSummary) -> Result<(f64, f64), CliError> {
    let w = summary.players[0]
        .last_iterate
        .iter()
        .find(|w| w.state == 0)
        .ok_or_else(|| {
            CliError::MissingResults(format!("{} has no last-iterate window", summary.label))
        })?;
    Ok((w.report.mean[SEND], w.report.amplitude[SEND]))
}

fn last_iterate_error(summary: &RunSummary) -> Result<f64, CliError> {
    let (mean, amplitude) = last_send(summary)?;
    Ok(amplitude.max((mean - nosde_target(summary)?).abs()))
}

fn nosde_average(results: &Results, criteria: &mut Vec<Criterion>) -> Result<(), CliError> {
    for label in ["rmpp", "omwu"] {
        let run = results.first(label)?;
        let eq = nosde_equilibrium(run.discount)?;
        let (_, q_oracle) = nosde_best_response_oracle(run.discount)?;
        let p = run.players[0].average_policy[0][SEND];
        let q = run.players[1].average_policy[1][SEND];
        let q_avg = &run.players[0].q_avg[0];
        let q_err = (q_avg[KEEP] - eq.value)
            .abs()
            .max((q_avg[SEND] - eq.value).abs());
        use Comparison::AtMost;
        criteria.push(Criterion::new(
            format!("{label}: |avg pi1(SEND) - p*|"),
            (p - eq.p_send).abs(),
            AtMost,
            POLICY_TOL,
        ));
        criteria.push(Criterion::new(
            format!("{label}: |avg pi2(SEND) - q*|"),
            (q - q_oracle).abs(),
            AtMost,
            POLICY_TOL,
        ));
        criteria.push(Criterion::new(
            format!("{label}: |Qbar1(s1) - V*|"),
            q_err,
            AtMost,
            VALUE_TOL,
        ));
    }
    for label in ["rm", "mwu"] {
        let run = results.first(label)?;
        let window = run.players[0]
            .average_iterate
            .iter()
            .find(|w| w.state == 0)
            .ok_or_else(|| {
                CliError::MissingResults(format!("{label} has no average-policy window"))
            })?;
        let p = run.players[0].average_policy[0][SEND];
        criteria.push(Criterion::new(
            format!("{label}: avg pi1(SEND) amplitude over the final window"),
            window.report.amplitude[SEND],
            Comparison::Below,
            0.01,
        ));
        criteria.push(Criterion::new(
            format!("{label}: |avg pi1(SEND) - p*|"),
            (p - nosde_target(run)?).abs(),
            Comparison::Above,
            0.05,
        ));
    }
    Ok(())
}

fn nosde_last(results: &Results, criteria: &mut Vec<Criterion>) -> Result<(), CliError> {
    for label in ["rmpp", "omwu"] {
        let run = results.first(label)?;
        criteria.push(Criterion::new(
            format!("{label}: max(amplitude, |mean - p*|) of pi1(SEND)"),
            last_iterate_error(run)?,
            Comparison::AtMost,
            POLICY_TOL,
        ));
    }
    for label in ["rm", "rmp", "mwu", "dcfr"] {
        let (_, amplitude) = last_send(results.first(label)?)?;
        criteria.push(Criterion::new(
            format!("{label}: pi1(SEND) amplitude"),
            amplitude,
            Comparison::AtLeast,
            CYCLE_AMPLITUDE,
        ));
    }
    Ok(())
}

/// First traced iteration from which pi1(SEND) stays within tolerance; `None` if it never settles.
fn time_to_tolerance(results: &Results, label: &str, target: f64) -> Result<Option<u64>, CliError> {
    let seed = *results.label(label)?.keys().next().expect("non-empty");
    let rows = parse_trace(&results.trace_path(label, seed)?)?;
    let send: Vec<_> = rows
        .iter()
        .filter(|r| r.player == 0 && r.state == 0 && r.action == SEND)
        .collect();
    if send.is_empty() {
        return Err(CliError::MissingResults(format!(
            "{label} trace has no rows for pi1(SEND)"
        )));
    }
    Ok(
        match send
            .iter()
            .rposition(|r| (r.pi - target).abs() > POLICY_TOL)
        {
            Some(i) if i + 1 == send.len() => None,
            Some(i) => Some(send[i + 1].iteration),
            None => Some(send[0].iteration),
        },
    )
}

fn omwu_counts(results: &Results, criteria: &mut Vec<Criterion>) -> Result<(), CliError> {
    let c2 = results.first("omwu-c2")?;
    criteria.push(Criterion::new(
        "omwu-c2: max(amplitude, |mean - p*|) of pi1(SEND)",
        last_iterate_error(c2)?,
        Comparison::Above,
        POLICY_TOL,
    ));
    let mut times = Vec::new();
    for label in ["omwu-c4", "omwu-c6", "omwu-c8"] {
        let run = results.first(label)?;
        criteria.push(Criterion::new(
            format!("{label}: max(amplitude, |mean - p*|) of pi1(SEND)"),
            last_iterate_error(run)?,
            Comparison::AtMost,
            POLICY_TOL,
        ));
        let time = time_to_tolerance(results, label, nosde_target(run)?)?;
        times.push(time.map_or(f64::INFINITY, |t| t as f64));
    }
    let worst_increase = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    criteria.push(Criterion::new(
        "time-to-tolerance increase from c to the next larger c",
        worst_increase,
        Comparison::AtMost,
        0.0,
    ));
    Ok(())
}

fn nosde_async(
    results: &Results,
    label: &str,
    criteria: &mut Vec<Criterion>,
) -> Result<(), CliError> {
    let seeds = results.label(label)?;
    let mut passing = 0;
    for run in seeds.values() {
        if last_iterate_error(run)? <= POLICY_TOL {
            passing += 1;
        }
    }
    criteria.push(Criterion::new(
        format!("{label}: fraction of seeds with converged pi1(SEND)"),
        passing as f64 / seeds.len() as f64,
        Comparison::AtLeast,
        0.95,
    ));
    Ok(())
}

fn soccer(results: &Results, criteria: &mut Vec<Criterion>) -> Result<(), CliError> {
    for (label, seeds) in &results.runs {
        for (seed, run) in seeds {
            let eval = run.evaluation.as_ref().ok_or_else(|| {
                CliError::MissingResults(format!("{label} seed {seed} has no evaluation"))
            })?;
            let worst = eval.mean_scores.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            criteria.push(Criterion::new(
                format!("{label} seed {seed}: largest |mean score|"),
                worst,
                Comparison::AtMost,
                5.0,
            ));
        }
    }
    Ok(())
}

fn matrix_games(results: &Results, criteria: &mut Vec<Criterion>) -> Result<(), CliError> {
    for game in ["rps", "mp"] {
        let label = format!("{game}-rmpp");
        let run = results.first(&label)?;
        // The perturbed start is far from uniform; only the final window counts.
        let from = run.iterations.saturating_sub(LAST_WINDOW);
        let rows: Vec<_> = parse_trace(&results.trace_path(&label, run.seed)?)?
            .into_iter()
            .filter(|r| r.iteration > from)
            .collect();
        let n = rows
            .iter()
            .filter(|r| r.player == 0 && r.state == 0)
            .map(|r| r.action + 1)
            .max()
            .unwrap_or(0);
        if n == 0 {
            return Err(CliError::MissingResults(format!(
                "{label} trace has no rows in the final window"
            )));
        }
        let deviation = rows
            .iter()
            .map(|r| (r.pi - 1.0 / n as f64).abs())
            .fold(0.0, f64::max);
        criteria.push(Criterion::new(
            format!(
                "{label}: largest traced |pi - uniform| over the final {LAST_WINDOW} iterations"
            ),
            deviation,
            Comparison::AtMost,
            0.01,
        ));

        let label = format!("{game}-rm");
        let run = results.first(&label)?;
        let amplitude = run
            .players
            .iter()
            .flat_map(|p| &p.last_iterate)
            .map(|w| w.report.amplitude.iter().copied().fold(0.0, f64::max))
            .fold(0.0, f64::max);
        criteria.push(Criterion::new(
            format!("{label}: policy amplitude"),
            amplitude,
            Comparison::AtLeast,
            CYCLE_AMPLITUDE,
        ));
    }
    Ok(())
}

fn grid_value(run: &RunSummary) -> Result<f64, CliError> {
    let grid = CliffGrid::new(4, 12)?;
    Ok(run.players[0].q_avg[grid.start()][GridAction::North as usize])
}

fn grid(results: &Results, criteria: &mut Vec<Criterion>) -> Result<(), CliError> {
    let run = results.first("rmpp")?;
    criteria.push(Criterion::new(
        "|Qbar(S, North) + 13|",
        (grid_value(run)? + 13.0).abs(),
        Comparison::AtMost,
        0.1,
    ));
    Ok(())
}

fn grid_async(results: &Results, criteria: &mut Vec<Criterion>) -> Result<(), CliError> {
    let seeds = results.label("rmpp")?;
    let mut within = 0;
    for run in seeds.values() {
        if (grid_value(run)? + 13.0).abs() <= 0.5 {
            within += 1;
        }
    }
    criteria.push(Criterion::new(
        "fraction of seeds with |Qbar(S, North) + 13| <= 0.5",
        within as f64 / seeds.len() as f64,
        Comparison::AtLeast,
        1.0,
    ));
    Ok(())
}

/// Every bound the runs checked must have held throughout.
fn bounds(results: &Results, criteria: &mut Vec<Criterion>) {
    for (label, seeds) in &results.runs {
        for (seed, run) in seeds {
            for player in &run.players {
                for bound in &player.bounds {
                    criteria.push(Criterion::new(
                        format!(
                            "{label} seed {seed} player {}: {} failures",
                            player.player, bound.name
                        ),
                        bound.failures as f64,
                        Comparison::AtMost,
                        0.0,
                    ));
                }
            }
        }
    }
}

/// Evaluates the criteria that apply to the experiment in `out` and writes
/// `acceptance.json` there.
pub fn check_acceptance(out: &Path) -> Result<AcceptanceReport, CliError> {
    let results = load(out)?;
    let mut criteria = Vec::new();
    match results.index.preset.as_deref() {
        Some("nosde-avg") => nosde_average(&results, &mut criteria)?,
        Some("nosde-last") => nosde_last(&results, &mut criteria)?,
        Some("omwu-counts") => omwu_counts(&results, &mut criteria)?,
        Some("nosde-a-rmpp") => nosde_async(&results, "rmpp", &mut criteria)?,
        Some("nosde-a-omwu") => nosde_async(&results, "omwu", &mut criteria)?,
        Some("soccer") => soccer(&results, &mut criteria)?,
        Some("rps-rmpp") => matrix_games(&results, &mut criteria)?,
        Some("grid") => grid(&results, &mut criteria)?,
        Some("grid-a") => grid_async(&results, &mut criteria)?,
        _ => {}
    }
    bounds(&results, &mut criteria);
    let report = AcceptanceReport {
        preset: results.index.preset.clone(),
        pass: criteria.iter().all(|c| c.pass),
        criteria,
    };
    crate::output::write_json(&out.join(ACCEPTANCE), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Criterion::new("a", 0.02, Comparison::AtMost, 0.02).pass);
        assert!(!Criterion::new("a", 0.02, Comparison::Below, 0.02).pass);
        assert!(Criterion::new("a", 0.2, Comparison::AtLeast, 0.2).pass);
        assert!(!Criterion::new("a", 0.2, Comparison::Above, 0.2).pass);
        assert!(!Criterion::new("a", f64::NAN, Comparison::AtMost, 1.0).pass);
    }

    #[test]
    fn empty_directory_is_missing_results() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            check_acceptance(dir.path()),
            Err(CliError::MissingResults(_))
        ));
        assert!(matches!(
            check_acceptance(&dir.path().join("absent")),
            Err(CliError::MissingResults(_))
        ));
    }
}
