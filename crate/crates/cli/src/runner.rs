use std::fs;
use std::path::{Path, PathBuf};

use lonr::lonr::evaluate_policies;
use lonr::{run, run_selfplay, RunResult};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Instance, RunSpec};
use crate::error::CliError;
use crate::output::{
    player_summary, run_dir, trace_csv, write_json, ExperimentSummary, RunEntry, RunSummary,
    CONFIG_ECHO, SUMMARY, TRACE,
};

/// A resolved experiment plus where to put it.
pub struct Plan {
    pub config: ExperimentConfig,
    pub trace_every: u64,
    pub out: PathBuf,
}

fn runtime(err: lonr::LonrError) -> CliError {
    CliError::Runtime(err.to_string())
}

/// The run's summary and its trace CSV.
fn execute(spec: &RunSpec, seed: u64, trace_every: u64) -> Result<(RunSummary, String), CliError> {
    let mut config = spec
        .config
        .clone()
        .with_seed(seed)
        .with_trace_every(trace_every);
    // The window statistics need every one of the final iterations.
    config.trace.tail = config
        .trace
        .tail
        .max(spec.last_window)
        .max(spec.average_window);
    let window = |w: u64| w.min(config.iterations);
    let (results, discount, evaluation): (Vec<RunResult>, f64, _) = match spec
        .environment
        .build()?
    {
        Instance::Single(mdp) => (
            vec![run(&mdp, &config).map_err(runtime)?],
            mdp.discount(),
            None,
        ),
        Instance::Multi(game) => {
            let results = run_selfplay(&game, &config).map_err(runtime)?;
            let evaluation = match spec.evaluation_episodes {
                Some(episodes) => {
                    let policies: Vec<_> =
                        results.iter().map(|r| r.average_policy.clone()).collect();
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    Some(evaluate_policies(&game, &policies, episodes, &mut rng).map_err(runtime)?)
                }
                None => None,
            };
            (results, game.discount(), evaluation)
        }
    };
    let players = results
        .iter()
        .map(|r| player_summary(r, window(spec.last_window), window(spec.average_window)))
        .collect::<Result<_, _>>()?;
    let summary = RunSummary {
        label: spec.label.clone(),
        seed,
        algorithm: config.algorithm,
        minimizer: config.minimizer,
        iterations: config.iterations,
        discount,
        players,
        evaluation,
    };
    Ok((
        summary,
        trace_csv(&results, trace_every, spec.trace_states.as_deref()),
    ))
}

fn write_run(
    out: &Path,
    spec: &RunSpec,
    seed: u64,
    trace_every: u64,
) -> Result<RunEntry, CliError> {
    let (summary, csv) = execute(spec, seed, trace_every)?;
    let rel = run_dir(seed, &spec.label);
    let dir = out.join(&rel);
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    fs::write(dir.join(TRACE), csv).map_err(CliError::io(dir.join(TRACE)))?;
    write_json(&dir.join(SUMMARY), &summary)?;
    Ok(RunEntry {
        label: spec.label.clone(),
        seed,
        dir: rel,
    })
}

/// Runs every (seed, run) pair on `jobs` worker threads (0 picks the core count)
/// and writes the per-run and experiment-level outputs.
pub fn run_experiment(plan: &Plan, jobs: usize) -> Result<ExperimentSummary, CliError> {
    let out = &plan.out;
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    let echo = ExperimentConfig {
        preset: None,
        out: None,
        trace_every: Some(plan.trace_every),
        ..plan.config.clone()
    };
    write_json(&out.join(CONFIG_ECHO), &echo)?;

    let pairs: Vec<(u64, &RunSpec)> = plan
        .config
        .seeds
        .iter()
        .flat_map(|s| plan.config.runs.iter().map(move |r| (*s, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let runs = pool.install(|| {
        pairs
            .par_iter()
            .map(|(seed, spec)| write_run(out, spec, *seed, plan.trace_every))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let summary = ExperimentSummary {
        preset: plan.config.preset.clone(),
        seeds: plan.config.seeds.clone(),
        trace_every: plan.trace_every,
        runs,
    };
    write_json(&out.join(SUMMARY), &summary)?;
    Ok(summary)
}
