use std::path::PathBuf;

use lonr::env_model::{
    make_cliff_grid, make_matrix_game, make_nosde, make_random_mdp, make_soccer, CliffGrid,
};
use lonr::{
    Algorithm, MarkovGameSpec, MdpSpec, MinimizerKind, MinimizerParams, RunConfig, StateSelection,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Trace thinning used when neither the flag nor the config sets one.
pub const DEFAULT_TRACE_EVERY: u64 = 10;

/// A JSON experiment document: either a preset name or an explicit list of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_every: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// One environment and learner configuration, repeated for every seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Names the run's output directory.
    pub label: String,
    pub environment: Environment,
    pub config: RunConfig,
    /// Games simulated with the average policies after training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation_episodes: Option<usize>,
    /// States written to `trace.csv`; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_states: Option<Vec<usize>>,
    /// Trailing window of the current-policy statistics; 0 skips them.
    #[serde(default = "default_last_window")]
    pub last_window: u64,
    /// Trailing window of the average-policy statistics; 0 skips them.
    #[serde(default = "default_average_window")]
    pub average_window: u64,
}

fn default_last_window() -> u64 {
    1_000
}

fn default_average_window() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Environment {
    Nosde {
        discount: f64,
    },
    CliffGrid {
        rows: usize,
        cols: usize,
    },
    Soccer,
    MatrixGame {
        payoffs: [Vec<Vec<f64>>; 2],
    },
    RandomMdp {
        seed: u64,
        states: usize,
        actions: usize,
        discount: f64,
    },
    Mdp {
        spec: MdpSpec,
    },
    Game {
        spec: MarkovGameSpec,
    },
}

/// What a run is played on.
pub enum Instance {
    Single(MdpSpec),
    Multi(MarkovGameSpec),
}

impl Environment {
    pub fn build(&self) -> Result<Instance, CliError> {
        let instance = match self {
            Self::Nosde { discount } => Instance::Multi(make_nosde(*discount)?),
            Self::CliffGrid { rows, cols } => Instance::Single(make_cliff_grid(*rows, *cols)?),
            Self::Soccer => Instance::Multi(make_soccer()),
            Self::MatrixGame { payoffs } => Instance::Multi(make_matrix_game(payoffs.clone())?),
            Self::RandomMdp {
                seed,
                states,
                actions,
                discount,
            } => Instance::Single(make_random_mdp(*seed, *states, *actions, *discount)?),
            Self::Mdp { spec } => Instance::Single(spec.clone()),
            Self::Game { spec } => Instance::Multi(spec.clone()),
        };
        Ok(instance)
    }
}

impl ExperimentConfig {
    /// Replaces a preset reference by its runs; explicit values in `self` win.
    pub fn resolve(self) -> Result<Self, CliError> {
        match (&self.preset, self.runs.is_empty()) {
            (Some(_), false) => Err(CliError::Config(
                "give either a preset or explicit runs, not both".into(),
            )),
            (None, true) => Err(CliError::Config("give a preset or at least one run".into())),
            (None, false) => self.validated(),
            (Some(name), true) => {
                let preset = preset(name)?;
                Self {
                    preset: self.preset,
                    runs: preset.runs,
                    seeds: if self.seeds.is_empty() {
                        preset.seeds
                    } else {
                        self.seeds
                    },
                    trace_every: self.trace_every.or(preset.trace_every),
                    out: self.out,
                }
                .validated()
            }
        }
    }

    fn validated(self) -> Result<Self, CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        let mut labels = std::collections::BTreeSet::new();
        for run in &self.runs {
            let ok = !run.label.is_empty()
                && run
                    .label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_.+".contains(c))
                && run.label != "."
                && run.label != "..";
            if !ok {
                return Err(CliError::Config(format!(
                    "label {:?} is not a plain directory name",
                    run.label
                )));
            }
            if !labels.insert(run.label.as_str()) {
                return Err(CliError::Config(format!("duplicate label {:?}", run.label)));
            }
            run.config.validate()?;
            let states = match run.environment.build()? {
                Instance::Single(mdp) => mdp.num_states(),
                Instance::Multi(game) => game.num_states(),
            };
            if let Some(bad) = run.trace_states.iter().flatten().find(|s| **s >= states) {
                return Err(CliError::Config(format!(
                    "{}: trace state {bad} out of range",
                    run.label
                )));
            }
        }
        Ok(self)
    }
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
}

pub const PRESETS: [Preset; 9] = [
    Preset {
        name: "nosde-avg",
        description: "NoSDE, LONR-V, six learners, average policies (gamma 3/4, T 1e5)",
    },
    Preset {
        name: "nosde-last",
        description: "NoSDE, LONR-V, six learners, last iterates (gamma 3/4, T 1e5)",
    },
    Preset {
        name: "omwu-counts",
        description: "NoSDE, LONR-V, OMWU with optimism c in {2,3,4,6,8}",
    },
    Preset {
        name: "nosde-a-rmpp",
        description: "NoSDE, on-policy LONR-A with RM++, 100 seeds, T 2e5",
    },
    Preset {
        name: "nosde-a-omwu",
        description: "NoSDE, on-policy LONR-A with OMWU(c=4), 100 seeds, T 2e5",
    },
    Preset {
        name: "soccer",
        description: "Soccer self-play, six learners, 1000 iterations then 1000 games",
    },
    Preset {
        name: "rps-rmpp",
        description: "Rock-paper-scissors and matching pennies, RM++ against RM",
    },
    Preset {
        name: "grid",
        description: "4x12 cliff grid, LONR-V with RM++, T 1e4",
    },
    Preset {
        name: "grid-a",
        description: "4x12 cliff grid, on-policy LONR-A with RM++, 100 seeds, T 1e5",
    },
];

pub const NOSDE_DISCOUNT: f64 = 0.75;
/// Optimism of the OMWU runs that are not part of the sweep.
pub const PRESET_OPTIMISM: u32 = 4;

fn learner_label(kind: MinimizerKind) -> String {
    kind.name().to_ascii_lowercase().replace('+', "p")
}

fn spec(label: String, environment: Environment, config: RunConfig) -> RunSpec {
    RunSpec {
        label,
        environment,
        config,
        evaluation_episodes: None,
        trace_states: None,
        last_window: default_last_window(),
        average_window: default_average_window(),
    }
}

fn learner_config(algorithm: Algorithm, kind: MinimizerKind, iterations: u64) -> RunConfig {
    let params = if kind == MinimizerKind::Omwu {
        MinimizerParams::default().with_optimism(PRESET_OPTIMISM)
    } else {
        MinimizerParams::default()
    };
    RunConfig::new(algorithm, kind, iterations).with_params(params)
}

fn nosde_learners() -> Vec<RunSpec> {
    MinimizerKind::FULL_INFORMATION
        .into_iter()
        .map(|kind| {
            spec(
                learner_label(kind),
                Environment::Nosde {
                    discount: NOSDE_DISCOUNT,
                },
                learner_config(Algorithm::LonrV, kind, 100_000),
            )
        })
        .collect()
}

fn nosde_async(kind: MinimizerKind) -> Vec<RunSpec> {
    let config =
        learner_config(Algorithm::LonrA, kind, 200_000).with_selection(StateSelection::OnPolicy);
    let mut run = spec(
        learner_label(kind),
        Environment::Nosde {
            discount: NOSDE_DISCOUNT,
        },
        config,
    );
    run.average_window = 0;
    vec![run]
}

fn rps_payoffs() -> [Vec<Vec<f64>>; 2] {
    let a = vec![
        vec![0.0, -1.0, 1.0],
        vec![1.0, 0.0, -1.0],
        vec![-1.0, 1.0, 0.0],
    ];
    let b = a
        .iter()
        .map(|row| row.iter().map(|x| -x).collect())
        .collect();
    [a, b]
}

fn pennies_payoffs() -> [Vec<Vec<f64>>; 2] {
    [
        vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
        vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
    ]
}

fn grid_run(algorithm: Algorithm, iterations: u64) -> RunSpec {
    let grid = CliffGrid::new(4, 12).expect("4x12 is a valid grid");
    let mut config = RunConfig::new(algorithm, MinimizerKind::RmPlusPlus, iterations);
    if algorithm == Algorithm::LonrA {
        config = config.with_selection(StateSelection::OnPolicy);
    }
    let mut run = spec(
        "rmpp".into(),
        Environment::CliffGrid { rows: 4, cols: 12 },
        config,
    );
    run.trace_states = Some(vec![grid.start()]);
    run.last_window = 0;
    run.average_window = 0;
    run
}

/// The runs, default seeds and thinning behind a preset name.
pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let (runs, seeds, trace_every): (Vec<RunSpec>, Vec<u64>, u64) = match name {
        "nosde-avg" | "nosde-last" => (nosde_learners(), vec![0], DEFAULT_TRACE_EVERY),
        "omwu-counts" => {
            let runs = [2, 3, 4, 6, 8]
                .into_iter()
                .map(|c| {
                    let config = RunConfig::new(Algorithm::LonrV, MinimizerKind::Omwu, 100_000)
                        .with_params(MinimizerParams::default().with_optimism(c));
                    spec(
                        format!("omwu-c{c}"),
                        Environment::Nosde {
                            discount: NOSDE_DISCOUNT,
                        },
                        config,
                    )
                })
                .collect();
            (runs, vec![0], DEFAULT_TRACE_EVERY)
        }
        "nosde-a-rmpp" => (
            nosde_async(MinimizerKind::RmPlusPlus),
            (0..100).collect(),
            100,
        ),
        "nosde-a-omwu" => (nosde_async(MinimizerKind::Omwu), (0..100).collect(), 100),
        "soccer" => {
            let runs = MinimizerKind::FULL_INFORMATION
                .into_iter()
                .map(|kind| {
                    let mut run = spec(
                        learner_label(kind),
                        Environment::Soccer,
                        RunConfig::new(Algorithm::LonrV, kind, 1000),
                    );
                    run.evaluation_episodes = Some(1000);
                    run.trace_states = Some(make_soccer().start_states().to_vec());
                    run.last_window = 0;
                    run.average_window = 0;
                    run
                })
                .collect();
            (runs, vec![0], DEFAULT_TRACE_EVERY)
        }
        "rps-rmpp" => {
            let mut runs = Vec::new();
            // Uniform play is already the equilibrium, so player 1 starts off it.
            for (game, payoffs, start) in [
                ("rps", rps_payoffs(), vec![0.5, 0.3, 0.2]),
                ("mp", pennies_payoffs(), vec![0.7, 0.3]),
            ] {
                for kind in [MinimizerKind::RmPlusPlus, MinimizerKind::Rm] {
                    let config = RunConfig::new(Algorithm::LonrV, kind, 100_000)
                        .with_initial_policy(vec![vec![start.clone()]]);
                    let mut run = spec(
                        format!("{game}-{}", learner_label(kind)),
                        Environment::MatrixGame {
                            payoffs: payoffs.clone(),
                        },
                        config,
                    );
                    run.average_window = 0;
                    runs.push(run);
                }
            }
            (runs, vec![0], DEFAULT_TRACE_EVERY)
        }
        "grid" => (
            vec![grid_run(Algorithm::LonrV, 10_000)],
            vec![0],
            DEFAULT_TRACE_EVERY,
        ),
        "grid-a" => (
            vec![grid_run(Algorithm::LonrA, 100_000)],
            (0..100).collect(),
            100,
        ),
        other => {
            let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
            return Err(CliError::Config(format!(
                "unknown preset {other:?}; known: {}",
                known.join(", ")
            )));
        }
    };
    Ok(ExperimentConfig {
        preset: Some(name.to_string()),
        runs,
        seeds,
        trace_every: Some(trace_every),
        out: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_preset_resolves() {
        for p in &PRESETS {
            let config = ExperimentConfig {
                preset: Some(p.name.to_string()),
                runs: Vec::new(),
                seeds: Vec::new(),
                trace_every: None,
                out: None,
            }
            .resolve()
            .unwrap();
            assert!(
                !config.runs.is_empty() && !config.seeds.is_empty(),
                "{}",
                p.name
            );
        }
    }

    #[test]
    fn preset_and_runs_are_exclusive() {
        let mut config = preset("grid").unwrap();
        assert!(config.clone().resolve().is_err());
        config.preset = None;
        assert!(config.clone().resolve().is_ok());
        config.runs.clear();
        assert!(config.resolve().is_err());
    }

    #[test]
    fn empty_seeds_and_bad_labels_are_rejected() {
        let mut config = preset("grid").unwrap();
        config.preset = None;
        config.seeds.clear();
        assert!(config.clone().resolve().is_err());
        config.seeds = vec![1];
        config.runs[0].label = "../escape".into();
        assert!(config.clone().resolve().is_err());
        config.runs[0].label = "ok".into();
        config.runs.push(config.runs[0].clone());
        assert!(config.resolve().is_err());
    }

    #[test]
    fn explicit_config_round_trips() {
        let mut config = preset("rps-rmpp").unwrap();
        config.preset = None;
        let json = serde_json::to_string_pretty(&config).unwrap();
        assert_eq!(
            serde_json::from_str::<ExperimentConfig>(&json).unwrap(),
            config
        );
    }
}
