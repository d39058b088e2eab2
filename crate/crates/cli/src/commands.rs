//! File-level implementations of the subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use mirl_core::dataset::{read_dataset, write_dataset, Bounds};
use mirl_core::irl::MixtureModel;
use mirl_core::mdp::Trajectory;
use mirl_core::reward::RewardModel;
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::experiment::{
    generate, prepare, train, Artifact, DataManifest, GeneratedData, Metrics, Scene, TrainOutcome,
};

pub const SCHEMA_LINE: &str = "#schema=v1";
pub const RANDOM_FILE: &str = "random.jsonl";
pub const EXPERT_FILE: &str = "expert.jsonl";
pub const DATA_MANIFEST_FILE: &str = "manifest.json";
pub const TRAIN_CSV: &str = "train.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MODEL_FILE: &str = "model.json";
pub const MIXTURE_DIR: &str = "mixture";
pub const CLUSTERS_FILE: &str = "clusters.json";

pub fn task_file(task: usize) -> String {
    format!("expert_task_{task}.jsonl")
}

/// CSV with a leading schema comment line.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut buf = format!("{SCHEMA_LINE}\n").into_bytes();
    {
        let mut writer = csv::Writer::from_writer(&mut buf);
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn cmd_generate(config: &ExperimentConfig) -> CliResult<DataManifest> {
    let scene = Scene::new(config)?;
    let (data, manifest) = generate(&scene, config)?;
    let out = &config.out;
    create_dir(out)?;
    write_dataset(out.join(RANDOM_FILE), &data.random)?;
    write_dataset(out.join(EXPERT_FILE), &data.experts)?;
    for &t in &manifest.tasks {
        let subset: Vec<Trajectory> = data.experts.iter().filter(|x| x.task == Some(t)).cloned().collect();
        write_dataset(out.join(task_file(t)), &subset)?;
    }
    write_json(&out.join(DATA_MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn cmd_corrupt(config: &ExperimentConfig, input: &Path) -> CliResult<Vec<Trajectory>> {
    let scenario = config.scenario_config()?;
    let n_actions = scenario.action_count();
    let bounds = Bounds {
        n_states: usize::try_from(scenario.state_count()).unwrap_or(usize::MAX),
        n_actions,
    };
    let dataset = read_input(input, bounds)?;
    let corrupted = crate::experiment::corrupt(&dataset, n_actions, config.aer, config.seed)?;
    if let Some(parent) = config.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_dataset(&config.out, &corrupted)?;
    Ok(corrupted)
}

fn read_input(path: &Path, bounds: Bounds) -> CliResult<Vec<Trajectory>> {
    if !path.exists() {
        return Err(CliError::validation(format!("{} does not exist", path.display())));
    }
    Ok(read_dataset(path, Some(bounds))?)
}

fn read_data_manifest(data_dir: &Path) -> CliResult<DataManifest> {
    let manifest_path = data_dir.join(DATA_MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", manifest_path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", manifest_path.display())))
}

/// The tasks a `generate` output directory was written for.
pub fn data_tasks(data_dir: &Path) -> CliResult<Vec<usize>> {
    Ok(read_data_manifest(data_dir)?.tasks)
}

/// Reads `generate` output and checks it belongs to the configured scenario.
pub fn load_generated(scene: &Scene, data_dir: &Path) -> CliResult<GeneratedData> {
    let manifest = read_data_manifest(data_dir)?;
    if manifest.scenario != *scene.env.config() {
        return Err(CliError::validation(format!(
            "{} was generated for a different scenario",
            data_dir.display()
        )));
    }
    let bounds = Bounds {
        n_states: scene.n_states(),
        n_actions: scene.n_actions(),
    };
    Ok(GeneratedData {
        random: read_input(&data_dir.join(RANDOM_FILE), bounds)?,
        experts: read_input(&data_dir.join(EXPERT_FILE), bounds)?,
    })
}

pub fn cmd_train(config: &ExperimentConfig, data_dir: &Path) -> CliResult<TrainOutcome> {
    let scene = Scene::new(config)?;
    let generated = load_generated(&scene, data_dir)?;
    let data = prepare(&scene, config, &generated)?;
    let outcome = train(&scene, config, &data)?;
    let out = &config.out;
    create_dir(out)?;
    write_csv(&out.join(TRAIN_CSV), &outcome.rows)?;
    write_json(&out.join(SUMMARY_FILE), &outcome.metrics)?;
    match &outcome.artifact {
        Artifact::Single { model, .. } => model.save(out.join(MODEL_FILE))?,
        Artifact::Mixture { mixture, history } => {
            mixture.save(out.join(MIXTURE_DIR), &config.irl_config(), history)?
        }
        Artifact::Clusters { labels } => write_json(
            &out.join(CLUSTERS_FILE),
            &serde_json::json!({ "algorithm": config.algorithm.name(), "labels": labels }),
        )?,
    }
    Ok(outcome)
}

/// Loads a checkpoint written by `train`: a model file or a mixture directory.
pub fn load_artifact(config: &ExperimentConfig, checkpoint: &Path) -> CliResult<Artifact> {
    if !checkpoint.exists() {
        return Err(CliError::validation(format!("{} does not exist", checkpoint.display())));
    }
    if checkpoint.is_dir() {
        let (mixture, manifest) = MixtureModel::load(checkpoint)?;
        return Ok(Artifact::Mixture {
            mixture,
            history: manifest.log_likelihood,
        });
    }
    let base = match config.algorithm {
        Algorithm::MaxEnt => mirl_core::irl::BaseTrainer::MaxEnt,
        Algorithm::Ml => mirl_core::irl::BaseTrainer::Ml,
        other => {
            return Err(CliError::validation(format!(
                "a single-model checkpoint needs --algorithm maxent or ml, not {}",
                other.name()
            )))
        }
    };
    Ok(Artifact::Single {
        base,
        model: RewardModel::load(checkpoint)?,
    })
}

/// Scores a checkpoint; `dataset` defaults to the clean demonstrations the
/// checkpoint was trained on.
pub fn cmd_evaluate(
    config: &ExperimentConfig,
    data_dir: &Path,
    checkpoint: &Path,
    dataset: Option<&Path>,
) -> CliResult<Metrics> {
    let scene = Scene::new(config)?;
    let generated = load_generated(&scene, data_dir)?;
    let data = prepare(&scene, config, &generated)?;
    let artifact = load_artifact(config, checkpoint)?;
    let eval_set = match dataset {
        Some(path) => read_input(
            path,
            Bounds {
                n_states: scene.n_states(),
                n_actions: scene.n_actions(),
            },
        )?,
        None => data.clean.clone(),
    };
    if eval_set.is_empty() {
        return Err(CliError::validation("the evaluation dataset is empty"));
    }
    crate::experiment::evaluate(&scene, config, &data, &artifact, &eval_set)
}

#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub algorithm: String,
    pub seed: u64,
    pub evd: Option<f64>,
    pub ape: Option<f64>,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
}

/// Runs every cell `(axis value, algorithm, seed)` from freshly generated
/// data and writes `sweep.csv`.
pub fn cmd_sweep(config: &ExperimentConfig) -> CliResult<Vec<SweepRow>> {
    let sweep = &config.sweep;
    if sweep.aer.is_empty() && sweep.n_traj.is_empty() {
        return Err(CliError::validation("the sweep needs a non-empty aer or n_traj axis"));
    }
    if sweep.algorithms.is_empty() || sweep.seeds.is_empty() {
        return Err(CliError::validation("the sweep needs at least one algorithm and one seed"));
    }
    if let Some(bad) = sweep.aer.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(CliError::validation(format!("aer {bad} outside [0, 1]")));
    }
    if sweep.n_traj.contains(&0) {
        return Err(CliError::validation("n_traj values must be at least 1"));
    }
    let scene = Scene::new(config)?;
    let mut cells: Vec<(&str, f64, ExperimentConfig)> = Vec::new();
    for &aer in &sweep.aer {
        cells.push(("aer", aer, ExperimentConfig { aer, ..config.clone() }));
    }
    for &n in &sweep.n_traj {
        cells.push((
            "n_traj",
            n as f64,
            ExperimentConfig {
                n_expert_trajectories: n,
                ..config.clone()
            },
        ));
    }
    let mut runs = Vec::new();
    for (axis, value, cell) in &cells {
        for &algorithm in &sweep.algorithms {
            for &seed in &sweep.seeds {
                let run = ExperimentConfig {
                    algorithm,
                    seed,
                    ..cell.clone()
                };
                run.validate()?;
                runs.push((*axis, *value, run));
            }
        }
    }
    let score = |run: &ExperimentConfig| -> CliResult<Metrics> {
        let (generated, _) = generate(&scene, run)?;
        let data = prepare(&scene, run, &generated)?;
        Ok(train(&scene, run, &data)?.metrics)
    };
    let results = parallel_map(&runs, |(_, _, run)| score(run));
    let mut rows = Vec::with_capacity(runs.len());
    for ((axis, value, run), result) in runs.iter().zip(results) {
        let m = result?;
        rows.push(SweepRow {
            axis: axis.to_string(),
            value: *value,
            algorithm: run.algorithm.name().to_string(),
            seed: run.seed,
            evd: m.evd,
            ape: m.ape,
            nmi: m.nmi,
            ari: m.ari,
        });
    }
    create_dir(&config.out)?;
    write_csv(&config.out.join(SWEEP_CSV), &rows)?;
    Ok(rows)
}

/// Where `train` puts the checkpoint for `config`.
/// Maps `f` over `items` on up to `available_parallelism` threads; results
/// keep the input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len());
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let done = Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                done.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every item was processed")).collect()
}

pub fn checkpoint_path(config: &ExperimentConfig) -> PathBuf {
    if config.algorithm.is_mixture() {
        config.out.join(MIXTURE_DIR)
    } else {
        config.out.join(MODEL_FILE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..57).collect();
        assert_eq!(parallel_map(&items, |x| x * x), items.iter().map(|x| x * x).collect::<Vec<_>>());
        assert!(parallel_map(&[] as &[u64], |x| *x).is_empty());
    }
}
