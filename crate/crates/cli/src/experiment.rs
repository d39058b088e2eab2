//! Data generation, corruption, training and scoring shared by the commands.

use std::collections::BTreeMap;

use mirl_core::baselines::{featurize, gmm, kmeans};
use mirl_core::irl::{
    em_multi_intention_irl, merge_similar_rewards, model_policy, responsibilities, train_single,
    BaseTrainer, IrlConfig, MixtureModel,
};
use mirl_core::mdp::{
    estimate_transitions, policy_value, sample_trajectories, trajectory_log_policy_likelihood,
    RewardTensor, StochasticPolicy, TabularMdp, Trajectory,
};
use mirl_core::metrics::{ape, ari, nmi};
use mirl_core::radar::RadarEnv;
use mirl_core::reward::{Activation, RewardModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig, RewardKind};
use crate::error::{CliError, CliResult};

/// Independent seed for a named stream of a run.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const RANDOM_STREAM: u64 = 1;
const CORRUPT_STREAM: u64 = 2;
const TASK_STREAM_BASE: u64 = 100;

/// Ground truth of the scenario: true dynamics, expert policies and rewards.
pub struct Scene {
    pub env: RadarEnv,
    pub true_mdp: TabularMdp,
    pub start: Vec<f64>,
    experts: BTreeMap<usize, StochasticPolicy>,
    rewards: BTreeMap<usize, RewardTensor>,
    values: BTreeMap<usize, f64>,
}

impl Scene {
    pub fn new(config: &ExperimentConfig) -> CliResult<Self> {
        let scenario = config.scenario_config()?;
        let env = RadarEnv::new(scenario)?;
        let discount = config.irl.discount;
        let true_mdp = env.true_mdp(discount)?;
        let start = env.start_distribution();
        let (mut experts, mut rewards, mut values) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
        for &t in &config.tasks {
            if experts.contains_key(&t) {
                continue;
            }
            let weights = env.config().task(t)?;
            let expert = env.expert_policy(&weights, discount)?;
            let reward = env.reward_tensor(&weights, true_mdp.support().clone());
            values.insert(t, policy_value(&true_mdp, &reward, &expert, &start)?);
            experts.insert(t, expert);
            rewards.insert(t, reward);
        }
        Ok(Self {
            env,
            true_mdp,
            start,
            experts,
            rewards,
            values,
        })
    }

    pub fn n_states(&self) -> usize {
        self.env.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.env.n_actions()
    }

    pub fn expert(&self, task: usize) -> CliResult<&StochasticPolicy> {
        self.experts
            .get(&task)
            .ok_or_else(|| CliError::validation(format!("task {task} is not part of this experiment")))
    }

    pub fn reward(&self, task: usize) -> CliResult<&RewardTensor> {
        self.rewards
            .get(&task)
            .ok_or_else(|| CliError::validation(format!("task {task} is not part of this experiment")))
    }

    /// `V(expert) − V(policy)` under the task's true reward.
    pub fn value_gap(&self, task: usize, policy: &StochasticPolicy) -> CliResult<f64> {
        let v = policy_value(&self.true_mdp, self.reward(task)?, policy, &self.start)?;
        Ok(self.values[&task] - v)
    }
}

/// Random-policy rollouts plus labelled expert rollouts for every task.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedData {
    pub random: Vec<Trajectory>,
    pub experts: Vec<Trajectory>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataManifest {
    pub format: String,
    pub seed: u64,
    pub tasks: Vec<usize>,
    pub n_random: usize,
    pub n_expert_per_task: usize,
    pub random_seed: u64,
    pub task_seeds: BTreeMap<usize, u64>,
    pub scenario: mirl_core::radar::ScenarioConfig,
}

pub const DATA_FORMAT: &str = "mirl-data/v1";

pub fn generate(scene: &Scene, config: &ExperimentConfig) -> CliResult<(GeneratedData, DataManifest)> {
    let uniform = StochasticPolicy::uniform(scene.n_states(), scene.n_actions());
    let random_seed = derive_seed(config.seed, RANDOM_STREAM);
    let random = sample_or_empty(scene, &uniform, config.n_random_trajectories, random_seed)?;
    let mut experts = Vec::with_capacity(config.tasks.len() * config.n_expert_trajectories);
    let mut task_seeds = BTreeMap::new();
    for &t in &config.tasks {
        let seed = derive_seed(config.seed, TASK_STREAM_BASE + t as u64);
        task_seeds.insert(t, seed);
        for mut traj in sample_or_empty(scene, scene.expert(t)?, config.n_expert_trajectories, seed)? {
            traj.id = experts.len() as u64;
            traj.task = Some(t);
            experts.push(traj);
        }
    }
    let manifest = DataManifest {
        format: DATA_FORMAT.to_string(),
        seed: config.seed,
        tasks: config.tasks.clone(),
        n_random: config.n_random_trajectories,
        n_expert_per_task: config.n_expert_trajectories,
        random_seed,
        task_seeds,
        scenario: scene.env.config().clone(),
    };
    Ok((GeneratedData { random, experts }, manifest))
}

fn sample_or_empty(scene: &Scene, policy: &StochasticPolicy, n: usize, seed: u64) -> CliResult<Vec<Trajectory>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(sample_trajectories(&scene.true_mdp, policy, &scene.start, n, seed)?)
}

/// Replaces each action, with probability `aer`, by one of the other
/// `n_actions − 1` actions drawn uniformly.
pub fn corrupt(dataset: &[Trajectory], n_actions: usize, aer: f64, seed: u64) -> CliResult<Vec<Trajectory>> {
    if !(0.0..=1.0).contains(&aer) {
        return Err(CliError::validation(format!("aer {aer} outside [0, 1]")));
    }
    if aer > 0.0 && n_actions < 2 {
        return Err(CliError::validation("corruption needs at least two actions"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = dataset.to_vec();
    for traj in &mut out {
        for (_, a) in &mut traj.steps {
            if *a >= n_actions {
                return Err(CliError::validation(format!(
                    "action {a} out of range for {n_actions} actions"
                )));
            }
            if rng.random::<f64>() < aer {
                let other = rng.random_range(0..n_actions - 1);
                *a = if other >= *a { other + 1 } else { other };
            }
        }
    }
    Ok(out)
}

/// What the learner sees: estimated dynamics and (possibly corrupted)
/// demonstrations, next to the clean demonstrations used for scoring.
pub struct TrainingData {
    pub mdp: TabularMdp,
    pub clean: Vec<Trajectory>,
    pub observed: Vec<Trajectory>,
}

pub fn prepare(scene: &Scene, config: &ExperimentConfig, data: &GeneratedData) -> CliResult<TrainingData> {
    let clean: Vec<Trajectory> = data
        .experts
        .iter()
        .filter(|t| t.task.is_some_and(|task| config.tasks.contains(&task)))
        .cloned()
        .collect();
    if clean.is_empty() {
        return Err(CliError::validation("no expert trajectories for the configured tasks"));
    }
    let observed = if config.aer > 0.0 {
        corrupt(&clean, scene.n_actions(), config.aer, derive_seed(config.seed, CORRUPT_STREAM))?
    } else {
        clean.clone()
    };
    let mut pool = data.random.clone();
    if config.transitions_include_experts {
        pool.extend(observed.iter().cloned());
    }
    let estimate = estimate_transitions(&pool, scene.n_states(), scene.n_actions(), config.transition_smoothing)?;
    let mdp = TabularMdp::new(estimate, config.irl.discount, scene.env.config().horizon)?;
    Ok(TrainingData { mdp, clean, observed })
}

/// Evaluation summary; `null` where a metric does not apply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub evd: Option<f64>,
    pub ape: Option<f64>,
}

/// One CSV line of a training report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub iteration: usize,
    pub log_likelihood: f64,
    pub evd: Option<f64>,
    pub ape: Option<f64>,
    pub wall_ms: f64,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
}

fn task_labels(dataset: &[Trajectory]) -> Option<Vec<usize>> {
    dataset.iter().map(|t| t.task).collect()
}

fn clustering(dataset: &[Trajectory], assign: &[usize]) -> CliResult<(Option<f64>, Option<f64>)> {
    match task_labels(dataset) {
        Some(truth) => Ok((Some(nmi(&truth, assign)?), Some(ari(&truth, assign)?))),
        None => Ok((None, None)),
    }
}

/// Mean EVD over trajectories, each scored against the expert of its own
/// task, and APE; `policies` are greedy, `assign` picks one per trajectory.
pub fn score(
    scene: &Scene,
    dataset: &[Trajectory],
    policies: &[StochasticPolicy],
    assign: &[usize],
) -> CliResult<(Option<f64>, f64)> {
    let refs: Vec<&StochasticPolicy> = assign.iter().map(|&k| &policies[k]).collect();
    let ape_value = ape(dataset, &refs)?;
    let Some(truth) = task_labels(dataset) else {
        return Ok((None, ape_value));
    };
    let mut cache: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut total = 0.0;
    for (&task, &k) in truth.iter().zip(assign) {
        let gap = match cache.get(&(k, task)) {
            Some(&g) => g,
            None => {
                let g = scene.value_gap(task, &policies[k])?.abs();
                cache.insert((k, task), g);
                g
            }
        };
        total += gap;
    }
    Ok((Some(total / dataset.len() as f64), ape_value))
}

/// Trained artifact of a run.
#[derive(Clone, Debug)]
pub enum Artifact {
    Single { base: BaseTrainer, model: RewardModel },
    Mixture { mixture: MixtureModel, history: Vec<f64> },
    Clusters { labels: Vec<usize> },
}

pub struct TrainOutcome {
    pub rows: Vec<Row>,
    pub metrics: Metrics,
    pub artifact: Artifact,
}

impl ExperimentConfig {
    /// IRL settings with the run seed applied.
    pub fn irl_config(&self) -> IrlConfig {
        IrlConfig {
            seed: self.seed,
            ..self.irl.clone()
        }
    }

    fn base_trainer(&self) -> BaseTrainer {
        match self.algorithm {
            Algorithm::MaxEnt | Algorithm::MiMaxEnt => BaseTrainer::MaxEnt,
            _ => BaseTrainer::Ml,
        }
    }

    pub fn new_model(&self, input_dim: usize, seed: u64) -> CliResult<RewardModel> {
        Ok(match self.reward_model {
            RewardKind::Linear => RewardModel::linear(input_dim),
            RewardKind::Mlp => RewardModel::mlp(input_dim, &self.hidden, Activation::Relu, seed)?,
        })
    }
}

fn wall(config: &ExperimentConfig, ms: f64) -> f64 {
    if config.record_timing {
        ms
    } else {
        0.0
    }
}

pub fn train(scene: &Scene, config: &ExperimentConfig, data: &TrainingData) -> CliResult<TrainOutcome> {
    match config.algorithm {
        Algorithm::MaxEnt | Algorithm::Ml => train_single_model(scene, config, data),
        Algorithm::MiMaxEnt | Algorithm::MiMl => train_mixture(scene, config, data),
        Algorithm::Kmeans | Algorithm::Gmm => train_clusters(scene, config, data),
    }
}

fn train_single_model(scene: &Scene, config: &ExperimentConfig, data: &TrainingData) -> CliResult<TrainOutcome> {
    let irl = config.irl_config();
    let base = config.base_trainer();
    let model = config.new_model(scene.env.feature_dim(), irl.seed)?;
    let zeros = vec![0; data.clean.len()];
    let mut probe = |policy: &StochasticPolicy| {
        let (evd, ape) = score(scene, &data.clean, &[policy.greedy()], &zeros)
            .map_err(|e| mirl_core::Error::Numeric(e.to_string()))?;
        Ok((evd.unwrap_or(f64::NAN), ape))
    };
    let (model, report) = train_single(base, &data.mdp, &scene.env, &data.observed, model, &irl, None, Some(&mut probe))?;
    let has_labels = task_labels(&data.clean).is_some();
    let rows: Vec<Row> = report
        .records
        .iter()
        .map(|r| Row {
            iteration: r.iteration,
            log_likelihood: r.log_likelihood,
            evd: r.evd.filter(|_| has_labels),
            ape: r.ape,
            wall_ms: wall(config, r.wall_ms),
            nmi: None,
            ari: None,
        })
        .collect();
    let last = rows.last().expect("at least one iteration");
    let metrics = Metrics {
        nmi: None,
        ari: None,
        evd: last.evd,
        ape: last.ape,
    };
    Ok(TrainOutcome {
        rows,
        metrics,
        artifact: Artifact::Single { base, model },
    })
}

fn train_mixture(scene: &Scene, config: &ExperimentConfig, data: &TrainingData) -> CliResult<TrainOutcome> {
    let irl = config.irl_config();
    let base = config.base_trainer();
    let dim = scene.env.feature_dim();
    let init = |seed: u64| config.new_model(dim, seed).map_err(|e| mirl_core::Error::InvalidInput(e.to_string()));
    let mut cluster_scores = Vec::new();
    let mut probe = |policies: &[StochasticPolicy], assign: &[usize]| {
        let greedy: Vec<StochasticPolicy> = policies.iter().map(|p| p.greedy()).collect();
        let wrap = |e: CliError| mirl_core::Error::Numeric(e.to_string());
        let (evd, ape) = score(scene, &data.clean, &greedy, assign).map_err(wrap)?;
        cluster_scores.push(clustering(&data.clean, assign).map_err(wrap)?);
        Ok((evd.unwrap_or(f64::NAN), ape))
    };
    let outcome = em_multi_intention_irl(
        &data.mdp,
        &scene.env,
        &data.observed,
        config.mixture_k(),
        &irl,
        base,
        &init,
        Some(&mut probe),
    )?;
    let has_labels = task_labels(&data.clean).is_some();
    let mut rows: Vec<Row> = outcome
        .records
        .iter()
        .zip(&cluster_scores)
        .map(|(r, &(nmi, ari))| Row {
            iteration: r.iteration,
            log_likelihood: r.log_likelihood,
            evd: r.evd.filter(|_| has_labels),
            ape: r.ape,
            wall_ms: wall(config, r.wall_ms),
            nmi,
            ari,
        })
        .collect();
    let mut mixture = outcome.mixture;
    let mut history = outcome.log_likelihood;
    if config.k.is_none() {
        let merged = merge_similar_rewards(&mixture, &data.mdp, &scene.env, &scene.start, &irl, config.merge_threshold)?;
        if merged.k() < mixture.k() {
            mixture = merged;
            mixture.responsibilities = responsibilities(&mixture, &data.observed, &data.mdp, &scene.env, &irl)?;
            let observed = mixture_log_likelihood(scene, data, &mixture, &irl)?;
            history.push(observed);
            let m = evaluate_mixture(scene, data, &mixture, &irl, &data.clean)?;
            rows.push(Row {
                iteration: rows.last().map_or(0, |r| r.iteration) + 1,
                log_likelihood: observed / data.observed.len() as f64,
                evd: m.evd,
                ape: m.ape,
                wall_ms: 0.0,
                nmi: m.nmi,
                ari: m.ari,
            });
        }
    }
    let last = rows.last().expect("at least one EM round");
    let metrics = Metrics {
        nmi: last.nmi,
        ari: last.ari,
        evd: last.evd,
        ape: last.ape,
    };
    Ok(TrainOutcome {
        rows,
        metrics,
        artifact: Artifact::Mixture { mixture, history },
    })
}

fn mixture_log_likelihood(scene: &Scene, data: &TrainingData, mixture: &MixtureModel, irl: &IrlConfig) -> CliResult<f64> {
    let policies = component_policies(scene, data, mixture, irl)?;
    let mut total = 0.0;
    for traj in &data.observed {
        let terms: Vec<f64> = policies
            .iter()
            .zip(&mixture.priors)
            .map(|(p, prior)| prior.ln() + trajectory_log_policy_likelihood(traj, p))
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        total += max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    }
    Ok(total)
}

fn component_policies(scene: &Scene, data: &TrainingData, mixture: &MixtureModel, irl: &IrlConfig) -> CliResult<Vec<StochasticPolicy>> {
    mixture
        .models
        .iter()
        .map(|m| Ok(model_policy(mixture.base, &data.mdp, &scene.env, m, irl)?))
        .collect()
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

fn evaluate_mixture(
    scene: &Scene,
    data: &TrainingData,
    mixture: &MixtureModel,
    irl: &IrlConfig,
    dataset: &[Trajectory],
) -> CliResult<Metrics> {
    let greedy: Vec<StochasticPolicy> = component_policies(scene, data, mixture, irl)?
        .iter()
        .map(StochasticPolicy::greedy)
        .collect();
    let assign: Vec<usize> = responsibilities(mixture, dataset, &data.mdp, &scene.env, irl)?
        .iter()
        .map(|row| argmax(row))
        .collect();
    let (evd, ape) = score(scene, dataset, &greedy, &assign)?;
    let (nmi, ari) = clustering(dataset, &assign)?;
    Ok(Metrics {
        nmi,
        ari,
        evd,
        ape: Some(ape),
    })
}

fn train_clusters(scene: &Scene, config: &ExperimentConfig, data: &TrainingData) -> CliResult<TrainOutcome> {
    let features = featurize(&data.observed, scene.n_states(), scene.n_actions())?;
    let k = config.cluster_k();
    let n = data.observed.len() as f64;
    let (labels, objective): (Vec<usize>, Vec<f64>) = if config.algorithm == Algorithm::Kmeans {
        let fit = kmeans(&features, k, config.seed, config.clustering_restarts)?;
        (fit.labels, fit.inertia_history.iter().map(|x| -x / n).collect())
    } else {
        let fit = gmm(&features, k, config.seed, config.clustering_restarts)?;
        (fit.labels, fit.history.iter().map(|x| x / n).collect())
    };
    let (nmi, ari) = clustering(&data.clean, &labels)?;
    let last = objective.len() - 1;
    let rows = objective
        .iter()
        .enumerate()
        .map(|(i, &ll)| Row {
            iteration: i,
            log_likelihood: ll,
            evd: None,
            ape: None,
            wall_ms: 0.0,
            nmi: nmi.filter(|_| i == last),
            ari: ari.filter(|_| i == last),
        })
        .collect();
    Ok(TrainOutcome {
        rows,
        metrics: Metrics {
            nmi,
            ari,
            evd: None,
            ape: None,
        },
        artifact: Artifact::Clusters { labels },
    })
}

/// Scores a trained artifact on `dataset`; mixtures assign each trajectory to
/// its most responsible component.
pub fn evaluate(
    scene: &Scene,
    config: &ExperimentConfig,
    data: &TrainingData,
    artifact: &Artifact,
    dataset: &[Trajectory],
) -> CliResult<Metrics> {
    let irl = config.irl_config();
    match artifact {
        Artifact::Single { base, model } => {
            let policy = model_policy(*base, &data.mdp, &scene.env, model, &irl)?.greedy();
            let (evd, ape) = score(scene, dataset, &[policy], &vec![0; dataset.len()])?;
            Ok(Metrics {
                nmi: None,
                ari: None,
                evd,
                ape: Some(ape),
            })
        }
        Artifact::Mixture { mixture, .. } => evaluate_mixture(scene, data, mixture, &irl, dataset),
        Artifact::Clusters { .. } => Err(CliError::validation(
            "clustering baselines have no reward to evaluate; read their train summary instead",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(steps: Vec<(usize, usize)>) -> Trajectory {
        Trajectory {
            id: 0,
            task: Some(0),
            steps,
            terminal: 0,
        }
    }

    #[test]
    fn corrupt_extremes() {
        let data = vec![traj((0..50).map(|i| (i % 3, i % 4)).collect())];
        assert_eq!(corrupt(&data, 4, 0.0, 1).unwrap(), data);
        let flipped = corrupt(&data, 4, 1.0, 1).unwrap();
        for (a, b) in data[0].steps.iter().zip(&flipped[0].steps) {
            assert_eq!(a.0, b.0);
            assert_ne!(a.1, b.1);
            assert!(b.1 < 4);
        }
        assert_eq!(flipped[0].task, Some(0));
        assert!(corrupt(&data, 4, 1.5, 1).is_err());
        assert!(corrupt(&data, 1, 0.5, 1).is_err());
    }

    #[test]
    fn corrupt_rate_within_three_sigma() {
        let data: Vec<Trajectory> = (0..1000).map(|_| traj((0..100).map(|i| (0, i % 6)).collect())).collect();
        let out = corrupt(&data, 6, 0.3, 42).unwrap();
        let flipped = data
            .iter()
            .zip(&out)
            .flat_map(|(a, b)| a.steps.iter().zip(&b.steps))
            .filter(|(x, y)| x.1 != y.1)
            .count();
        let rate = flipped as f64 / 1e5;
        assert!((rate - 0.3).abs() <= 0.0044, "rate {rate}");
    }

    #[test]
    fn corrupt_targets_are_uniform_over_other_actions() {
        let data: Vec<Trajectory> = (0..300).map(|_| traj(vec![(0, 2); 100])).collect();
        let out = corrupt(&data, 4, 1.0, 3).unwrap();
        let mut counts = [0usize; 4];
        for t in &out {
            for &(_, a) in &t.steps {
                counts[a] += 1;
            }
        }
        assert_eq!(counts[2], 0);
        // 3e4 draws over three actions; 4σ band around 1e4
        for a in [0, 1, 3] {
            assert!((counts[a] as f64 - 1e4).abs() < 4.0 * (3e4f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt());
        }
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(0, 1), derive_seed(0, 2));
        assert_ne!(derive_seed(0, 1), derive_seed(1, 1));
        assert_eq!(derive_seed(5, 9), derive_seed(5, 9));
    }

    #[test]
    fn zero_expert_trajectories_generate_empty_set() {
        let config = ExperimentConfig {
            n_expert_trajectories: 0,
            n_random_trajectories: 5,
            ..Default::default()
        };
        let scene = Scene::new(&config).unwrap();
        let (data, manifest) = generate(&scene, &config).unwrap();
        assert!(data.experts.is_empty());
        assert_eq!(data.random.len(), 5);
        assert_eq!(manifest.n_expert_per_task, 0);
    }

    #[test]
    fn expert_scores_perfectly() {
        let config = ExperimentConfig {
            tasks: vec![0, 2],
            n_expert_trajectories: 20,
            n_random_trajectories: 10,
            ..Default::default()
        };
        let scene = Scene::new(&config).unwrap();
        let (data, _) = generate(&scene, &config).unwrap();
        let policies = vec![scene.expert(0).unwrap().clone(), scene.expert(2).unwrap().clone()];
        let assign: Vec<usize> = data.experts.iter().map(|t| usize::from(t.task == Some(2))).collect();
        let (evd, ape) = score(&scene, &data.experts, &policies, &assign).unwrap();
        assert_eq!(evd, Some(0.0));
        assert_eq!(ape, 0.0);
        let (nmi, ari) = clustering(&data.experts, &assign).unwrap();
        assert!((nmi.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(ari, Some(1.0));
    }
}
