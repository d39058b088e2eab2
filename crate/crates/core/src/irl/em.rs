//! Mixture of reward models fitted by expectation-maximization.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::{
    run_trainer, BaseTrainer, Budget, Demonstrations, IrlConfig, IterationRecord, Problem,
};
use crate::error::{invalid, shape, Error, Result};
use crate::mdp::{
    argmax, state_occupancy, trajectory_log_policy_likelihood, StochasticPolicy, TabularMdp,
    Trajectory,
};
use crate::reward::{AdamState, FeatureMap, RewardModel};

/// Priors below this count as a collapsed component.
pub const COLLAPSE_PRIOR: f64 = 1e-6;

/// Share of the initial responsibilities drawn from the Dirichlet jitter.
const INIT_JITTER: f64 = 0.05;

/// Default policy-disagreement threshold for [`merge_similar_rewards`].
pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.05;

const MANIFEST_FORMAT: &str = "mirl-mixture/v1";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureModel {
    pub base: BaseTrainer,
    pub models: Vec<RewardModel>,
    pub priors: Vec<f64>,
    /// `[trajectory][component]`, rows sum to 1.
    pub responsibilities: Vec<Vec<f64>>,
}

impl MixtureModel {
    pub fn k(&self) -> usize {
        self.models.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(invalid("a mixture needs at least one component"));
        }
        if self.priors.len() != k {
            return Err(shape(format!("{} priors for {k} components", self.priors.len())));
        }
        crate::mdp::check_distribution(&self.priors, k, "mixture priors")?;
        for (i, row) in self.responsibilities.iter().enumerate() {
            crate::mdp::check_distribution(row, k, &format!("responsibility row {i}"))?;
        }
        let dim = self.models[0].input_dim();
        if self.models.iter().any(|m| m.input_dim() != dim) {
            return Err(shape("mixture components disagree on the feature width"));
        }
        Ok(())
    }

    /// Hard assignment of every trajectory seen in training.
    pub fn assignments(&self) -> Vec<usize> {
        self.responsibilities.iter().map(|row| argmax(row)).collect()
    }

    /// Writes one checkpoint per component plus `manifest.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, config: &IrlConfig, history: &[f64]) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut components = Vec::with_capacity(self.k());
        for (k, model) in self.models.iter().enumerate() {
            let name = format!("component_{k}.json");
            model.save(dir.join(&name))?;
            components.push(name);
        }
        let manifest = MixtureManifest {
            format: MANIFEST_FORMAT.to_string(),
            k: self.k(),
            base: self.base,
            priors: self.priors.clone(),
            components,
            config: config.clone(),
            log_likelihood: history.to_vec(),
            responsibilities: self.responsibilities.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<(Self, MixtureManifest)> {
        let dir = dir.as_ref();
        let manifest = MixtureManifest::from_json(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
        let models = manifest
            .components
            .iter()
            .map(|name| RewardModel::load(dir.join(name)))
            .collect::<Result<Vec<_>>>()?;
        let mixture = Self {
            base: manifest.base,
            models,
            priors: manifest.priors.clone(),
            responsibilities: manifest.responsibilities.clone(),
        };
        mixture.validate()?;
        Ok((mixture, manifest))
    }
}

/// Contents of a mixture checkpoint's `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureManifest {
    pub format: String,
    pub k: usize,
    pub base: BaseTrainer,
    pub priors: Vec<f64>,
    /// Component checkpoint file names, relative to the manifest.
    pub components: Vec<String>,
    pub config: IrlConfig,
    /// Observed-data log-likelihood after each EM round.
    pub log_likelihood: Vec<f64>,
    pub responsibilities: Vec<Vec<f64>>,
}

impl MixtureManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: Self = serde_json::from_str(text)?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(invalid(format!("unsupported manifest format {:?}", manifest.format)));
        }
        if manifest.k == 0 || manifest.components.len() != manifest.k || manifest.priors.len() != manifest.k {
            return Err(shape("manifest component count is inconsistent"));
        }
        for name in &manifest.components {
            let simple = Path::new(name).file_name().is_some_and(|f| f == name.as_str());
            if !simple {
                return Err(invalid(format!("component path {name:?} must be a bare file name")));
            }
        }
        manifest.config.validate()?;
        Ok(manifest)
    }
}

/// `log Σ_k exp(x_k)` ignoring `−∞` terms.
fn log_sum_exp(xs: &[f64]) -> f64 {
    crate::mdp::solve::log_sum_exp(xs)
}

fn log_likelihood_matrix(policies: &[StochasticPolicy], dataset: &[Trajectory]) -> Vec<Vec<f64>> {
    dataset
        .iter()
        .map(|t| {
            policies
                .iter()
                .map(|p| trajectory_log_policy_likelihood(t, p))
                .collect()
        })
        .collect()
}

/// Normalized posteriors and the observed-data log-likelihood
/// `Σ_i log Σ_k π_k P̃(τ_i | θ_k)`.
fn posterior(log_lik: &[Vec<f64>], priors: &[f64]) -> Result<(Vec<Vec<f64>>, f64)> {
    let log_priors: Vec<f64> = priors.iter().map(|p| p.ln()).collect();
    let mut rows = Vec::with_capacity(log_lik.len());
    let mut total = 0.0;
    for (i, row) in log_lik.iter().enumerate() {
        let joint: Vec<f64> = row.iter().zip(&log_priors).map(|(l, p)| l + p).collect();
        let norm = log_sum_exp(&joint);
        if !norm.is_finite() {
            return Err(Error::Numeric(format!(
                "trajectory {i} has zero probability under every component"
            )));
        }
        total += norm;
        rows.push(joint.iter().map(|j| (j - norm).exp()).collect());
    }
    Ok((rows, total))
}

fn component_policies(
    problem: &Problem,
    models: &[RewardModel],
    base: BaseTrainer,
    config: &IrlConfig,
) -> Result<Vec<StochasticPolicy>> {
    models.iter().map(|m| problem.policy(m, base, config)).collect()
}

/// `γ_ik ∝ π_k Π_t π_{θ_k}(a_t | s_t)`; transition factors are shared by all
/// components and cancel.
pub fn responsibilities(
    mixture: &MixtureModel,
    dataset: &[Trajectory],
    mdp: &TabularMdp,
    features: &dyn FeatureMap,
    config: &IrlConfig,
) -> Result<Vec<Vec<f64>>> {
    mixture.validate()?;
    let problem = Problem::new(mdp, features, &[], config.discount)?;
    let policies = component_policies(&problem, &mixture.models, mixture.base, config)?;
    Ok(posterior(&log_likelihood_matrix(&policies, dataset), &mixture.priors)?.0)
}

/// Most responsible component for one trajectory; ties go to the lowest index.
pub fn assign_trajectory(
    mixture: &MixtureModel,
    traj: &Trajectory,
    mdp: &TabularMdp,
    features: &dyn FeatureMap,
    config: &IrlConfig,
) -> Result<usize> {
    let rows = responsibilities(mixture, std::slice::from_ref(traj), mdp, features, config)?;
    Ok(argmax(&rows[0]))
}

/// Result of an EM run.
#[derive(Clone, Debug)]
pub struct EmOutcome {
    pub mixture: MixtureModel,
    /// Observed-data log-likelihood after each round.
    pub log_likelihood: Vec<f64>,
    /// Per-round records; `log_likelihood` there is the per-trajectory mean.
    pub records: Vec<IterationRecord>,
    /// Original indices of components dropped after collapsing twice.
    pub dropped: Vec<usize>,
    /// Original indices of components re-initialized after a first collapse.
    pub reinitialized: Vec<usize>,
}

/// Ground-truth scores `(evd, ape)` for component policies and hard assignments.
pub type MixtureProbe<'a> = dyn FnMut(&[StochasticPolicy], &[usize]) -> Result<(f64, f64)> + 'a;

fn initial_responsibilities(n: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e11a_a11c_e5e5);
    (0..n)
        .map(|_| {
            let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = draws.iter().sum();
            draws
                .iter()
                .map(|d| (1.0 - INIT_JITTER) / k as f64 + INIT_JITTER * d / total)
                .collect()
        })
        .collect()
}

struct Component {
    origin: usize,
    model: RewardModel,
    opt: AdamState,
    collapsed_once: bool,
}

/// Generalized EM over `k` reward models. `init` builds a fresh model from a
/// seed; component `j` starts from seed `config.seed + j`.
#[allow(clippy::too_many_arguments)]
pub fn em_multi_intention_irl(
    mdp: &TabularMdp,
    features: &dyn FeatureMap,
    dataset: &[Trajectory],
    k: usize,
    config: &IrlConfig,
    base: BaseTrainer,
    init: &dyn Fn(u64) -> Result<RewardModel>,
    mut probe: Option<&mut MixtureProbe>,
) -> Result<EmOutcome> {
    config.validate()?;
    if k == 0 {
        return Err(invalid("the mixture needs at least one component"));
    }
    if dataset.is_empty() {
        return Err(invalid("dataset must contain at least one trajectory"));
    }
    let problem = Problem::new(mdp, features, dataset, config.discount)?;
    let mut components = (0..k)
        .map(|j| {
            let model = init(config.seed.wrapping_add(j as u64))?;
            Ok(Component {
                origin: j,
                opt: AdamState::new(model.n_params(), config.learning_rate),
                model,
                collapsed_once: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut next_seed = config.seed.wrapping_add(k as u64);
    let mut resp = initial_responsibilities(dataset.len(), k, config.seed);
    let mut priors = vec![1.0 / k as f64; k];
    let mut history = Vec::with_capacity(config.n_outer_iters);
    let mut records = Vec::with_capacity(config.n_outer_iters);
    let (mut dropped, mut reinitialized) = (Vec::new(), Vec::new());
    let budget = || {
        if config.m_step_to_convergence {
            Budget::Converge(config.m_step_max_iters)
        } else {
            Budget::Fixed(config.m_step_iters)
        }
    };
    let clock = std::time::Instant::now();
    for round in 1..=config.n_outer_iters {
        // M-step
        for (j, comp) in components.iter_mut().enumerate() {
            let weights: Vec<f64> = resp.iter().map(|row| row[j]).collect();
            if weights.iter().sum::<f64>() <= 0.0 {
                continue;
            }
            let demos = Demonstrations::new(&problem, dataset, Some(&weights))?;
            let out = run_trainer(
                &problem,
                &demos,
                comp.model.clone(),
                &mut comp.opt,
                base,
                config,
                budget(),
                config.m_step_to_convergence,
                None,
            )?;
            comp.model = out.model;
        }
        let n = dataset.len() as f64;
        priors = (0..components.len())
            .map(|j| resp.iter().map(|row| row[j]).sum::<f64>() / n)
            .collect();
        // collapse handling
        let mut j = 0;
        while j < components.len() {
            if priors[j] >= COLLAPSE_PRIOR || components.len() == 1 {
                j += 1;
                continue;
            }
            if components[j].collapsed_once {
                dropped.push(components[j].origin);
                components.remove(j);
                priors.remove(j);
                continue;
            }
            let model = init(next_seed)?;
            next_seed = next_seed.wrapping_add(1);
            reinitialized.push(components[j].origin);
            components[j].opt = AdamState::new(model.n_params(), config.learning_rate);
            components[j].model = model;
            components[j].collapsed_once = true;
            priors[j] = 1.0 / components.len() as f64;
            j += 1;
        }
        let total: f64 = priors.iter().sum();
        priors.iter_mut().for_each(|p| *p /= total);
        // E-step
        let models: Vec<RewardModel> = components.iter().map(|c| c.model.clone()).collect();
        let policies = component_policies(&problem, &models, base, config)?;
        let (next_resp, observed) = posterior(&log_likelihood_matrix(&policies, dataset), &priors)?;
        resp = next_resp;
        let (evd, ape) = match probe.as_mut() {
            Some(p) => {
                let assign: Vec<usize> = resp.iter().map(|row| argmax(row)).collect();
                let (evd, ape) = p(&policies, &assign)?;
                (Some(evd), Some(ape))
            }
            None => (None, None),
        };
        records.push(IterationRecord {
            iteration: round,
            log_likelihood: observed / n,
            visitation_l1: None,
            evd,
            ape,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        });
        let improvement = history.last().map(|prev| observed - prev);
        history.push(observed);
        if improvement.is_some_and(|d| d < config.em_tolerance) {
            break;
        }
    }
    let mixture = MixtureModel {
        base,
        models: components.into_iter().map(|c| c.model).collect(),
        priors,
        responsibilities: resp,
    };
    debug_assert!(mixture.validate().is_ok());
    Ok(EmOutcome {
        mixture,
        log_likelihood: history,
        records,
        dropped,
        reinitialized,
    })
}

/// Merges components whose greedy policies differ on at most `threshold` of
/// the mixture's expected state visits. The higher-prior model survives and
/// absorbs the other's prior and responsibilities; repeated to a fixpoint.
pub fn merge_similar_rewards(
    mixture: &MixtureModel,
    mdp: &TabularMdp,
    features: &dyn FeatureMap,
    start_dist: &[f64],
    config: &IrlConfig,
    threshold: f64,
) -> Result<MixtureModel> {
    mixture.validate()?;
    if !(threshold >= 0.0) {
        return Err(invalid(format!("merge threshold {threshold} must be >= 0")));
    }
    let problem = Problem::new(mdp, features, &[], config.discount)?;
    let mut out = mixture.clone();
    let mut policies = component_policies(&problem, &out.models, out.base, config)?;
    let occupancies = policies
        .iter()
        .map(|p| state_occupancy(problem.mdp(), p, start_dist))
        .collect::<Result<Vec<_>>>()?;
    let mut occupancies = occupancies;
    loop {
        let k = out.k();
        if k == 1 {
            break;
        }
        let mut occ = vec![0.0; mdp.n_states()];
        for (prior, o) in out.priors.iter().zip(&occupancies) {
            for (acc, v) in occ.iter_mut().zip(o) {
                *acc += prior * v;
            }
        }
        let mass: f64 = occ.iter().sum();
        let greedy: Vec<Vec<usize>> = policies.iter().map(|p| p.greedy_actions()).collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..k {
            for b in a + 1..k {
                let differ: f64 = occ
                    .iter()
                    .enumerate()
                    .filter(|&(s, _)| greedy[a][s] != greedy[b][s])
                    .map(|(_, w)| w)
                    .sum();
                let rate = if mass > 0.0 { differ / mass } else { 0.0 };
                if best.is_none_or(|(r, _, _)| rate < r) {
                    best = Some((rate, a, b));
                }
            }
        }
        let (rate, a, b) = best.expect("at least one pair");
        if rate > threshold {
            break;
        }
        let (keep, gone) = if out.priors[b] > out.priors[a] { (b, a) } else { (a, b) };
        out.priors[keep] += out.priors[gone];
        for row in &mut out.responsibilities {
            row[keep] += row[gone];
            row.remove(gone);
        }
        out.priors.remove(gone);
        out.models.remove(gone);
        policies.remove(gone);
        occupancies.remove(gone);
    }
    let total: f64 = out.priors.iter().sum();
    out.priors.iter_mut().for_each(|p| *p /= total);
    for row in &mut out.responsibilities {
        let t: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::DISTRIBUTION_TOL;
    use crate::reward::{Activation, OneHotFeatures};

fn rows_normalized(rows: &[Vec<f64>]) -> bool {
    rows.iter()
        .all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= DISTRIBUTION_TOL)
}


    fn toy() -> (TabularMdp, OneHotFeatures) {
        let mdp = TabularMdp::from_dense(2, 2, &[0.9, 0.1, 0.2, 0.8, 0.5, 0.5, 0.3, 0.7], 0.9, 3)
            .unwrap();
        (
            mdp,
            OneHotFeatures {
                n_states: 2,
                n_actions: 2,
            },
        )
    }

    fn traj(steps: Vec<(usize, usize)>) -> Trajectory {
        Trajectory {
            id: 0,
            task: None,
            steps,
            terminal: 0,
        }
    }

    #[test]
    fn posterior_examples() {
        let ll = vec![vec![0.08f64.ln(), 0.02f64.ln()]];
        let (rows, _) = posterior(&ll, &[0.5, 0.5]).unwrap();
        assert!((rows[0][0] - 0.8).abs() < 1e-12);
        assert!((rows[0][1] - 0.2).abs() < 1e-12);
        let (rows, _) = posterior(&ll, &[1.0, 0.0]).unwrap();
        assert_eq!(rows[0], vec![1.0, 0.0]);
        let ll = vec![vec![f64::NEG_INFINITY, f64::NEG_INFINITY]];
        assert!(posterior(&ll, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn identical_models_split_evenly() {
        let (mdp, feats) = toy();
        let m = RewardModel::mlp(6, &[4], Activation::Relu, 3).unwrap();
        let data = vec![traj(vec![(0, 1), (1, 0)]), traj(vec![(1, 1)])];
        let mixture = MixtureModel {
            base: BaseTrainer::Ml,
            models: vec![m.clone(), m],
            priors: vec![0.5, 0.5],
            responsibilities: vec![],
        };
        let rows = responsibilities(&mixture, &data, &mdp, &feats, &IrlConfig::default()).unwrap();
        for row in &rows {
            assert!((row[0] - 0.5).abs() < 1e-15 && (row[1] - 0.5).abs() < 1e-15);
        }
        assert_eq!(
            assign_trajectory(&mixture, &data[0], &mdp, &feats, &IrlConfig::default()).unwrap(),
            0
        );
    }

    #[test]
    fn initial_rows_are_perturbed_uniform() {
        let rows = initial_responsibilities(50, 3, 9);
        assert!(rows_normalized(&rows));
        for row in &rows {
            for x in row {
                assert!(*x >= 0.95 / 3.0 && *x <= 0.95 / 3.0 + 0.05);
            }
        }
        assert_eq!(rows, initial_responsibilities(50, 3, 9));
    }

    #[test]
    fn single_component_matches_base_trainer() {
        let (mdp, feats) = toy();
        let data = vec![traj(vec![(0, 1), (1, 0), (0, 1)]), traj(vec![(1, 1), (0, 1)])];
        let config = IrlConfig {
            n_outer_iters: 1,
            m_step_iters: 6,
            ..IrlConfig::default()
        };
        let init = |seed| RewardModel::mlp(6, &[4], Activation::Tanh, seed);
        for base in [BaseTrainer::Ml, BaseTrainer::MaxEnt] {
            let em = em_multi_intention_irl(&mdp, &feats, &data, 1, &config, base, &init, None).unwrap();
            let single = IrlConfig {
                n_outer_iters: 6,
                ..config.clone()
            };
            let (model, _) =
                super::super::train_single(base, &mdp, &feats, &data, init(config.seed).unwrap(), &single, None, None)
                    .unwrap();
            assert_eq!(em.mixture.models[0].params(), model.params());
            assert_eq!(em.mixture.priors, vec![1.0]);
        }
    }

    #[test]
    fn merge_duplicates_and_keep_disjoint() {
        let (mdp, feats) = toy();
        let config = IrlConfig::default();
        // linear one-hot rewards: action 0 or action 1 everywhere
        let favour = |a: usize| {
            let mut w = vec![0.0; 6];
            w[2 + a] = 5.0;
            RewardModel::Linear(crate::reward::LinearRewardModel::new(w).unwrap())
        };
        let start = [0.5, 0.5];
        let dup = MixtureModel {
            base: BaseTrainer::Ml,
            models: vec![favour(0), favour(0)],
            priors: vec![0.3, 0.7],
            responsibilities: vec![vec![0.4, 0.6]],
        };
        let merged = merge_similar_rewards(&dup, &mdp, &feats, &start, &config, 0.05).unwrap();
        assert_eq!(merged.k(), 1);
        assert_eq!(merged.priors, vec![1.0]);
        assert_eq!(merged.responsibilities, vec![vec![1.0]]);
        let merged = merge_similar_rewards(&dup, &mdp, &feats, &start, &config, 0.0).unwrap();
        assert_eq!(merged.k(), 1);
        let disjoint = MixtureModel {
            models: vec![favour(0), favour(1)],
            ..dup
        };
        let kept = merge_similar_rewards(&disjoint, &mdp, &feats, &start, &config, 0.99).unwrap();
        assert_eq!(kept.k(), 2);
        assert_eq!(kept, disjoint);
    }

    #[test]
    fn checkpoint_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mixture = MixtureModel {
            base: BaseTrainer::MaxEnt,
            models: vec![
                RewardModel::mlp(6, &[3], Activation::Relu, 1).unwrap(),
                RewardModel::linear(6),
            ],
            priors: vec![0.25, 0.75],
            responsibilities: vec![vec![0.1, 0.9], vec![1.0 / 3.0, 2.0 / 3.0]],
        };
        let config = IrlConfig::default();
        mixture.save(dir.path(), &config, &[-3.5, -2.25]).unwrap();
        let (back, manifest) = MixtureModel::load(dir.path()).unwrap();
        assert_eq!(back, mixture);
        assert_eq!(manifest.log_likelihood, vec![-3.5, -2.25]);
        assert_eq!(manifest.config, config);
    }

    #[test]
    fn manifest_rejects_path_escape() {
        let text = r#"{"format":"mirl-mixture/v1","k":1,"base":"ml","priors":[1.0],
            "components":["../x.json"],"config":{},"log_likelihood":[],"responsibilities":[]}"#;
        assert!(MixtureManifest::from_json(text).is_err());
        let ok = text.replace("../x.json", "x.json");
        assert!(MixtureManifest::from_json(&ok).is_ok());
    }
}
