//! Reward learning from demonstrations.
//!
//! [`maxent_irl`] matches `(s, a, s')` visitation frequencies, [`ml_irl`]
//! maximizes the Boltzmann-policy likelihood of the observed actions by
//! differentiating through a fixed number of soft backups, and
//! [`em_multi_intention_irl`] fits a mixture of reward models with either of
//! them as the M-step.

mod em;

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::mdp::{
    self, propagate_policy, SoftBackupTrace, StochasticPolicy, TabularMdp, Trajectory, TripleSet,
    LOG_PROB_FLOOR,
};
use crate::reward::{AdamState, Cache, FeatureMap, RewardModel};

pub use em::{
    assign_trajectory, em_multi_intention_irl, merge_similar_rewards, responsibilities,
    EmOutcome, MixtureManifest, MixtureModel, MixtureProbe, COLLAPSE_PRIOR,
    DEFAULT_MERGE_THRESHOLD,
};

/// Which single-reward trainer drives a run or an M-step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseTrainer {
    MaxEnt,
    Ml,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrlConfig {
    /// Gradient steps for a single-reward run; EM rounds for a mixture.
    pub n_outer_iters: usize,
    /// Soft backups per policy evaluation in the likelihood trainer.
    pub n_inner_sweeps: usize,
    /// Boltzmann temperature.
    pub beta: f64,
    pub discount: f64,
    /// Convergence tolerance for soft value iteration and for the EM
    /// log-likelihood improvement.
    pub tolerance: f64,
    pub learning_rate: f64,
    pub seed: u64,
    /// Gradient steps per component in each M-step.
    pub m_step_iters: usize,
    /// Keep stepping in each M-step until the weighted log-likelihood stops
    /// improving by more than `tolerance` (bounded by `m_step_max_iters`).
    pub m_step_to_convergence: bool,
    pub m_step_max_iters: usize,
    /// EM stops once a round improves the observed-data log-likelihood by
    /// less than this.
    pub em_tolerance: f64,
}

impl Default for IrlConfig {
    fn default() -> Self {
        Self {
            n_outer_iters: 100,
            n_inner_sweeps: 20,
            beta: 1.0,
            discount: 0.9,
            tolerance: 1e-6,
            learning_rate: 1e-2,
            seed: 0,
            m_step_iters: 20,
            m_step_to_convergence: false,
            m_step_max_iters: 500,
            em_tolerance: 1e-6,
        }
    }
}

impl IrlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_outer_iters == 0 || self.n_inner_sweeps == 0 || self.m_step_iters == 0 {
            return Err(invalid("iteration counts must be at least 1"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta {} must be finite and >= 0", self.beta)));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(invalid(format!("discount {} outside (0, 1]", self.discount)));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid(format!("tolerance {} must be positive", self.tolerance)));
        }
        if !(self.em_tolerance >= 0.0) {
            return Err(invalid(format!("EM tolerance {} must be >= 0", self.em_tolerance)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid(format!("learning rate {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}

/// Metrics after a given number of updates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Weighted `Σ_i w_i log P̃(τ_i)` under the current policy (weights sum to 1).
    pub log_likelihood: f64,
    /// `‖D_obs − D_π‖₁` (maximum-entropy trainer only).
    pub visitation_l1: Option<f64>,
    pub evd: Option<f64>,
    pub ape: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub records: Vec<IterationRecord>,
    /// Largest `|∂objective/∂R|` over triples at the returned parameters.
    pub final_output_gradient: f64,
}

/// Ground-truth scores `(evd, ape)` for a candidate policy.
pub type Probe<'a> = dyn FnMut(&StochasticPolicy) -> Result<(f64, f64)> + 'a;

/// Occurrence frequency of each trajectory's path in the dataset:
/// `w_i = #{j : τ_j = τ_i} / n`. Summing over distinct paths gives 1.
pub fn compute_trajectory_weights(dataset: &[Trajectory]) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(invalid("cannot weight an empty dataset"));
    }
    let mut counts: HashMap<(&[(usize, usize)], usize), usize> = HashMap::new();
    for t in dataset {
        *counts.entry((&t.steps, t.terminal)).or_default() += 1;
    }
    let n = dataset.len() as f64;
    Ok(dataset
        .iter()
        .map(|t| counts[&(&t.steps[..], t.terminal)] as f64 / n)
        .collect())
}

/// The MDP, the set of triples the reward is evaluated on and their features.
pub(crate) struct Problem {
    mdp: TabularMdp,
    features: Array2<f64>,
    eval_set: Arc<TripleSet>,
    /// Row of `eval_set` holding each triple of the transition support.
    support_rows: Vec<usize>,
}

impl Problem {
    pub(crate) fn new(
        mdp: &TabularMdp,
        features: &dyn FeatureMap,
        dataset: &[Trajectory],
        discount: f64,
    ) -> Result<Self> {
        let mdp = mdp.with_discount(discount)?;
        for t in dataset {
            t.validate(mdp.n_states(), mdp.n_actions())?;
        }
        let observed = TripleSet::from_triples(
            mdp.n_states(),
            mdp.n_actions(),
            dataset.iter().flat_map(|t| t.transitions()),
        )?;
        let eval_set = Arc::new(mdp.support().union(&observed)?);
        let support_rows = mdp
            .support()
            .iter()
            .map(|(s, a, s2)| eval_set.position(s, a, s2).expect("union contains support"))
            .collect();
        let features = features.features(&eval_set);
        if features.nrows() != eval_set.len() {
            return Err(shape("feature map returned the wrong number of rows"));
        }
        Ok(Self {
            mdp,
            features,
            eval_set,
            support_rows,
        })
    }

    pub(crate) fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    fn check_model(&self, model: &RewardModel) -> Result<()> {
        if model.input_dim() != self.features.ncols() {
            return Err(shape(format!(
                "model expects {} features, the feature map produces {}",
                model.input_dim(),
                self.features.ncols()
            )));
        }
        Ok(())
    }

    fn expected_reward(&self, outputs: &Array1<f64>) -> Vec<f64> {
        let prob = self.mdp.transitions().probabilities();
        let support = self.mdp.support();
        let n_a = self.mdp.n_actions();
        let mut r_bar = vec![0.0; self.mdp.n_states() * n_a];
        for (pair, slot) in r_bar.iter_mut().enumerate() {
            let range = support.row_range(pair / n_a, pair % n_a);
            *slot = range.map(|i| prob[i] * outputs[self.support_rows[i]]).sum();
        }
        r_bar
    }

    fn evaluate(&self, model: &RewardModel, kind: BaseTrainer, config: &IrlConfig) -> Result<Evaluation> {
        self.check_model(model)?;
        let (outputs, cache) = model.forward_cached(self.features.view())?;
        if let Some(i) = outputs.iter().position(|r| !r.is_finite()) {
            let (s, a, s2) = self.eval_set.iter().nth(i).expect("row in range");
            return Err(Error::Numeric(format!("reward at ({s}, {a}, {s2}) is not finite")));
        }
        let r_bar = self.expected_reward(&outputs);
        let (policy, trace) = match kind {
            BaseTrainer::Ml => {
                let trace = mdp::solve::soft_backups_from_expected(
                    &self.mdp,
                    &r_bar,
                    config.beta,
                    config.n_inner_sweeps,
                )?;
                (trace.final_policy(), Some(trace))
            }
            BaseTrainer::MaxEnt => {
                let (_, policy) = mdp::solve::maxent_from_expected(
                    &self.mdp,
                    &r_bar,
                    config.tolerance,
                    mdp::DEFAULT_SWEEP_CAP,
                )?;
                (policy, None)
            }
        };
        Ok(Evaluation { cache, policy, trace })
    }

    /// Policy induced by `model` under the given trainer's planning rule.
    pub(crate) fn policy(&self, model: &RewardModel, kind: BaseTrainer, config: &IrlConfig) -> Result<StochasticPolicy> {
        Ok(self.evaluate(model, kind, config)?.policy)
    }
}

struct Evaluation {
    cache: Cache,
    policy: StochasticPolicy,
    trace: Option<SoftBackupTrace>,
}

/// Weighted demonstration statistics.
pub(crate) struct Demonstrations {
    /// `Σ_i w_i count_i(s, a)` with weights normalized to sum to 1.
    pair_counts: Vec<f64>,
    /// Weighted distribution of first states.
    start: Vec<f64>,
    /// Weighted visitation on the problem's evaluation set.
    d_obs: Vec<f64>,
}

impl Demonstrations {
    pub(crate) fn new(problem: &Problem, dataset: &[Trajectory], weights: Option<&[f64]>) -> Result<Self> {
        if dataset.is_empty() {
            return Err(invalid("dataset must contain at least one trajectory"));
        }
        let (n_s, n_a) = (problem.mdp.n_states(), problem.mdp.n_actions());
        let visits = mdp::empirical_visitation(dataset, n_s, n_a, weights)?;
        let d_obs = visits.project_onto(&problem.eval_set)?;
        let total: f64 = weights.map_or(dataset.len() as f64, |w| w.iter().sum());
        let mut pair_counts = vec![0.0; n_s * n_a];
        let mut start = vec![0.0; n_s];
        for (i, t) in dataset.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[i]) / total;
            if w == 0.0 {
                continue;
            }
            if let Some(&(s0, _)) = t.steps.first() {
                start[s0] += w;
            }
            for &(s, a) in &t.steps {
                pair_counts[s * n_a + a] += w;
            }
        }
        Ok(Self {
            pair_counts,
            start,
            d_obs,
        })
    }

    fn log_likelihood(&self, policy: &StochasticPolicy) -> f64 {
        self.pair_counts
            .iter()
            .zip(policy.probs())
            .filter(|(c, _)| **c > 0.0)
            .map(|(c, p)| c * p.max(LOG_PROB_FLOOR).ln())
            .sum()
    }
}

/// Output-space ascent direction at the evaluated parameters, on the
/// evaluation set. Also returns `‖D_obs − D_π‖₁` for the MaxEnt trainer.
fn output_gradient(
    problem: &Problem,
    demos: &Demonstrations,
    eval: &Evaluation,
    kind: BaseTrainer,
    config: &IrlConfig,
) -> Result<(Vec<f64>, Option<f64>)> {
    let mut grad = vec![0.0; problem.eval_set.len()];
    match kind {
        BaseTrainer::MaxEnt => {
            let d_pi = propagate_policy(&problem.mdp, &eval.policy, &demos.start)?;
            grad.copy_from_slice(&demos.d_obs);
            for (&row, v) in problem.support_rows.iter().zip(d_pi.values()) {
                grad[row] -= v;
            }
            let l1 = grad.iter().map(|g| g.abs()).sum();
            Ok((grad, Some(l1)))
        }
        BaseTrainer::Ml => {
            let n_a = problem.mdp.n_actions();
            let pi = eval.policy.probs();
            let mut grad_q = vec![0.0; pi.len()];
            for s in 0..problem.mdp.n_states() {
                let row = s * n_a..(s + 1) * n_a;
                let visits: f64 = demos.pair_counts[row.clone()].iter().sum();
                for i in row {
                    grad_q[i] = config.beta * (demos.pair_counts[i] - visits * pi[i]);
                }
            }
            let trace = eval.trace.as_ref().expect("likelihood trainer keeps its trace");
            let grad_r_bar = trace.backprop(&problem.mdp, &grad_q);
            let spread = problem.mdp.spread_over_support(&grad_r_bar);
            for (&row, g) in problem.support_rows.iter().zip(spread) {
                grad[row] += g;
            }
            Ok((grad, None))
        }
    }
}

pub(crate) struct StepOutcome {
    pub model: RewardModel,
    pub records: Vec<IterationRecord>,
    pub final_output_gradient: f64,
}

pub(crate) enum Budget {
    Fixed(usize),
    /// Stop once the log-likelihood gain over one step falls below the
    /// tolerance, after at most the given number of steps.
    Converge(usize),
}

/// Runs gradient ascent on `model`; with `keep_best` the returned parameters
/// are the iterate with the highest weighted log-likelihood, the starting
/// point included.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_trainer(
    problem: &Problem,
    demos: &Demonstrations,
    mut model: RewardModel,
    opt: &mut AdamState,
    kind: BaseTrainer,
    config: &IrlConfig,
    budget: Budget,
    keep_best: bool,
    mut probe: Option<&mut Probe>,
) -> Result<StepOutcome> {
    problem.check_model(&model)?;
    let max_steps = match budget {
        Budget::Fixed(n) | Budget::Converge(n) => n,
    };
    let clock = Instant::now();
    let mut records = Vec::with_capacity(max_steps);
    let mut best: Option<(f64, RewardModel, f64)> = None;
    let mut previous_ll = f64::NEG_INFINITY;
    for step in 0..=max_steps {
        let eval = problem.evaluate(&model, kind, config)?;
        let ll = demos.log_likelihood(&eval.policy);
        let (grad, l1) = output_gradient(problem, demos, &eval, kind, config)?;
        let grad_max = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if step > 0 {
            let (evd, ape) = match probe.as_mut() {
                Some(p) => {
                    let (evd, ape) = p(&eval.policy)?;
                    (Some(evd), Some(ape))
                }
                None => (None, None),
            };
            records.push(IterationRecord {
                iteration: step,
                log_likelihood: ll,
                visitation_l1: l1,
                evd,
                ape,
                wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            });
        }
        if !keep_best || best.as_ref().is_none_or(|(b, _, _)| ll > *b) {
            best = Some((ll, model.clone(), grad_max));
        }
        let converged = matches!(budget, Budget::Converge(_))
            && step > 0
            && (ll - previous_ll).abs() < config.tolerance;
        if step == max_steps || converged {
            break;
        }
        previous_ll = ll;
        let param_grads = model.backward_cached(
            problem.features.view(),
            &eval.cache,
            Array1::from(grad).view(),
        )?;
        let descent: Vec<f64> = param_grads.iter().map(|g| -g).collect();
        model.apply_update(&descent, opt)?;
    }
    let (_, model, final_output_gradient) = best.expect("at least one evaluation");
    Ok(StepOutcome {
        model,
        records,
        final_output_gradient,
    })
}

/// Shared entry point of the single-reward trainers. `probe`, when given,
/// scores every iterate against ground truth.
#[allow(clippy::too_many_arguments)]
pub fn train_single(
    kind: BaseTrainer,
    mdp: &TabularMdp,
    features: &dyn FeatureMap,
    dataset: &[Trajectory],
    model: RewardModel,
    config: &IrlConfig,
    weights: Option<&[f64]>,
    probe: Option<&mut Probe>,
) -> Result<(RewardModel, TrainReport)> {
    config.validate()?;
    let problem = Problem::new(mdp, features, dataset, config.discount)?;
    let demos = Demonstrations::new(&problem, dataset, weights)?;
    let mut opt = AdamState::new(model.n_params(), config.learning_rate);
    let out = run_trainer(
        &problem,
        &demos,
        model,
        &mut opt,
        kind,
        config,
        Budget::Fixed(config.n_outer_iters),
        false,
        probe,
    )?;
    Ok((
        out.model,
        TrainReport {
            records: out.records,
            final_output_gradient: out.final_output_gradient,
        },
    ))
}

/// Deep (or linear) maximum-entropy IRL: ascend `(D_obs − D_π) · ∂R/∂θ`.
pub fn maxent_irl(
    mdp: &TabularMdp,
    features: &dyn FeatureMap,
    dataset: &[Trajectory],
    model: RewardModel,
    config: &IrlConfig,
    weights: Option<&[f64]>,
) -> Result<(RewardModel, TrainReport)> {
    train_single(BaseTrainer::MaxEnt, mdp, features, dataset, model, config, weights, None)
}

/// Maximum-likelihood IRL through `n_inner_sweeps` soft backups.
pub fn ml_irl(
    mdp: &TabularMdp,
    features: &dyn FeatureMap,
    dataset: &[Trajectory],
    model: RewardModel,
    config: &IrlConfig,
    weights: Option<&[f64]>,
) -> Result<(RewardModel, TrainReport)> {
    train_single(BaseTrainer::Ml, mdp, features, dataset, model, config, weights, None)
}

/// Policy that `model` induces under the trainer's planning rule.
pub fn model_policy(
    kind: BaseTrainer,
    mdp: &TabularMdp,
    features: &dyn FeatureMap,
    model: &RewardModel,
    config: &IrlConfig,
) -> Result<StochasticPolicy> {
    Problem::new(mdp, features, &[], config.discount)?.policy(model, kind, config)
}
