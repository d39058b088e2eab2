//! Dynamic programming: hard and soft value iteration, exact policy evaluation.

use super::{argmax, QTable, RewardTensor, StochasticPolicy, TabularMdp, ValueTable};
use crate::error::{invalid, Error, Result};

/// Sweep cap for the converging solvers.
pub const DEFAULT_SWEEP_CAP: usize = 10_000;

#[derive(Clone, Debug)]
pub struct ValueIterationOutput {
    pub values: ValueTable,
    pub q: QTable,
    /// Greedy one-hot policy, ties broken by the lowest action index.
    pub policy: StochasticPolicy,
    pub sweeps: usize,
}

/// Bellman optimality iteration with synchronous backups, run until the
/// sup-norm change between sweeps drops below `tol`.
pub fn value_iteration(
    mdp: &TabularMdp,
    reward: &RewardTensor,
    tol: f64,
) -> Result<ValueIterationOutput> {
    value_iteration_capped(mdp, reward, tol, DEFAULT_SWEEP_CAP)
}

pub fn value_iteration_capped(
    mdp: &TabularMdp,
    reward: &RewardTensor,
    tol: f64,
    max_sweeps: usize,
) -> Result<ValueIterationOutput> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance {tol} must be positive")));
    }
    if !reward.is_finite() {
        return Err(invalid("reward tensor has non-finite entries"));
    }
    let r_bar = mdp.expected_reward(reward)?;
    let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
    let mut v = vec![0.0; n_s];
    let mut q = vec![0.0; n_s * n_a];
    let mut delta = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        backup_q(mdp, &r_bar, &v, &mut q);
        delta = 0.0;
        for s in 0..n_s {
            let best = q[s * n_a..(s + 1) * n_a]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < tol {
            backup_q(mdp, &r_bar, &v, &mut q);
            let q = QTable {
                n_states: n_s,
                n_actions: n_a,
                values: q,
            };
            let policy = greedy_from_q(&q);
            return Ok(ValueIterationOutput {
                values: ValueTable { values: v },
                q,
                policy,
                sweeps: sweep,
            });
        }
    }
    Err(Error::Convergence {
        sweeps: max_sweeps,
        delta,
    })
}

/// `Q(s,a) = r̄(s,a) + γ Σ_{s'} P(s'|s,a) V(s')`.
fn backup_q(mdp: &TabularMdp, r_bar: &[f64], v: &[f64], q: &mut [f64]) {
    let n_a = mdp.n_actions();
    let gamma = mdp.discount();
    for s in 0..mdp.n_states() {
        for a in 0..n_a {
            let (next, prob) = mdp.row(s, a);
            let future: f64 = next.iter().zip(prob).map(|(&s2, p)| p * v[s2]).sum();
            q[s * n_a + a] = r_bar[s * n_a + a] + gamma * future;
        }
    }
}

pub fn greedy_from_q(q: &QTable) -> StochasticPolicy {
    let actions: Vec<usize> = (0..q.n_states).map(|s| argmax(q.row(s))).collect();
    StochasticPolicy::deterministic(q.n_actions, &actions).expect("argmax is in range")
}

/// Row-wise `softmax(β·q)` with max subtraction.
pub(crate) fn boltzmann_rows(q: &[f64], n_actions: usize, beta: f64, out: &mut [f64]) {
    for (row, dst) in q.chunks(n_actions).zip(out.chunks_mut(n_actions)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (d, x) in dst.iter_mut().zip(row) {
            *d = (beta * (x - max)).exp();
            total += *d;
        }
        for d in dst.iter_mut() {
            *d /= total;
        }
    }
}

/// Record of every iterate of [`soft_value_iteration`], kept for
/// reverse-mode differentiation through the backups.
#[derive(Clone, Debug)]
pub struct SoftBackupTrace {
    n_states: usize,
    n_actions: usize,
    beta: f64,
    /// `Q_0 ..= Q_n`.
    qs: Vec<Vec<f64>>,
    /// `π_0 ..= π_n`, `π_k = softmax(β Q_k)`.
    policies: Vec<Vec<f64>>,
}

impl SoftBackupTrace {
    pub fn final_q(&self) -> QTable {
        QTable {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self.qs.last().expect("at least Q_0").clone(),
        }
    }

    pub fn final_policy(&self) -> StochasticPolicy {
        StochasticPolicy {
            n_states: self.n_states,
            n_actions: self.n_actions,
            probs: self.policies.last().expect("at least π_0").clone(),
        }
    }

    pub fn sweeps(&self) -> usize {
        self.qs.len() - 1
    }

    /// Given `∂L/∂Q_n`, returns `∂L/∂r̄(s,a)` accumulated over all sweeps.
    pub fn backprop(&self, mdp: &TabularMdp, grad_final_q: &[f64]) -> Vec<f64> {
        let (n_s, n_a) = (self.n_states, self.n_actions);
        let gamma = mdp.discount();
        let mut grad_r = vec![0.0; n_s * n_a];
        let mut grad_q = grad_final_q.to_vec();
        let mut grad_v = vec![0.0; n_s];
        for k in (0..self.sweeps()).rev() {
            // Q_{k+1} = r̄ + γ P V_k
            grad_v.iter_mut().for_each(|g| *g = 0.0);
            for s in 0..n_s {
                for a in 0..n_a {
                    let g = grad_q[s * n_a + a];
                    grad_r[s * n_a + a] += g;
                    if g != 0.0 {
                        let (next, prob) = mdp.row(s, a);
                        for (&s2, p) in next.iter().zip(prob) {
                            grad_v[s2] += gamma * g * p;
                        }
                    }
                }
            }
            if k == 0 {
                break;
            }
            // V_k(s) = Σ_a π_k(a|s) Q_k(s,a) with π_k = softmax(β Q_k)
            let (q, pi) = (&self.qs[k], &self.policies[k]);
            for s in 0..n_s {
                let row = s * n_a..(s + 1) * n_a;
                let v: f64 = row.clone().map(|i| pi[i] * q[i]).sum();
                for i in row {
                    grad_q[i] = grad_v[s] * pi[i] * (1.0 + self.beta * (q[i] - v));
                }
            }
        }
        grad_r
    }
}

/// Boltzmann value iteration: exactly `n_sweeps` synchronous backups
/// `Q ← r̄ + γ P Σ_a π(a|·) Q(·, a)` starting from `Q ≡ 0` and the uniform
/// policy, with `π = softmax(β Q)` refreshed after every sweep.
pub fn soft_value_iteration(
    mdp: &TabularMdp,
    reward: &RewardTensor,
    beta: f64,
    n_sweeps: usize,
) -> Result<(QTable, StochasticPolicy)> {
    let trace = soft_value_iteration_traced(mdp, reward, beta, n_sweeps)?;
    Ok((trace.final_q(), trace.final_policy()))
}

pub fn soft_value_iteration_traced(
    mdp: &TabularMdp,
    reward: &RewardTensor,
    beta: f64,
    n_sweeps: usize,
) -> Result<SoftBackupTrace> {
    if !reward.is_finite() {
        return Err(invalid("reward tensor has non-finite entries"));
    }
    let r_bar = mdp.expected_reward(reward)?;
    soft_backups_from_expected(mdp, &r_bar, beta, n_sweeps)
}

pub(crate) fn soft_backups_from_expected(
    mdp: &TabularMdp,
    r_bar: &[f64],
    beta: f64,
    n_sweeps: usize,
) -> Result<SoftBackupTrace> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(invalid(format!("beta {beta} must be a finite non-negative number")));
    }
    if n_sweeps == 0 {
        return Err(invalid("at least one soft backup sweep is required"));
    }
    let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
    let mut qs = Vec::with_capacity(n_sweeps + 1);
    let mut policies = Vec::with_capacity(n_sweeps + 1);
    qs.push(vec![0.0; n_s * n_a]);
    policies.push(vec![1.0 / n_a as f64; n_s * n_a]);
    let mut v = vec![0.0; n_s];
    for k in 0..n_sweeps {
        let (q, pi) = (&qs[k], &policies[k]);
        for s in 0..n_s {
            v[s] = (s * n_a..(s + 1) * n_a).map(|i| pi[i] * q[i]).sum();
        }
        let mut next_q = vec![0.0; n_s * n_a];
        backup_q(mdp, r_bar, &v, &mut next_q);
        let mut next_pi = vec![0.0; n_s * n_a];
        boltzmann_rows(&next_q, n_a, beta, &mut next_pi);
        qs.push(next_q);
        policies.push(next_pi);
    }
    Ok(SoftBackupTrace {
        n_states: n_s,
        n_actions: n_a,
        beta,
        qs,
        policies,
    })
}

/// Maximum-entropy soft value iteration: `V(s) = log Σ_a exp Q(s,a)`,
/// iterated to convergence; the policy is `exp(Q(s,a) − V(s))`.
pub fn maxent_soft_value_iteration(
    mdp: &TabularMdp,
    reward: &RewardTensor,
    tol: f64,
) -> Result<(QTable, StochasticPolicy)> {
    if !reward.is_finite() {
        return Err(invalid("reward tensor has non-finite entries"));
    }
    let r_bar = mdp.expected_reward(reward)?;
    maxent_from_expected(mdp, &r_bar, tol, DEFAULT_SWEEP_CAP)
}

pub(crate) fn maxent_from_expected(
    mdp: &TabularMdp,
    r_bar: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<(QTable, StochasticPolicy)> {
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance {tol} must be positive")));
    }
    let (n_s, n_a) = (mdp.n_states(), mdp.n_actions());
    let mut v = vec![0.0; n_s];
    let mut q = vec![0.0; n_s * n_a];
    let mut delta = f64::INFINITY;
    for _ in 0..max_sweeps {
        backup_q(mdp, r_bar, &v, &mut q);
        delta = 0.0;
        for s in 0..n_s {
            let soft = log_sum_exp(&q[s * n_a..(s + 1) * n_a]);
            delta = delta.max((soft - v[s]).abs());
            v[s] = soft;
        }
        if delta < tol {
            backup_q(mdp, r_bar, &v, &mut q);
            let mut probs = vec![0.0; n_s * n_a];
            boltzmann_rows(&q, n_a, 1.0, &mut probs);
            let q = QTable {
                n_states: n_s,
                n_actions: n_a,
                values: q,
            };
            let policy = StochasticPolicy {
                n_states: n_s,
                n_actions: n_a,
                probs,
            };
            return Ok((q, policy));
        }
    }
    Err(Error::Convergence {
        sweeps: max_sweeps,
        delta,
    })
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Exact discounted return `Σ_{t<horizon} γ^t E[R_t]` of `policy` from
/// `start_dist`, by forward propagation of the state distribution.
pub fn policy_value(
    mdp: &TabularMdp,
    reward: &RewardTensor,
    policy: &StochasticPolicy,
    start_dist: &[f64],
) -> Result<f64> {
    check_policy(mdp, policy)?;
    mdp.check_distribution(start_dist, "start distribution")?;
    let r_bar = mdp.expected_reward(reward)?;
    let n_a = mdp.n_actions();
    let mut d = start_dist.to_vec();
    let mut total = 0.0;
    let mut weight = 1.0;
    for _ in 0..mdp.horizon() {
        let mut step = 0.0;
        let mut next = vec![0.0; mdp.n_states()];
        for (s, &mass) in d.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for a in 0..n_a {
                let w = mass * policy.prob(s, a);
                if w == 0.0 {
                    continue;
                }
                step += w * r_bar[s * n_a + a];
                let (succ, prob) = mdp.row(s, a);
                for (&s2, p) in succ.iter().zip(prob) {
                    next[s2] += w * p;
                }
            }
        }
        total += weight * step;
        weight *= mdp.discount();
        d = next;
    }
    Ok(total)
}

pub(crate) fn check_policy(mdp: &TabularMdp, policy: &StochasticPolicy) -> Result<()> {
    if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
        return Err(crate::error::shape(format!(
            "policy over {}x{} does not match MDP {}x{}",
            policy.n_states(),
            policy.n_actions(),
            mdp.n_states(),
            mdp.n_actions()
        )));
    }
    Ok(())
}
