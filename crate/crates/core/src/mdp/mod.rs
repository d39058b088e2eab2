//! Enumerated-state MDPs: transition models, policies, trajectories and the
//! sparse `(s, a, s')` tensors that rewards and visitation frequencies live on.
//!
//! Every `(s, a, s')` quantity is stored over a [`TripleSet`], a sorted
//! compressed-row index of the triples that can carry mass. Triples outside
//! the set read as zero, so a tensor is logically a dense
//! `n_states × n_actions × n_states` array.

mod sample;
pub(crate) mod solve;
mod visitation;

use std::ops::Range;
use std::sync::Arc;

use crate::error::{invalid, shape, Result};

pub use sample::{draw_index, estimate_transitions, sample_trajectories};
pub use solve::{
    greedy_from_q, maxent_soft_value_iteration, policy_value, soft_value_iteration,
    soft_value_iteration_traced, value_iteration, value_iteration_capped, SoftBackupTrace,
    ValueIterationOutput, DEFAULT_SWEEP_CAP,
};
pub use visitation::{
    empirical_visitation, propagate_policy, state_occupancy, trajectory_log_policy_likelihood,
    LOG_PROB_FLOOR,
};

/// Row sums of distributions must match 1 within this tolerance.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

/// Sorted, deduplicated set of `(s, a, s')` triples in compressed-row layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleSet {
    n_states: usize,
    n_actions: usize,
    row_ptr: Vec<usize>,
    next: Vec<usize>,
}

impl TripleSet {
    /// Every triple of an `n_states × n_actions × n_states` space.
    pub fn full(n_states: usize, n_actions: usize) -> Self {
        let rows = n_states * n_actions;
        let row_ptr = (0..=rows).map(|r| r * n_states).collect();
        let next = (0..rows).flat_map(|_| 0..n_states).collect();
        Self {
            n_states,
            n_actions,
            row_ptr,
            next,
        }
    }

    pub fn from_triples<I>(n_states: usize, n_actions: usize, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, usize)>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_states * n_actions];
        for (s, a, s2) in triples {
            if s >= n_states || s2 >= n_states || a >= n_actions {
                return Err(invalid(format!(
                    "triple ({s}, {a}, {s2}) out of range for {n_states} states and {n_actions} actions"
                )));
            }
            rows[s * n_actions + a].push(s2);
        }
        Ok(Self::from_rows(n_states, n_actions, rows))
    }

    fn from_rows(n_states: usize, n_actions: usize, mut rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut next = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            next.extend_from_slice(row);
            row_ptr.push(next.len());
        }
        Self {
            n_states,
            n_actions,
            row_ptr,
            next,
        }
    }

    /// Union of two sets over the same state/action space.
    pub fn union(&self, other: &TripleSet) -> Result<Self> {
        self.check_same_space(other)?;
        let rows = (0..self.n_rows())
            .map(|r| {
                let mut row = self.next[self.row_ptr[r]..self.row_ptr[r + 1]].to_vec();
                row.extend_from_slice(&other.next[other.row_ptr[r]..other.row_ptr[r + 1]]);
                row
            })
            .collect();
        Ok(Self::from_rows(self.n_states, self.n_actions, rows))
    }

    fn check_same_space(&self, other: &TripleSet) -> Result<()> {
        if self.n_states != other.n_states || self.n_actions != other.n_actions {
            return Err(shape(format!(
                "triple sets over different spaces: {}x{} vs {}x{}",
                self.n_states, self.n_actions, other.n_states, other.n_actions
            )));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn n_rows(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn len(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next.is_empty()
    }

    /// Positions of the `(s, a, ·)` row inside the flat value arrays.
    pub fn row_range(&self, s: usize, a: usize) -> Range<usize> {
        let r = s * self.n_actions + a;
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    /// Next states present in the `(s, a, ·)` row, ascending.
    pub fn row(&self, s: usize, a: usize) -> &[usize] {
        &self.next[self.row_range(s, a)]
    }

    pub fn position(&self, s: usize, a: usize, s2: usize) -> Option<usize> {
        if s >= self.n_states || a >= self.n_actions {
            return None;
        }
        let range = self.row_range(s, a);
        self.next[range.clone()]
            .binary_search(&s2)
            .ok()
            .map(|i| range.start + i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.n_rows()).flat_map(move |r| {
            let (s, a) = (r / self.n_actions, r % self.n_actions);
            self.next[self.row_ptr[r]..self.row_ptr[r + 1]]
                .iter()
                .map(move |&s2| (s, a, s2))
        })
    }

    /// Gathers `values` (laid out over `self`) onto the triples of `target`;
    /// triples missing from `self` read as zero.
    pub fn project_onto(&self, values: &[f64], target: &TripleSet) -> Result<Vec<f64>> {
        self.check_same_space(target)?;
        let mut out = vec![0.0; target.len()];
        for r in 0..self.n_rows() {
            let (src_lo, src_hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let (dst_lo, dst_hi) = (target.row_ptr[r], target.row_ptr[r + 1]);
            let (mut i, mut j) = (src_lo, dst_lo);
            while i < src_hi && j < dst_hi {
                match self.next[i].cmp(&target.next[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        out[j] = values[i];
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Real values attached to the triples of a [`TripleSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct TripleTensor {
    set: Arc<TripleSet>,
    values: Vec<f64>,
}

/// `R(s, a, s')`.
pub type RewardTensor = TripleTensor;
/// `D(s, a, s')` visitation frequencies.
pub type VisitationTensor = TripleTensor;

impl TripleTensor {
    pub fn new(set: Arc<TripleSet>, values: Vec<f64>) -> Result<Self> {
        if values.len() != set.len() {
            return Err(shape(format!(
                "{} values for a triple set of {}",
                values.len(),
                set.len()
            )));
        }
        Ok(Self { set, values })
    }

    pub fn zeros(set: Arc<TripleSet>) -> Self {
        let values = vec![0.0; set.len()];
        Self { set, values }
    }

    /// Builds a tensor from a dense row-major `[s][a][s']` array.
    pub fn from_dense(n_states: usize, n_actions: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n_states * n_actions * n_states {
            return Err(shape(format!(
                "dense tensor of {} entries, expected {}",
                dense.len(),
                n_states * n_actions * n_states
            )));
        }
        Ok(Self {
            set: Arc::new(TripleSet::full(n_states, n_actions)),
            values: dense.to_vec(),
        })
    }

    pub fn from_fn(set: Arc<TripleSet>, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let values = set.iter().map(|(s, a, s2)| f(s, a, s2)).collect();
        Self { set, values }
    }

    pub fn set(&self) -> &Arc<TripleSet> {
        &self.set
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn n_states(&self) -> usize {
        self.set.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.set.n_actions
    }

    pub fn get(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.set
            .position(s, a, s2)
            .map_or(0.0, |i| self.values[i])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Values re-laid onto another triple set over the same space.
    pub fn project_onto(&self, target: &TripleSet) -> Result<Vec<f64>> {
        if *self.set == *target {
            return Ok(self.values.clone());
        }
        self.set.project_onto(&self.values, target)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n_s = self.n_states();
        let n_a = self.n_actions();
        let mut dense = vec![0.0; n_s * n_a * n_s];
        for ((s, a, s2), v) in self.set.iter().zip(&self.values) {
            dense[(s * n_a + a) * n_s + s2] = *v;
        }
        dense
    }

    /// `Σ |self − other|` over the union of both supports.
    pub fn l1_distance(&self, other: &TripleTensor) -> Result<f64> {
        let union = self.set.union(&other.set)?;
        let lhs = self.project_onto(&union)?;
        let rhs = other.project_onto(&union)?;
        Ok(lhs.iter().zip(&rhs).map(|(x, y)| (x - y).abs()).sum())
    }
}

/// Sparse transition kernel `P(s' | s, a)` laid out over a [`TripleSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionModel {
    support: Arc<TripleSet>,
    prob: Vec<f64>,
}

impl TransitionModel {
    /// Validates that every `(s, a)` row is a probability distribution.
    /// Zero-probability entries are dropped from the support.
    pub fn new(support: TripleSet, prob: Vec<f64>) -> Result<Self> {
        if prob.len() != support.len() {
            return Err(shape(format!(
                "{} probabilities for a support of {}",
                prob.len(),
                support.len()
            )));
        }
        for s in 0..support.n_states {
            for a in 0..support.n_actions {
                let range = support.row_range(s, a);
                let row = &prob[range];
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(invalid(format!(
                        "transition row ({s}, {a}) has negative or non-finite entries"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > DISTRIBUTION_TOL {
                    return Err(invalid(format!(
                        "transition row ({s}, {a}) sums to {sum}, expected 1"
                    )));
                }
            }
        }
        if prob.iter().all(|p| *p > 0.0) {
            return Ok(Self {
                support: Arc::new(support),
                prob,
            });
        }
        let kept: Vec<(usize, usize, usize)> = support
            .iter()
            .zip(&prob)
            .filter(|(_, p)| **p > 0.0)
            .map(|(t, _)| t)
            .collect();
        let prob = prob.into_iter().filter(|p| *p > 0.0).collect();
        let support = TripleSet::from_triples(support.n_states, support.n_actions, kept)?;
        Ok(Self {
            support: Arc::new(support),
            prob,
        })
    }

    /// From a dense row-major `[s][a][s']` probability array.
    pub fn from_dense(n_states: usize, n_actions: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n_states * n_actions * n_states {
            return Err(shape(format!(
                "dense transition array of {} entries, expected {}",
                dense.len(),
                n_states * n_actions * n_states
            )));
        }
        Self::new(TripleSet::full(n_states, n_actions), dense.to_vec())
    }

    pub fn support(&self) -> &Arc<TripleSet> {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.prob
    }

    pub fn n_states(&self) -> usize {
        self.support.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.support.n_actions
    }

    /// `(next states, probabilities)` of the `(s, a)` row.
    pub fn row(&self, s: usize, a: usize) -> (&[usize], &[f64]) {
        let range = self.support.row_range(s, a);
        (&self.support.next[range.clone()], &self.prob[range])
    }

    pub fn prob(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.support.position(s, a, s2).map_or(0.0, |i| self.prob[i])
    }

    pub fn to_dense(&self) -> Vec<f64> {
        TripleTensor {
            set: self.support.clone(),
            values: self.prob.clone(),
        }
        .to_dense()
    }
}

/// The `(S, A, P, γ)` part of an MDP plus the episode horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    transitions: TransitionModel,
    discount: f64,
    horizon: usize,
}

impl TabularMdp {
    pub fn new(transitions: TransitionModel, discount: f64, horizon: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&discount) {
            return Err(invalid(format!("discount {discount} outside [0, 1]")));
        }
        if horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        Ok(Self {
            transitions,
            discount,
            horizon,
        })
    }

    pub fn from_dense(
        n_states: usize,
        n_actions: usize,
        dense: &[f64],
        discount: f64,
        horizon: usize,
    ) -> Result<Self> {
        Self::new(
            TransitionModel::from_dense(n_states, n_actions, dense)?,
            discount,
            horizon,
        )
    }

    pub fn n_states(&self) -> usize {
        self.transitions.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.transitions.n_actions()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn transitions(&self) -> &TransitionModel {
        &self.transitions
    }

    pub fn support(&self) -> &Arc<TripleSet> {
        self.transitions.support()
    }

    pub fn row(&self, s: usize, a: usize) -> (&[usize], &[f64]) {
        self.transitions.row(s, a)
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Self::new(self.transitions.clone(), discount, self.horizon)
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(self.transitions.clone(), self.discount, horizon)
    }

    /// `r̄(s, a) = Σ_{s'} P(s'|s,a) R(s,a,s')`, row-major `[s][a]`.
    pub fn expected_reward(&self, reward: &RewardTensor) -> Result<Vec<f64>> {
        self.check_tensor(reward)?;
        let support = self.support();
        let aligned = if Arc::ptr_eq(reward.set(), support) || **reward.set() == **support {
            None
        } else {
            Some(reward.set().project_onto(reward.values(), support)?)
        };
        let values = aligned.as_deref().unwrap_or(reward.values());
        let prob = self.transitions.probabilities();
        let n_a = self.n_actions();
        let mut out = vec![0.0; self.n_states() * n_a];
        for s in 0..self.n_states() {
            for a in 0..n_a {
                let range = support.row_range(s, a);
                out[s * n_a + a] = range.map(|i| prob[i] * values[i]).sum();
            }
        }
        Ok(out)
    }

    /// Scatters a per-`(s, a)` gradient back onto the transition support:
    /// `g(s, a, s') = g(s, a) · P(s'|s,a)`.
    pub fn spread_over_support(&self, per_pair: &[f64]) -> Vec<f64> {
        let support = self.support();
        let prob = self.transitions.probabilities();
        let n_a = self.n_actions();
        let mut out = vec![0.0; support.len()];
        for s in 0..self.n_states() {
            for a in 0..n_a {
                let g = per_pair[s * n_a + a];
                for i in support.row_range(s, a) {
                    out[i] = g * prob[i];
                }
            }
        }
        out
    }

    pub(crate) fn check_tensor(&self, tensor: &TripleTensor) -> Result<()> {
        if tensor.n_states() != self.n_states() || tensor.n_actions() != self.n_actions() {
            return Err(shape(format!(
                "tensor over {}x{} does not match MDP {}x{}",
                tensor.n_states(),
                tensor.n_actions(),
                self.n_states(),
                self.n_actions()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_distribution(&self, dist: &[f64], what: &str) -> Result<()> {
        check_distribution(dist, self.n_states(), what)
    }
}

pub(crate) fn check_distribution(dist: &[f64], n: usize, what: &str) -> Result<()> {
    if dist.len() != n {
        return Err(shape(format!("{what} has {} entries, expected {n}", dist.len())));
    }
    if dist.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(invalid(format!("{what} has negative or non-finite entries")));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(invalid(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Uniform distribution over `n` outcomes.
pub fn uniform_distribution(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// `π(a | s)` as a row-major `[s][a]` table.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticPolicy {
    pub(crate) n_states: usize,
    pub(crate) n_actions: usize,
    pub(crate) probs: Vec<f64>,
}

impl StochasticPolicy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions {
            return Err(shape(format!(
                "policy table of {} entries, expected {}",
                probs.len(),
                n_states * n_actions
            )));
        }
        for s in 0..n_states {
            check_distribution(
                &probs[s * n_actions..(s + 1) * n_actions],
                n_actions,
                &format!("policy row {s}"),
            )?;
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// One-hot policy choosing `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(invalid(format!("action {a} out of range in state {s}")));
            }
            probs[s * n_actions + a] = 1.0;
        }
        Ok(Self {
            n_states: actions.len(),
            n_actions,
            probs,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Most probable action; ties go to the lowest index.
    pub fn greedy_action(&self, s: usize) -> usize {
        argmax(self.row(s))
    }

    pub fn greedy_actions(&self) -> Vec<usize> {
        (0..self.n_states).map(|s| self.greedy_action(s)).collect()
    }

    /// The one-hot policy picking [`Self::greedy_action`] everywhere.
    pub fn greedy(&self) -> Self {
        Self::deterministic(self.n_actions, &self.greedy_actions())
            .expect("greedy actions are in range")
    }
}

/// Index of the maximum; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    pub values: Vec<f64>,
}

/// `Q(s, a)`, row-major `[s][a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    pub n_states: usize,
    pub n_actions: usize,
    pub values: Vec<f64>,
}

impl QTable {
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }
}

/// A demonstration: `(state, action)` steps followed by the state reached
/// after the last action.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trajectory {
    pub id: u64,
    /// Ground-truth task, used only for evaluation.
    pub task: Option<usize>,
    pub steps: Vec<(usize, usize)>,
    pub terminal: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `(s_t, a_t, s_{t+1})` triples, the last one ending in `terminal`.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.steps.iter().enumerate().map(move |(t, &(s, a))| {
            let next = self.steps.get(t + 1).map_or(self.terminal, |step| step.0);
            (s, a, next)
        })
    }

    /// Same steps and terminal state; ids and labels are ignored.
    pub fn same_path(&self, other: &Trajectory) -> bool {
        self.steps == other.steps && self.terminal == other.terminal
    }

    pub fn validate(&self, n_states: usize, n_actions: usize) -> Result<()> {
        if self.steps.is_empty() {
            return Err(invalid(format!("trajectory {} has no steps", self.id)));
        }
        for &(s, a) in &self.steps {
            if s >= n_states || a >= n_actions {
                return Err(invalid(format!(
                    "trajectory {} has out-of-range step ({s}, {a})",
                    self.id
                )));
            }
        }
        if self.terminal >= n_states {
            return Err(invalid(format!(
                "trajectory {} has out-of-range terminal state {}",
                self.id, self.terminal
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_set_union_and_lookup() {
        let a = TripleSet::from_triples(3, 2, [(0, 0, 2), (0, 0, 1), (2, 1, 0)]).unwrap();
        let b = TripleSet::from_triples(3, 2, [(0, 0, 1), (1, 1, 1)]).unwrap();
        let u = a.union(&b).unwrap();
        assert_eq!(u.len(), 4);
        assert_eq!(u.row(0, 0), &[1, 2]);
        assert_eq!(u.position(1, 1, 1), Some(2));
        assert_eq!(u.position(1, 0, 1), None);
        let triples: Vec<_> = u.iter().collect();
        assert_eq!(triples, vec![(0, 0, 1), (0, 0, 2), (1, 1, 1), (2, 1, 0)]);
    }

    #[test]
    fn out_of_range_triple_rejected() {
        assert!(TripleSet::from_triples(2, 1, [(0, 1, 0)]).is_err());
    }

    #[test]
    fn tensor_projection_and_l1() {
        let set = Arc::new(TripleSet::from_triples(2, 1, [(0, 0, 0), (1, 0, 1)]).unwrap());
        let t = TripleTensor::new(set, vec![1.0, 2.0]).unwrap();
        let other = TripleTensor::from_dense(2, 1, &[0.5, 0.5, 0.0, 2.0]).unwrap();
        assert_eq!(t.get(1, 0, 1), 2.0);
        assert_eq!(t.get(1, 0, 0), 0.0);
        assert!((t.l1_distance(&other).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(t.to_dense(), vec![1.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn transition_rows_must_be_distributions() {
        assert!(TransitionModel::from_dense(1, 1, &[0.9]).is_err());
        assert!(TransitionModel::from_dense(2, 1, &[1.5, -0.5, 0.0, 1.0]).is_err());
        let p = TransitionModel::from_dense(2, 1, &[0.0, 1.0, 0.5, 0.5]).unwrap();
        // zero entries dropped from the support
        assert_eq!(p.support().len(), 3);
        assert_eq!(p.prob(0, 0, 0), 0.0);
        assert_eq!(p.prob(1, 0, 0), 0.5);
    }

    #[test]
    fn mdp_rejects_bad_discount_and_horizon() {
        let p = TransitionModel::from_dense(1, 1, &[1.0]).unwrap();
        assert!(TabularMdp::new(p.clone(), -0.1, 1).is_err());
        assert!(TabularMdp::new(p.clone(), 1.5, 1).is_err());
        assert!(TabularMdp::new(p.clone(), f64::NAN, 1).is_err());
        assert!(TabularMdp::new(p.clone(), 0.0, 1).is_ok());
        assert!(TabularMdp::new(p.clone(), 0.5, 0).is_err());
        assert!(TabularMdp::new(p, 1.0, 1).is_ok());
    }

    #[test]
    fn greedy_ties_go_low() {
        let pi = StochasticPolicy::new(1, 3, vec![0.4, 0.4, 0.2]).unwrap();
        assert_eq!(pi.greedy_action(0), 0);
        assert_eq!(pi.greedy().probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn trajectory_transitions_end_in_terminal() {
        let t = Trajectory {
            id: 0,
            task: None,
            steps: vec![(0, 1), (2, 0)],
            terminal: 1,
        };
        let tr: Vec<_> = t.transitions().collect();
        assert_eq!(tr, vec![(0, 1, 2), (2, 0, 1)]);
    }
}
