//! Visitation frequencies and trajectory likelihoods.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::solve::check_policy;
use super::{StochasticPolicy, TabularMdp, Trajectory, TripleSet, TripleTensor, VisitationTensor};
use crate::error::{invalid, shape, Result};

/// Probabilities are clamped here before taking logs.
pub const LOG_PROB_FLOOR: f64 = 1e-300;

/// Weighted `(s, a, s')` counts averaged over trajectories:
/// `Σ_i w_i count_i(s,a,s') / Σ_i w_i`. The result lives on the observed triples.
pub fn empirical_visitation(
    dataset: &[Trajectory],
    n_states: usize,
    n_actions: usize,
    weights: Option<&[f64]>,
) -> Result<VisitationTensor> {
    if let Some(w) = weights {
        if w.len() != dataset.len() {
            return Err(shape(format!(
                "{} weights for {} trajectories",
                w.len(),
                dataset.len()
            )));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(invalid("trajectory weights must be finite and non-negative"));
        }
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    let total: f64 = (0..dataset.len()).map(weight).sum();
    if !(total > 0.0) {
        return Err(invalid("trajectory weights sum to zero"));
    }
    let mut acc: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for (i, traj) in dataset.iter().enumerate() {
        traj.validate(n_states, n_actions)?;
        let w = weight(i);
        if w == 0.0 {
            continue;
        }
        for triple in traj.transitions() {
            *acc.entry(triple).or_default() += w;
        }
    }
    let set = TripleSet::from_triples(n_states, n_actions, acc.keys().copied())?;
    // BTreeMap iteration order matches the (s, a, s') order of the set
    let values = acc.values().map(|v| v / total).collect();
    TripleTensor::new(Arc::new(set), values)
}

/// Expected `(s, a, s')` visitation over `horizon` steps:
/// `Σ_t d_t(s) π(a|s) P(s'|s,a)` with `d_0 = start_dist`. Lives on the
/// transition support; total mass equals the horizon.
pub fn propagate_policy(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    start_dist: &[f64],
) -> Result<VisitationTensor> {
    check_policy(mdp, policy)?;
    mdp.check_distribution(start_dist, "start distribution")?;
    let support = mdp.support().clone();
    let prob = mdp.transitions().probabilities();
    let n_a = mdp.n_actions();
    let mut freq = vec![0.0; support.len()];
    let mut d = start_dist.to_vec();
    for _ in 0..mdp.horizon() {
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
                let range = support.row_range(s, a);
                for (i, &s2) in range.clone().zip(support.row(s, a)) {
                    let m = w * prob[i];
                    freq[i] += m;
                    next[s2] += m;
                }
            }
        }
        d = next;
    }
    TripleTensor::new(support, freq)
}

/// `Σ_t d_t(s)` over the horizon: expected visits to each state.
pub fn state_occupancy(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    start_dist: &[f64],
) -> Result<Vec<f64>> {
    let visits = propagate_policy(mdp, policy, start_dist)?;
    let mut occ = vec![0.0; mdp.n_states()];
    for ((s, _, _), v) in visits.set().iter().zip(visits.values()) {
        occ[s] += v;
    }
    Ok(occ)
}

/// `Σ_{(s,a) ∈ τ} log π(a|s)`, with probabilities floored at [`LOG_PROB_FLOOR`].
pub fn trajectory_log_policy_likelihood(traj: &Trajectory, policy: &StochasticPolicy) -> f64 {
    traj.steps
        .iter()
        .map(|&(s, a)| policy.prob(s, a).max(LOG_PROB_FLOOR).ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(id: u64, s: usize, a: usize, s2: usize) -> Trajectory {
        Trajectory {
            id,
            task: None,
            steps: vec![(s, a)],
            terminal: s2,
        }
    }

    #[test]
    fn single_step_visitation() {
        let d = empirical_visitation(&[single(0, 0, 0, 1)], 2, 1, None).unwrap();
        assert_eq!(d.to_dense(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn weights_are_linear() {
        let t = single(0, 0, 0, 1);
        let u = single(1, 1, 0, 0);
        let dup = empirical_visitation(&[t.clone(), t.clone(), u.clone()], 2, 1, Some(&[1.0, 1.0, 1.0]))
            .unwrap();
        let merged = empirical_visitation(&[t.clone(), u.clone()], 2, 1, Some(&[2.0, 1.0])).unwrap();
        assert_eq!(dup.to_dense(), merged.to_dense());

        let split = empirical_visitation(&[t, u], 2, 1, Some(&[0.8, 0.2])).unwrap();
        assert!((split.get(0, 0, 1) - 0.8).abs() < 1e-15);
        assert!((split.get(1, 0, 0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_weights_rejected() {
        let t = single(0, 0, 0, 1);
        assert!(empirical_visitation(&[t.clone()], 2, 1, Some(&[0.0])).is_err());
        assert!(empirical_visitation(&[t], 2, 1, Some(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn two_cycle_propagation() {
        let mdp = TabularMdp::from_dense(2, 1, &[0.0, 1.0, 1.0, 0.0], 1.0, 2).unwrap();
        let pi = StochasticPolicy::uniform(2, 1);
        let d = propagate_policy(&mdp, &pi, &[1.0, 0.0]).unwrap();
        assert_eq!(d.to_dense(), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn log_likelihood_cases() {
        let t = Trajectory {
            id: 0,
            task: None,
            steps: vec![(0, 1), (0, 1), (0, 1)],
            terminal: 0,
        };
        let det = StochasticPolicy::deterministic(4, &[1]).unwrap();
        assert_eq!(trajectory_log_policy_likelihood(&t, &det), 0.0);
        let uni = StochasticPolicy::uniform(1, 4);
        assert!((trajectory_log_policy_likelihood(&t, &uni) - 3.0 * 0.25f64.ln()).abs() < 1e-12);
        let never = StochasticPolicy::deterministic(4, &[0]).unwrap();
        assert_eq!(
            trajectory_log_policy_likelihood(&t, &never),
            3.0 * LOG_PROB_FLOOR.ln()
        );
    }
}
