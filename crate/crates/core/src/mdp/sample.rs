//! Rollouts and count-based transition estimation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::solve::check_policy;
use super::{StochasticPolicy, TabularMdp, Trajectory, TransitionModel, TripleSet};
use crate::error::{invalid, Result};

/// Inverse-CDF draw from `weights`; mass lost to rounding lands on the last
/// positive entry.
pub fn draw_index<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Samples `n` fixed-length (`horizon` steps) episodes. Trajectory ids run
/// from 0 to `n - 1`.
pub fn sample_trajectories(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    start_dist: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    check_policy(mdp, policy)?;
    mdp.check_distribution(start_dist, "start distribution")?;
    if n == 0 {
        return Err(invalid("at least one trajectory must be sampled"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = (0..n)
        .map(|i| {
            let mut s = draw_index(&mut rng, start_dist);
            let mut steps = Vec::with_capacity(mdp.horizon());
            for _ in 0..mdp.horizon() {
                let a = draw_index(&mut rng, policy.row(s));
                steps.push((s, a));
                let (next, prob) = mdp.row(s, a);
                s = next[draw_index(&mut rng, prob)];
            }
            Trajectory {
                id: i as u64,
                task: None,
                steps,
                terminal: s,
            }
        })
        .collect();
    Ok(out)
}

/// Count-based estimate of `P(s'|s,a)` with additive smoothing:
/// `(count(s,a,s') + smoothing) / (count(s,a) + smoothing · n_states)`.
/// Rows never visited fall back to uniform.
pub fn estimate_transitions(
    dataset: &[Trajectory],
    n_states: usize,
    n_actions: usize,
    smoothing: f64,
) -> Result<TransitionModel> {
    if dataset.is_empty() {
        return Err(invalid("cannot estimate transitions from an empty dataset"));
    }
    if !(smoothing >= 0.0) || !smoothing.is_finite() {
        return Err(invalid(format!("smoothing {smoothing} must be finite and >= 0")));
    }
    let mut counts: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); n_states * n_actions];
    for traj in dataset {
        traj.validate(n_states, n_actions)?;
        for (s, a, s2) in traj.transitions() {
            *counts[s * n_actions + a].entry(s2).or_default() += 1;
        }
    }
    let mut triples = Vec::new();
    let mut prob = Vec::new();
    let uniform = 1.0 / n_states as f64;
    for (row, seen) in counts.iter().enumerate() {
        let (s, a) = (row / n_actions, row % n_actions);
        let total: u64 = seen.values().sum();
        if total == 0 {
            for s2 in 0..n_states {
                triples.push((s, a, s2));
                prob.push(uniform);
            }
        } else if smoothing > 0.0 {
            let denom = total as f64 + smoothing * n_states as f64;
            for s2 in 0..n_states {
                let c = seen.get(&s2).copied().unwrap_or(0) as f64;
                triples.push((s, a, s2));
                prob.push((c + smoothing) / denom);
            }
        } else {
            for (&s2, &c) in seen {
                triples.push((s, a, s2));
                prob.push(c as f64 / total as f64);
            }
        }
    }
    // triples are generated in sorted order, so `prob` stays aligned
    let support = TripleSet::from_triples(n_states, n_actions, triples)?;
    TransitionModel::new(support, prob)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize, horizon: usize) -> TabularMdp {
        let mut dense = vec![0.0; n * n];
        for s in 0..n {
            dense[s * n + (s + 1) % n] = 1.0;
        }
        TabularMdp::from_dense(n, 1, &dense, 0.9, horizon).unwrap()
    }

    #[test]
    fn deterministic_rollouts_are_identical() {
        let mdp = chain(3, 5);
        let pi = StochasticPolicy::uniform(3, 1);
        let trajs = sample_trajectories(&mdp, &pi, &[1.0, 0.0, 0.0], 4, 7).unwrap();
        assert!(trajs.iter().all(|t| t.same_path(&trajs[0])));
        assert_eq!(trajs[0].steps, vec![(0, 0), (1, 0), (2, 0), (0, 0), (1, 0)]);
        assert_eq!(trajs[0].terminal, 2);
        assert!(trajs.iter().all(|t| t.len() == 5));
    }

    #[test]
    fn same_seed_same_output() {
        let mdp = TabularMdp::from_dense(2, 2, &[0.5, 0.5, 0.2, 0.8, 0.9, 0.1, 0.3, 0.7], 0.9, 8)
            .unwrap();
        let pi = StochasticPolicy::uniform(2, 2);
        let a = sample_trajectories(&mdp, &pi, &[0.5, 0.5], 50, 3).unwrap();
        let b = sample_trajectories(&mdp, &pi, &[0.5, 0.5], 50, 3).unwrap();
        assert_eq!(a, b);
        let c = sample_trajectories(&mdp, &pi, &[0.5, 0.5], 50, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_policy_action_frequency() {
        let mdp = TabularMdp::from_dense(1, 2, &[1.0, 1.0], 0.9, 1).unwrap();
        let pi = StochasticPolicy::uniform(1, 2);
        let trajs = sample_trajectories(&mdp, &pi, &[1.0], 10_000, 11).unwrap();
        let ones = trajs.iter().filter(|t| t.steps[0].1 == 1).count() as f64;
        // 3σ of Binomial(10^4, 0.5) is 0.015
        assert!((ones / 10_000.0 - 0.5).abs() <= 0.015);
    }

    #[test]
    fn single_observation_is_one_hot() {
        let t = Trajectory {
            id: 0,
            task: None,
            steps: vec![(0, 0)],
            terminal: 1,
        };
        let p = estimate_transitions(&[t], 3, 2, 0.0).unwrap();
        assert_eq!(p.row(0, 0), (&[1usize][..], &[1.0][..]));
        // unvisited rows are uniform
        let (next, prob) = p.row(2, 1);
        assert_eq!(next, &[0, 1, 2]);
        assert!(prob.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn smoothing_keeps_rows_normalized() {
        let t = Trajectory {
            id: 0,
            task: None,
            steps: vec![(0, 0), (1, 0), (0, 0)],
            terminal: 0,
        };
        for smoothing in [0.0, 1e-3, 0.5, 10.0] {
            let p = estimate_transitions(std::slice::from_ref(&t), 2, 1, smoothing).unwrap();
            for s in 0..2 {
                let total: f64 = p.row(s, 0).1.iter().sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        let p = estimate_transitions(&[t], 2, 1, 1.0).unwrap();
        // (1 + 1) / (2 + 2)
        assert!((p.prob(0, 0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn estimate_recovers_known_probability() {
        let mdp = TabularMdp::from_dense(2, 1, &[0.3, 0.7, 0.5, 0.5], 0.9, 1).unwrap();
        let pi = StochasticPolicy::uniform(2, 1);
        let trajs = sample_trajectories(&mdp, &pi, &[1.0, 0.0], 10_000, 5).unwrap();
        let p = estimate_transitions(&trajs, 2, 1, 0.0).unwrap();
        // 3σ of Binomial(10^4, 0.7) ≈ 0.0137
        assert!((p.prob(0, 0, 1) - 0.7).abs() <= 0.015);
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(estimate_transitions(&[], 2, 2, 0.0).is_err());
    }
}
