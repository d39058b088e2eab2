//! Clustering agreement (ARI, NMI) and reward-recovery quality (APE, EVD).

use std::collections::BTreeMap;

use crate::error::{invalid, shape, Result};
use crate::mdp::{policy_value, RewardTensor, StochasticPolicy, TabularMdp, Trajectory};

fn contingency(truth: &[usize], pred: &[usize]) -> Result<(BTreeMap<(usize, usize), f64>, BTreeMap<usize, f64>, BTreeMap<usize, f64>)> {
    if truth.len() != pred.len() {
        return Err(shape(format!(
            "label vectors have lengths {} and {}",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(invalid("label vectors must be non-empty"));
    }
    let mut joint = BTreeMap::new();
    let mut rows = BTreeMap::new();
    let mut cols = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(pred) {
        *joint.entry((t, p)).or_insert(0.0) += 1.0;
        *rows.entry(t).or_insert(0.0) += 1.0;
        *cols.entry(p).or_insert(0.0) += 1.0;
    }
    Ok((joint, rows, cols))
}

fn pairs(n: f64) -> f64 {
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index.
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let (joint, rows, cols) = contingency(truth, pred)?;
    let index: f64 = joint.values().copied().map(pairs).sum();
    let sum_rows: f64 = rows.values().copied().map(pairs).sum();
    let sum_cols: f64 = cols.values().copied().map(pairs).sum();
    let total = pairs(truth.len() as f64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_rows * sum_cols / total;
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        // both partitions trivial (one cluster or all singletons)
        return Ok(if index == max { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

fn entropy(counts: &BTreeMap<usize, f64>, n: f64) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information `2 I(Z; Ẑ) / (H(Z) + H(Ẑ))`, zero when the
/// denominator vanishes.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let (joint, rows, cols) = contingency(truth, pred)?;
    let n = truth.len() as f64;
    let denom = entropy(&rows, n) + entropy(&cols, n);
    if denom <= 0.0 {
        return Ok(0.0);
    }
    let mutual: f64 = joint
        .iter()
        .map(|(&(t, p), &c)| {
            let pij = c / n;
            pij * (c * n / (rows[&t] * cols[&p])).ln()
        })
        .sum();
    if mutual <= 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * mutual / denom).clamp(0.0, 1.0))
}

/// Fraction of observed `(s, a)` pairs whose action differs from the greedy
/// action of the policy assigned to that trajectory.
pub fn ape(dataset: &[Trajectory], policy_per_traj: &[&StochasticPolicy]) -> Result<f64> {
    if dataset.is_empty() {
        return Err(invalid("cannot score an empty dataset"));
    }
    if dataset.len() != policy_per_traj.len() {
        return Err(shape(format!(
            "{} policies for {} trajectories",
            policy_per_traj.len(),
            dataset.len()
        )));
    }
    let mut wrong = 0usize;
    let mut total = 0usize;
    for (traj, policy) in dataset.iter().zip(policy_per_traj) {
        traj.validate(policy.n_states(), policy.n_actions())?;
        for &(s, a) in &traj.steps {
            total += 1;
            if policy.greedy_action(s) != a {
                wrong += 1;
            }
        }
    }
    Ok(wrong as f64 / total as f64)
}

/// Expected value difference `|V(expert) − V(learned)|` under the true reward.
pub fn evd(
    mdp: &TabularMdp,
    true_reward: &RewardTensor,
    expert: &StochasticPolicy,
    learned: &StochasticPolicy,
    start_dist: &[f64],
) -> Result<f64> {
    let v_expert = policy_value(mdp, true_reward, expert, start_dist)?;
    let v_learned = policy_value(mdp, true_reward, learned, start_dist)?;
    Ok((v_expert - v_learned).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ari_examples() {
        assert_eq!(ari(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(ari(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert!((ari(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&[0, 0, 1, 1], &[5, 5, 2, 2]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&[0, 0, 1, 1], &[3, 3, 3, 3]).unwrap(), 0.0);
        assert_eq!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn label_errors() {
        assert!(ari(&[0, 1], &[0]).is_err());
        assert!(nmi(&[], &[]).is_err());
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
    fn ape_examples() {
        let pi = StochasticPolicy::deterministic(2, &[0, 1]).unwrap();
        let data = vec![traj(vec![(0, 0), (1, 1)])];
        assert_eq!(ape(&data, &[&pi]).unwrap(), 0.0);
        let data = vec![traj(vec![(0, 1), (1, 0)])];
        assert_eq!(ape(&data, &[&pi]).unwrap(), 1.0);
        let data = vec![traj(vec![(0, 0), (1, 0)]), traj(vec![(0, 1), (1, 1)])];
        assert_eq!(ape(&data, &[&pi, &pi]).unwrap(), 0.5);
        assert!(ape(&[], &[]).is_err());
    }

    #[test]
    fn evd_examples() {
        let mdp = TabularMdp::from_dense(1, 2, &[1.0, 1.0], 0.0, 1).unwrap();
        let r = RewardTensor::from_dense(1, 2, &[1.0, 0.0]).unwrap();
        let expert = StochasticPolicy::deterministic(2, &[0]).unwrap();
        let uniform = StochasticPolicy::uniform(1, 2);
        assert_eq!(evd(&mdp, &r, &expert, &expert, &[1.0]).unwrap(), 0.0);
        assert!((evd(&mdp, &r, &expert, &uniform, &[1.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    fn labels() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(0usize..4, n),
                proptest::collection::vec(0usize..5, n),
            )
        })
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded((a, b) in labels()) {
            let (ab, ba) = (ari(&a, &b).unwrap(), ari(&b, &a).unwrap());
            prop_assert!((ab - ba).abs() < 1e-12);
            let (ab, ba) = (nmi(&a, &b).unwrap(), nmi(&b, &a).unwrap());
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!(ari(&a, &b).unwrap() <= 1.0 + 1e-12);
        }

        #[test]
        fn relabeling_invariant((a, b) in labels(), shift in 1usize..7) {
            let relabeled: Vec<usize> = b.iter().map(|x| (x + shift) * 3).collect();
            prop_assert!((ari(&a, &b).unwrap() - ari(&a, &relabeled).unwrap()).abs() < 1e-12);
            prop_assert!((nmi(&a, &b).unwrap() - nmi(&a, &relabeled).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn ape_ignores_order(actions in proptest::collection::vec((0usize..3, 0usize..2), 1..20)) {
            let pi = StochasticPolicy::deterministic(2, &[0, 1, 1]).unwrap();
            let data: Vec<Trajectory> = actions.chunks(3).map(|c| traj(c.to_vec())).collect();
            let mut reversed = data.clone();
            reversed.reverse();
            let refs = vec![&pi; data.len()];
            prop_assert_eq!(ape(&data, &refs).unwrap(), ape(&reversed, &refs).unwrap());
        }
    }
}
