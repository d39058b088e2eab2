//! Clustering baselines that ignore the MDP: trajectory histograms clustered
//! with K-means or a diagonal Gaussian mixture.

use ndarray::{Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::mdp::Trajectory;

pub const DEFAULT_RESTARTS: usize = 10;
pub const VARIANCE_FLOOR: f64 = 1e-6;
const MAX_LLOYD_ITERS: usize = 300;
const MAX_EM_ITERS: usize = 500;
const EM_TOL: f64 = 1e-10;

/// One row per trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryFeatures {
    pub matrix: Array2<f64>,
    pub tag: &'static str,
}

/// Normalized action histogram followed by the normalized state-visit
/// histogram of each trajectory.
pub fn featurize(dataset: &[Trajectory], n_states: usize, n_actions: usize) -> Result<TrajectoryFeatures> {
    if dataset.is_empty() {
        return Err(invalid("cannot featurize an empty dataset"));
    }
    let mut matrix = Array2::zeros((dataset.len(), n_actions + n_states));
    for (mut row, traj) in matrix.rows_mut().into_iter().zip(dataset) {
        traj.validate(n_states, n_actions)?;
        let share = 1.0 / traj.len() as f64;
        for &(s, a) in &traj.steps {
            row[a] += share;
            row[n_actions + s] += share;
        }
    }
    Ok(TrajectoryFeatures {
        matrix,
        tag: "action-state-histogram",
    })
}

fn sq_dist(x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_k(data: &Array2<f64>, k: usize) -> Result<()> {
    if k == 0 || k > data.nrows() {
        return Err(invalid(format!("K = {k} must be in 1..={}", data.nrows())));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(invalid("features must be finite"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    /// Inertia after every Lloyd iteration of the selected restart.
    pub inertia_history: Vec<f64>,
}

fn plus_plus_seeds(data: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = data.nrows();
    let mut centroids = Array2::zeros((k, data.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&data.row(first));
    let mut nearest: Vec<f64> = data.rows().into_iter().map(|x| sq_dist(x, data.row(first))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            crate::mdp::draw_index(rng, &nearest.iter().map(|d| d / total).collect::<Vec<_>>())
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&data.row(pick));
        for (d, x) in nearest.iter_mut().zip(data.rows()) {
            *d = d.min(sq_dist(x, data.row(pick)));
        }
    }
    centroids
}

fn assign(data: &Array2<f64>, centroids: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    data.rows()
        .into_iter()
        .map(|x| {
            centroids
                .rows()
                .into_iter()
                .map(|c| sq_dist(x, c))
                .enumerate()
                .fold((0, f64::INFINITY), |best, (j, d)| if d < best.1 { (j, d) } else { best })
        })
        .unzip()
}

fn lloyd(data: &Array2<f64>, mut centroids: Array2<f64>) -> KMeansFit {
    let k = centroids.nrows();
    let (mut labels, mut dists) = assign(data, &centroids);
    let mut history = vec![dists.iter().sum::<f64>()];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut sums = Array2::<f64>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for (x, &l) in data.rows().into_iter().zip(&labels) {
            sums.row_mut(l).scaled_add(1.0, &x);
            counts[l] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids.row_mut(j).assign(&(&sums.row(j) / counts[j] as f64));
            } else {
                let far = dists
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |b, (i, &d)| if d > b.1 { (i, d) } else { b })
                    .0;
                centroids.row_mut(j).assign(&data.row(far));
                dists[far] = 0.0;
            }
        }
        let (next, next_dists) = assign(data, &centroids);
        history.push(next_dists.iter().sum());
        let stable = next == labels;
        labels = next;
        dists = next_dists;
        if stable {
            break;
        }
    }
    KMeansFit {
        labels,
        centroids,
        inertia: *history.last().expect("non-empty"),
        inertia_history: history,
    }
}

/// Lloyd's algorithm from k-means++ seeds; the restart with the lowest
/// inertia wins.
pub fn kmeans(features: &TrajectoryFeatures, k: usize, seed: u64, n_restarts: usize) -> Result<KMeansFit> {
    let data = &features.matrix;
    check_k(data, k)?;
    let mut best: Option<KMeansFit> = None;
    for restart in 0..n_restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let fit = lloyd(data, plus_plus_seeds(data, k, &mut rng));
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmmFit {
    pub labels: Vec<usize>,
    pub weights: Vec<f64>,
    pub means: Array2<f64>,
    pub variances: Array2<f64>,
    /// `[trajectory][component]` posteriors.
    pub posteriors: Array2<f64>,
    pub log_likelihood: f64,
    /// Log-likelihood after every EM iteration of the selected restart.
    pub history: Vec<f64>,
}

/// Log-densities `log w_k + log N(x | μ_k, diag σ²_k)`, per row.
fn joint_log_density(data: &Array2<f64>, weights: &[f64], means: &Array2<f64>, vars: &Array2<f64>) -> Array2<f64> {
    let d = data.ncols() as f64;
    let log_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut out = Array2::zeros((data.nrows(), weights.len()));
    for (k, &w) in weights.iter().enumerate() {
        let log_det: f64 = vars.row(k).iter().map(|v| v.ln()).sum();
        let base = w.ln() - 0.5 * (d * log_2pi + log_det);
        for (i, x) in data.rows().into_iter().enumerate() {
            let quad: f64 = x
                .iter()
                .zip(means.row(k))
                .zip(vars.row(k))
                .map(|((x, m), v)| (x - m) * (x - m) / v)
                .sum();
            out[[i, k]] = base - 0.5 * quad;
        }
    }
    out
}

fn e_step(joint: &Array2<f64>) -> (Array2<f64>, f64) {
    let mut post = joint.clone();
    let mut total = 0.0;
    for mut row in post.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let norm = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        total += norm;
        row.mapv_inplace(|x| (x - norm).exp());
    }
    (post, total)
}

fn m_step(data: &Array2<f64>, post: &Array2<f64>) -> Option<(Vec<f64>, Array2<f64>, Array2<f64>)> {
    let n = data.nrows() as f64;
    let mass = post.sum_axis(Axis(0));
    if mass.iter().any(|&m| !(m > 0.0)) {
        return None;
    }
    let means = post.t().dot(data) / &mass.view().insert_axis(Axis(1));
    let mut vars = Array2::zeros(means.raw_dim());
    for k in 0..mass.len() {
        let mu = means.row(k);
        for j in 0..data.ncols() {
            let m = mu[j];
            let s: f64 = data
                .column(j)
                .iter()
                .zip(post.column(k))
                .map(|(x, r)| r * (x - m) * (x - m))
                .sum();
            vars[[k, j]] = (s / mass[k]).max(VARIANCE_FLOOR);
        }
    }
    let weights = mass.iter().map(|m| m / n).collect();
    Some((weights, means, vars))
}

fn fit_gmm_once(data: &Array2<f64>, k: usize, seed: u64) -> Option<GmmFit> {
    let init = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        lloyd(data, plus_plus_seeds(data, k, &mut rng))
    };
    let mut post = Array2::zeros((data.nrows(), k));
    for (i, &l) in init.labels.iter().enumerate() {
        post[[i, l]] = 1.0;
    }
    let (mut weights, mut means, mut vars) = m_step(data, &post)?;
    let mut history = Vec::new();
    let mut ll = f64::NEG_INFINITY;
    for _ in 0..MAX_EM_ITERS {
        let (p, next_ll) = e_step(&joint_log_density(data, &weights, &means, &vars));
        post = p;
        history.push(next_ll);
        let done = next_ll - ll < EM_TOL;
        ll = next_ll;
        if done {
            break;
        }
        (weights, means, vars) = m_step(data, &post)?;
    }
    if !ll.is_finite() {
        return None;
    }
    let labels = post.rows().into_iter().map(|r| crate::mdp::argmax(r.as_slice().expect("row-major"))).collect();
    Some(GmmFit {
        labels,
        weights,
        means,
        variances: vars,
        posteriors: post,
        log_likelihood: ll,
        history,
    })
}

/// EM for a diagonal-covariance Gaussian mixture, initialized from K-means;
/// the restart with the highest log-likelihood wins.
pub fn gmm(features: &TrajectoryFeatures, k: usize, seed: u64, n_restarts: usize) -> Result<GmmFit> {
    let data = &features.matrix;
    check_k(data, k)?;
    let mut best: Option<GmmFit> = None;
    for restart in 0..n_restarts.max(1) {
        if let Some(fit) = fit_gmm_once(data, k, seed.wrapping_add(restart as u64)) {
            if best.as_ref().is_none_or(|b| fit.log_likelihood > b.log_likelihood) {
                best = Some(fit);
            }
        }
    }
    best.ok_or_else(|| Error::Numeric(format!("every GMM restart produced an empty component (K = {k})")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn feats(rows: &[Vec<f64>]) -> TrajectoryFeatures {
        let d = rows[0].len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        TrajectoryFeatures {
            matrix: Array2::from_shape_vec((rows.len(), d), flat).unwrap(),
            tag: "test",
        }
    }

    fn blobs() -> TrajectoryFeatures {
        let mut rows = Vec::new();
        for i in 0..30 {
            let c = (i % 3) as f64 * 10.0;
            let jitter = (i as f64 * 0.37).sin() * 0.3;
            rows.push(vec![c + jitter, -c + jitter * 0.5]);
        }
        feats(&rows)
    }

    #[test]
    fn featurize_rows_are_two_histograms() {
        let data = vec![
            Trajectory { id: 0, task: None, steps: vec![(0, 1), (2, 1), (2, 0)], terminal: 1 },
            Trajectory { id: 1, task: None, steps: vec![(1, 0)], terminal: 0 },
        ];
        let f = featurize(&data, 3, 2).unwrap();
        assert_eq!(f.matrix.dim(), (2, 5));
        for row in f.matrix.rows() {
            assert!((row.sum() - 2.0).abs() < 1e-12);
        }
        let third = 1.0 / 3.0;
        let expect = [third, 2.0 * third, third, 0.0, 2.0 * third];
        for (x, e) in f.matrix.row(0).iter().zip(expect) {
            assert!((x - e).abs() < 1e-12);
        }
        assert!(featurize(&[], 3, 2).is_err());
        let bad = vec![Trajectory { id: 0, task: None, steps: vec![(5, 0)], terminal: 0 }];
        assert!(featurize(&bad, 3, 2).is_err());
    }

    #[test]
    fn kmeans_separates_blobs() {
        let fit = kmeans(&blobs(), 3, 4, DEFAULT_RESTARTS).unwrap();
        let truth: Vec<usize> = (0..30).map(|i| i % 3).collect();
        assert_eq!(crate::metrics::ari(&truth, &fit.labels).unwrap(), 1.0);
    }

    #[test]
    fn gmm_separates_blobs() {
        let fit = gmm(&blobs(), 3, 4, DEFAULT_RESTARTS).unwrap();
        let truth: Vec<usize> = (0..30).map(|i| i % 3).collect();
        assert_eq!(crate::metrics::ari(&truth, &fit.labels).unwrap(), 1.0);
        assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for row in fit.posteriors.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        assert!(fit.variances.iter().all(|&v| v >= VARIANCE_FLOOR));
    }

    #[test]
    fn deterministic_given_seed() {
        let f = blobs();
        assert_eq!(kmeans(&f, 3, 9, 3).unwrap(), kmeans(&f, 3, 9, 3).unwrap());
        assert_eq!(gmm(&f, 3, 9, 3).unwrap(), gmm(&f, 3, 9, 3).unwrap());
    }

    #[test]
    fn bad_k_rejected() {
        let f = blobs();
        assert!(kmeans(&f, 0, 0, 1).is_err());
        assert!(kmeans(&f, 31, 0, 1).is_err());
        assert!(gmm(&f, 0, 0, 1).is_err());
    }

    #[test]
    fn identical_points_do_not_break_kmeans() {
        let f = feats(&vec![vec![1.0, 1.0]; 5]);
        let fit = kmeans(&f, 2, 0, 2).unwrap();
        assert_eq!(fit.inertia, 0.0);
    }

    #[test]
    fn single_cluster_is_sample_moments() {
        let f = blobs();
        let mean = f.matrix.mean_axis(Axis(0)).unwrap();
        let var = f.matrix.var_axis(Axis(0), 0.0);
        let km = kmeans(&f, 1, 0, 2).unwrap();
        assert!(km.labels.iter().all(|&l| l == 0));
        for (c, m) in km.centroids.row(0).iter().zip(&mean) {
            assert!((c - m).abs() < 1e-9);
        }
        let g = gmm(&f, 1, 0, 1).unwrap();
        for ((gm, gv), (m, v)) in g.means.row(0).iter().zip(g.variances.row(0)).zip(mean.iter().zip(&var)) {
            assert!((gm - m).abs() < 1e-9);
            assert!((gv - v).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicated_dataset_duplicates_labels() {
        let f = blobs();
        let doubled = TrajectoryFeatures {
            matrix: ndarray::concatenate(Axis(0), &[f.matrix.view(), f.matrix.view()]).unwrap(),
            tag: f.tag,
        };
        let fit = kmeans(&doubled, 3, 2, DEFAULT_RESTARTS).unwrap();
        assert_eq!(fit.labels[..30], fit.labels[30..]);
    }

    #[test]
    fn repeated_action_is_one_hot() {
        let data = vec![Trajectory { id: 0, task: None, steps: vec![(0, 2), (1, 2), (0, 2)], terminal: 1 }];
        let f = featurize(&data, 2, 3).unwrap();
        assert_eq!(f.matrix.row(0).slice(ndarray::s![..3]).to_vec(), vec![0.0, 0.0, 1.0]);
    }

    // Exhaustive optimum over all 2-partitions.
    fn best_two_partition(points: &[f64]) -> f64 {
        let n = points.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let mut cost = 0.0;
            for side in [true, false] {
                let members: Vec<f64> = (0..n)
                    .filter(|i| ((mask >> i) & 1 == 1) == side)
                    .map(|i| points[i])
                    .collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                cost += members.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
            }
            best = best.min(cost);
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kmeans_inertia_never_increases(points in proptest::collection::vec(-5.0f64..5.0, 8..30), k in 1usize..5, seed in 0u64..100) {
            let rows: Vec<Vec<f64>> = points.chunks(2).filter(|c| c.len() == 2).map(|c| c.to_vec()).collect();
            prop_assume!(rows.len() >= k);
            let fit = kmeans(&feats(&rows), k, seed, 1).unwrap();
            for w in fit.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
        }

        #[test]
        fn gmm_log_likelihood_never_decreases(points in proptest::collection::vec(-5.0f64..5.0, 12..40), k in 1usize..4, seed in 0u64..100) {
            let rows: Vec<Vec<f64>> = points.chunks(2).filter(|c| c.len() == 2).map(|c| c.to_vec()).collect();
            prop_assume!(rows.len() >= 2 * k);
            if let Ok(fit) = gmm(&feats(&rows), k, seed, 2) {
                for w in fit.history.windows(2) {
                    prop_assert!(w[1] >= w[0] - 1e-8);
                }
            }
        }

        #[test]
        fn kmeans_is_a_fixed_point_above_the_optimum(points in proptest::collection::vec(-5.0f64..5.0, 3..9)) {
            let rows: Vec<Vec<f64>> = points.iter().map(|&x| vec![x]).collect();
            let fit = kmeans(&feats(&rows), 2, 1, DEFAULT_RESTARTS).unwrap();
            prop_assert!(fit.inertia >= best_two_partition(&points) - 1e-9);
            let mut cost = 0.0;
            for (&x, &l) in points.iter().zip(&fit.labels) {
                let d: Vec<f64> = (0..2).map(|j| (x - fit.centroids[[j, 0]]).powi(2)).collect();
                prop_assert!(d[l] <= d[1 - l] + 1e-12);
                cost += d[l];
            }
            prop_assert!((cost - fit.inertia).abs() <= 1e-9);
        }
    }
}
