//! Target and jammer dynamics. The three components evolve independently
//! and do not react to the radar action.

use std::collections::BTreeMap;

use rand::Rng;

use super::{EnvState, RadarEnv, ScenarioConfig};
use crate::error::Result;
use crate::mdp::{TransitionModel, TripleSet};

/// Range drift in bins per step for a velocity bin, spread linearly over
/// `−max_drift ..= +max_drift`.
pub(crate) fn drift(config: &ScenarioConfig, vel_bin: usize) -> i64 {
    if config.n_vel_bins == 1 {
        return 0;
    }
    let m = config.max_drift as f64;
    (-m + 2.0 * m * vel_bin as f64 / (config.n_vel_bins - 1) as f64).round() as i64
}

fn add_mass(out: &mut Vec<(usize, f64)>, value: usize, p: f64) {
    if p == 0.0 {
        return;
    }
    match out.iter_mut().find(|(v, _)| *v == value) {
        Some(entry) => entry.1 += p,
        None => out.push((value, p)),
    }
}

pub(crate) fn pos_kernel(config: &ScenarioConfig, pos: usize, vel: usize) -> Vec<(usize, f64)> {
    let top = config.n_pos_bins as i64 - 1;
    let base = pos as i64 + drift(config, vel);
    let mut out = Vec::with_capacity(3);
    for (eta, p) in [-1i64, 0, 1].into_iter().zip(config.pos_noise_probs) {
        add_mass(&mut out, (base + eta).clamp(0, top) as usize, p);
    }
    out
}

/// Random walk with reflection at the edges.
pub(crate) fn vel_kernel(config: &ScenarioConfig, vel: usize) -> Vec<(usize, f64)> {
    let n = config.n_vel_bins;
    if n == 1 {
        return vec![(0, 1.0)];
    }
    let move_p = (1.0 - config.vel_stay_prob) / 2.0;
    let down = if vel == 0 { 1 } else { vel - 1 };
    let up = if vel + 1 == n { n - 2 } else { vel + 1 };
    let mut out = Vec::with_capacity(3);
    add_mass(&mut out, vel, config.vel_stay_prob);
    add_mass(&mut out, down, move_p);
    add_mass(&mut out, up, move_p);
    out
}

fn block(width: usize, start: usize) -> u32 {
    (((1u64 << width) - 1) << start) as u32
}

/// The jammer block starts at the lowest occupied channel (channel 0 when
/// the band is clear), then stays or shifts by one channel.
pub(crate) fn jammer_kernel(config: &ScenarioConfig, occupancy: u32) -> Vec<(u32, f64)> {
    let w = config.jammer_width;
    if w == 0 {
        return vec![(0, 1.0)];
    }
    let last = config.n_channels - w;
    let start = if occupancy == 0 {
        0
    } else {
        (occupancy.trailing_zeros() as usize).min(last)
    };
    let shift_p = (1.0 - config.jammer_stay_prob) / 2.0;
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(3);
    add_mass(&mut out, start, config.jammer_stay_prob);
    add_mass(&mut out, start.saturating_sub(1), shift_p);
    add_mass(&mut out, (start + 1).min(last), shift_p);
    out.into_iter().map(|(s, p)| (block(w, s), p)).collect()
}

fn draw<T: Copy, R: Rng + ?Sized>(rng: &mut R, kernel: &[(T, f64)]) -> T {
    let weights: Vec<f64> = kernel.iter().map(|(_, p)| *p).collect();
    kernel[crate::mdp::draw_index(rng, &weights)].0
}

pub(crate) fn step<R: Rng + ?Sized>(config: &ScenarioConfig, s: &EnvState, rng: &mut R) -> EnvState {
    let pos_bin = draw(rng, &pos_kernel(config, s.pos_bin, s.vel_bin));
    let vel_bin = draw(rng, &vel_kernel(config, s.vel_bin));
    let occupancy = draw(rng, &jammer_kernel(config, s.occupancy));
    EnvState {
        pos_bin,
        vel_bin,
        occupancy,
    }
}

/// Product of the three kernels, identical for every action.
pub(crate) fn transition_model(env: &RadarEnv) -> Result<TransitionModel> {
    let config = env.config();
    let n_a = env.n_actions();
    let mut triples = Vec::new();
    let mut prob = Vec::new();
    for s in 0..env.n_states() {
        let state = env.state(s);
        let mut row: BTreeMap<usize, f64> = BTreeMap::new();
        for (pos, p_pos) in pos_kernel(config, state.pos_bin, state.vel_bin) {
            for (vel, p_vel) in vel_kernel(config, state.vel_bin) {
                for (occ, p_occ) in jammer_kernel(config, state.occupancy) {
                    let next = EnvState {
                        pos_bin: pos,
                        vel_bin: vel,
                        occupancy: occ,
                    };
                    let idx = env.state_index(&next).expect("kernels stay in range");
                    *row.entry(idx).or_default() += p_pos * p_vel * p_occ;
                }
            }
        }
        for a in 0..n_a {
            for (&s2, &p) in &row {
                triples.push((s, a, s2));
                prob.push(p);
            }
        }
    }
    let support = TripleSet::from_triples(env.n_states(), n_a, triples)?;
    TransitionModel::new(support, prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn drift_map() {
        let c = ScenarioConfig {
            n_vel_bins: 5,
            ..ScenarioConfig::downscaled()
        };
        let d: Vec<i64> = (0..5).map(|v| drift(&c, v)).collect();
        assert_eq!(d, vec![-2, -1, 0, 1, 2]);
        let c3 = ScenarioConfig::downscaled();
        assert_eq!((0..3).map(|v| drift(&c3, v)).collect::<Vec<_>>(), vec![-2, 0, 2]);
    }

    #[test]
    fn kernels_are_distributions() {
        let c = ScenarioConfig::paper_scale();
        for pos in 0..c.n_pos_bins {
            for vel in 0..c.n_vel_bins {
                let total: f64 = pos_kernel(&c, pos, vel).iter().map(|x| x.1).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        for vel in 0..c.n_vel_bins {
            let total: f64 = vel_kernel(&c, vel).iter().map(|x| x.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        for occ in 0..32 {
            let k = jammer_kernel(&c, occ);
            let total: f64 = k.iter().map(|x| x.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(k.iter().all(|(o, _)| o.count_ones() as usize == c.jammer_width));
        }
    }

    #[test]
    fn edge_reflection_and_clamping() {
        let c = ScenarioConfig::downscaled();
        let v0 = vel_kernel(&c, 0);
        assert!(v0.contains(&(0, 0.6)));
        assert!(v0.iter().any(|&(v, p)| v == 1 && (p - 0.4).abs() < 1e-12));
        // jammer at the top edge cannot shift further up
        let top = jammer_kernel(&c, 0b100);
        assert!(top.iter().any(|&(o, p)| o == 0b100 && (p - 0.9).abs() < 1e-12));
    }

    #[test]
    fn frozen_dynamics_keep_state() {
        let c = ScenarioConfig {
            jammer_stay_prob: 1.0,
            vel_stay_prob: 1.0,
            pos_noise_probs: [0.0, 1.0, 0.0],
            n_vel_bins: 1,
            ..ScenarioConfig::downscaled()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = EnvState {
            pos_bin: 3,
            vel_bin: 0,
            occupancy: 0b010,
        };
        for _ in 0..20 {
            assert_eq!(step(&c, &s, &mut rng), s);
        }
    }

    #[test]
    fn seeded_step_is_reproducible() {
        let c = ScenarioConfig::downscaled();
        let s = EnvState {
            pos_bin: 2,
            vel_bin: 1,
            occupancy: 0b001,
        };
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| step(&c, &s, &mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| step(&c, &s, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }
}
