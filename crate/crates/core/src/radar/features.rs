//! `(s, a, s')` encoding for reward models:
//! `[pos one-hot, vel one-hot, occupancy bits]` for `s`, `[band mask,
//! power one-hot]` for `a`, then the state block again for `s'`.

use ndarray::Array2;

use super::{EnvState, RadarAction, RadarEnv, ScenarioConfig};
use crate::mdp::TripleSet;

fn state_width(config: &ScenarioConfig) -> usize {
    config.n_pos_bins + config.n_vel_bins + config.n_channels
}

pub(crate) fn feature_dim(config: &ScenarioConfig) -> usize {
    2 * state_width(config) + config.n_channels + config.n_power_levels
}

fn write_state(config: &ScenarioConfig, s: &EnvState, out: &mut [f64]) {
    out[s.pos_bin] = 1.0;
    out[config.n_pos_bins + s.vel_bin] = 1.0;
    let bits = &mut out[config.n_pos_bins + config.n_vel_bins..];
    for (c, slot) in bits.iter_mut().take(config.n_channels).enumerate() {
        *slot = f64::from((s.occupancy >> c) & 1);
    }
}

fn write_action(config: &ScenarioConfig, a: &RadarAction, out: &mut [f64]) {
    for slot in &mut out[a.band_lo..=a.band_hi] {
        *slot = 1.0;
    }
    out[config.n_channels + a.power_level] = 1.0;
}

fn write(config: &ScenarioConfig, s: &EnvState, a: &RadarAction, s2: &EnvState, out: &mut [f64]) {
    let sw = state_width(config);
    let aw = config.n_channels + config.n_power_levels;
    write_state(config, s, &mut out[..sw]);
    write_action(config, a, &mut out[sw..sw + aw]);
    write_state(config, s2, &mut out[sw + aw..]);
}

pub(crate) fn encode(config: &ScenarioConfig, s: &EnvState, a: &RadarAction, s2: &EnvState) -> Vec<f64> {
    let mut out = vec![0.0; feature_dim(config)];
    write(config, s, a, s2, &mut out);
    out
}

pub(crate) fn matrix(env: &RadarEnv, set: &TripleSet) -> Array2<f64> {
    let config = env.config();
    let mut out = Array2::zeros((set.len(), feature_dim(config)));
    for (mut row, (s, a, s2)) in out.rows_mut().into_iter().zip(set.iter()) {
        let slice = row.as_slice_mut().expect("standard layout");
        write(config, &env.state(s), &env.action(a), &env.state(s2), slice);
    }
    out
}
