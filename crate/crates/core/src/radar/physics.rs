//! Link budget and task reward.
//!
//! SINR folds every radar-equation constant into the calibration point
//! "`snr_max_db` at maximum range, maximum power, no interference": only
//! the two-way `40·log10` range term, the transmit power offset and the
//! interference term vary.

use super::{EnvState, RadarAction, RadarEnv, ScenarioConfig, TaskWeights};

pub(crate) fn power_dbm(config: &ScenarioConfig, level: usize) -> f64 {
    if config.n_power_levels == 1 {
        return config.power_max_dbm;
    }
    config.power_min_dbm
        + level as f64 * (config.power_max_dbm - config.power_min_dbm)
            / (config.n_power_levels - 1) as f64
}

/// Bin-centre range as a fraction of the maximum range.
pub(crate) fn range_frac(config: &ScenarioConfig, pos_bin: usize) -> f64 {
    config.r_min_frac + (pos_bin as f64 + 0.5) * (1.0 - config.r_min_frac) / config.n_pos_bins as f64
}

/// SINR in dB of `action` transmitted while the scene is in `state`.
pub fn sinr_db(config: &ScenarioConfig, state: &EnvState, action: &RadarAction) -> f64 {
    let k_used = action.width() as f64;
    let k_overlap = (action.band_mask() & state.occupancy).count_ones() as f64;
    let inr = 10f64.powf(config.inr_db / 10.0);
    config.snr_max_db + (power_dbm(config, action.power_level) - config.power_max_dbm)
        + 40.0 * (1.0 / range_frac(config, state.pos_bin)).log10()
        - 10.0 * (1.0 + inr * k_overlap / k_used).log10()
}

/// Closest range bin, maximum power, no interference.
pub(crate) fn max_sinr_db(config: &ScenarioConfig) -> f64 {
    config.snr_max_db + 40.0 * (1.0 / range_frac(config, 0)).log10()
}

/// Reward of `(s, a, s')`; the SINR is taken in the state the radar
/// transmits into, `s_next`.
pub fn reward(
    config: &ScenarioConfig,
    task: &TaskWeights,
    _s: &EnvState,
    a: &RadarAction,
    s_next: &EnvState,
) -> f64 {
    reward_with_norm(config, task, a, s_next, max_sinr_db(config))
}

fn reward_with_norm(
    config: &ScenarioConfig,
    task: &TaskWeights,
    a: &RadarAction,
    s_next: &EnvState,
    snr_norm: f64,
) -> f64 {
    let sinr = sinr_db(config, s_next, a);
    if sinr < 0.0 {
        return config.large_penalty;
    }
    let bandwidth = a.width() as f64 / config.n_channels as f64;
    let power = (power_dbm(config, a.power_level) - config.power_min_dbm)
        / (config.power_max_dbm - config.power_min_dbm);
    task.w1 * sinr / snr_norm + task.w2 * bandwidth - task.w3 * power
}

/// `table[a * n_states + s']`: the reward ignores `s`.
pub(crate) fn reward_table(env: &RadarEnv, task: &TaskWeights) -> Vec<f64> {
    let norm = max_sinr_db(env.config());
    let states = env.enumerate_states();
    env.actions()
        .iter()
        .flat_map(|a| {
            states
                .iter()
                .map(move |s2| reward_with_norm(env.config(), task, a, s2, norm))
        })
        .collect()
}
