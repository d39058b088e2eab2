//! Radar/jammer spectrum-sharing scenario.
//!
//! A monostatic radar tracks one point target while a jammer occupies a
//! block of sub-channels. States combine the quantized target range, the
//! quantized radial velocity and the jammer occupancy word; actions pick a
//! contiguous band of sub-channels and a transmit power level.

mod dynamics;
mod features;
mod physics;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mdp::{
    self, uniform_distribution, RewardTensor, StochasticPolicy, TabularMdp, TransitionModel,
    TripleSet, TripleTensor,
};

pub use physics::{reward, sinr_db};

/// Default cap on the enumerated state count.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Reward weights of one radar task: SINR, bandwidth usage, transmit power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl TaskWeights {
    pub const fn new(w1: f64, w2: f64, w3: f64) -> Self {
        Self { w1, w2, w3 }
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.w1, self.w2, self.w3];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(invalid(format!("task weights {w:?} must be finite and >= 0")));
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err(invalid("task weights must not all be zero"));
        }
        Ok(())
    }
}

fn default_pos_noise() -> [f64; 3] {
    [0.15, 0.7, 0.15]
}

fn default_vel_stay() -> f64 {
    0.6
}

fn default_max_drift() -> usize {
    2
}

fn default_state_cap() -> usize {
    DEFAULT_STATE_CAP
}

/// Scene dimensions, link-budget anchors, task weights and dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_channels: usize,
    pub n_power_levels: usize,
    pub power_min_dbm: f64,
    pub power_max_dbm: f64,
    pub n_pos_bins: usize,
    pub n_vel_bins: usize,
    /// Closest range as a fraction of the maximum range.
    pub r_min_frac: f64,
    /// SNR at maximum range, maximum power, no interference.
    pub snr_max_db: f64,
    pub inr_db: f64,
    pub horizon: usize,
    pub large_penalty: f64,
    pub task_weights: Vec<TaskWeights>,
    pub jammer_stay_prob: f64,
    pub jammer_width: usize,
    /// Probabilities of a range-noise step of −1, 0, +1 bins.
    #[serde(default = "default_pos_noise")]
    pub pos_noise_probs: [f64; 3],
    #[serde(default = "default_vel_stay")]
    pub vel_stay_prob: f64,
    /// Range drift, in bins per step, of the extreme velocity bins.
    #[serde(default = "default_max_drift")]
    pub max_drift: usize,
    #[serde(default = "default_state_cap")]
    pub state_cap: usize,
    pub rng_seed: u64,
}

/// Search, low-probability-of-intercept and spectrum-sharing profiles.
pub const DEFAULT_TASKS: [TaskWeights; 3] = [
    TaskWeights::new(5.0, 1.0, 5.0),
    TaskWeights::new(1.0, 5.0, 5.0),
    TaskWeights::new(1.0, 1.0, 5.0),
];

impl ScenarioConfig {
    /// 6 range × 3 velocity bins, 3 sub-channels, 4 power levels:
    /// 144 states and 24 actions.
    pub fn downscaled() -> Self {
        Self {
            n_channels: 3,
            n_power_levels: 4,
            power_min_dbm: 11.0,
            power_max_dbm: 20.0,
            n_pos_bins: 6,
            n_vel_bins: 3,
            r_min_frac: 0.2,
            snr_max_db: 3.0,
            inr_db: 14.0,
            horizon: 20,
            large_penalty: -10.0,
            task_weights: DEFAULT_TASKS.to_vec(),
            jammer_stay_prob: 0.8,
            jammer_width: 1,
            pos_noise_probs: default_pos_noise(),
            vel_stay_prob: default_vel_stay(),
            max_drift: default_max_drift(),
            state_cap: DEFAULT_STATE_CAP,
            rng_seed: 0,
        }
    }

    /// 10 range × 5 velocity bins, 5 sub-channels, 10 power levels:
    /// 1600 states and 150 actions.
    pub fn paper_scale() -> Self {
        Self {
            n_channels: 5,
            n_power_levels: 10,
            n_pos_bins: 10,
            n_vel_bins: 5,
            ..Self::downscaled()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_channels == 0 || self.n_channels > 16 {
            return Err(invalid(format!("n_channels {} outside 1..=16", self.n_channels)));
        }
        if self.n_power_levels == 0 || self.n_pos_bins == 0 || self.n_vel_bins == 0 {
            return Err(invalid("power, range and velocity bin counts must be >= 1"));
        }
        if !(self.power_max_dbm > self.power_min_dbm) {
            return Err(invalid("power_max_dbm must exceed power_min_dbm"));
        }
        if !(self.r_min_frac > 0.0 && self.r_min_frac < 1.0) {
            return Err(invalid(format!("r_min_frac {} outside (0, 1)", self.r_min_frac)));
        }
        for (name, v) in [
            ("snr_max_db", self.snr_max_db),
            ("inr_db", self.inr_db),
            ("large_penalty", self.large_penalty),
            ("power_min_dbm", self.power_min_dbm),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        if self.horizon == 0 {
            return Err(invalid("horizon must be >= 1"));
        }
        if self.task_weights.is_empty() {
            return Err(invalid("at least one task is required"));
        }
        for (i, w) in self.task_weights.iter().enumerate() {
            w.validate().map_err(|e| invalid(format!("task {i}: {e}")))?;
        }
        if !(0.0..=1.0).contains(&self.jammer_stay_prob) {
            return Err(invalid("jammer_stay_prob outside [0, 1]"));
        }
        if self.jammer_width > self.n_channels {
            return Err(invalid("jammer_width exceeds n_channels"));
        }
        if !(0.0..=1.0).contains(&self.vel_stay_prob) {
            return Err(invalid("vel_stay_prob outside [0, 1]"));
        }
        if self.pos_noise_probs.iter().any(|p| !(0.0..=1.0).contains(p))
            || (self.pos_noise_probs.iter().sum::<f64>() - 1.0).abs() > mdp::DISTRIBUTION_TOL
        {
            return Err(invalid("pos_noise_probs must be a distribution"));
        }
        if !(physics::max_sinr_db(self) > 0.0) {
            return Err(invalid("the best achievable SINR must be positive"));
        }
        let states = self.state_count();
        if states > self.state_cap as u128 {
            return Err(Error::Capacity {
                requested: states,
                cap: self.state_cap,
            });
        }
        Ok(())
    }

    pub fn state_count(&self) -> u128 {
        self.n_pos_bins as u128 * self.n_vel_bins as u128 * (1u128 << self.n_channels.min(64))
    }

    pub fn action_count(&self) -> usize {
        self.n_channels * (self.n_channels + 1) / 2 * self.n_power_levels
    }

    pub fn task(&self, id: usize) -> Result<TaskWeights> {
        self.task_weights
            .get(id)
            .copied()
            .ok_or_else(|| invalid(format!("task {id} not defined in scenario")))
    }
}

/// Quantized target range, radial velocity and jammer occupancy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EnvState {
    pub pos_bin: usize,
    pub vel_bin: usize,
    /// Bit `i` set when sub-channel `i` is jammed.
    pub occupancy: u32,
}

/// Contiguous band `band_lo..=band_hi` at a transmit power level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RadarAction {
    pub band_lo: usize,
    pub band_hi: usize,
    pub power_level: usize,
}

impl RadarAction {
    pub fn width(&self) -> usize {
        self.band_hi - self.band_lo + 1
    }

    pub fn band_mask(&self) -> u32 {
        (((1u64 << self.width()) - 1) << self.band_lo) as u32
    }
}

/// All valid actions ordered by `(band_lo, band_hi, power_level)`.
pub fn enumerate_actions(config: &ScenarioConfig) -> Vec<RadarAction> {
    let mut out = Vec::with_capacity(config.action_count());
    for band_lo in 0..config.n_channels {
        for band_hi in band_lo..config.n_channels {
            for power_level in 0..config.n_power_levels {
                out.push(RadarAction {
                    band_lo,
                    band_hi,
                    power_level,
                });
            }
        }
    }
    out
}

/// An instantiated scenario: validated config plus state/action tables.
#[derive(Clone, Debug)]
pub struct RadarEnv {
    config: ScenarioConfig,
    actions: Vec<RadarAction>,
    n_states: usize,
}

impl RadarEnv {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let actions = enumerate_actions(&config);
        let n_states = config.state_count() as usize;
        Ok(Self {
            config,
            actions,
            n_states,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[RadarAction] {
        &self.actions
    }

    pub fn action(&self, index: usize) -> RadarAction {
        self.actions[index]
    }

    pub fn action_index(&self, action: &RadarAction) -> Option<usize> {
        let c = &self.config;
        if action.band_lo > action.band_hi
            || action.band_hi >= c.n_channels
            || action.power_level >= c.n_power_levels
        {
            return None;
        }
        let lo = action.band_lo;
        let interval = intervals_before(c.n_channels, lo) + (action.band_hi - lo);
        Some(interval * c.n_power_levels + action.power_level)
    }

    pub fn state(&self, index: usize) -> EnvState {
        let n_occ = 1usize << self.config.n_channels;
        let occupancy = (index % n_occ) as u32;
        let rest = index / n_occ;
        EnvState {
            pos_bin: rest / self.config.n_vel_bins,
            vel_bin: rest % self.config.n_vel_bins,
            occupancy,
        }
    }

    pub fn state_index(&self, state: &EnvState) -> Option<usize> {
        let c = &self.config;
        if state.pos_bin >= c.n_pos_bins
            || state.vel_bin >= c.n_vel_bins
            || (state.occupancy as u64) >= (1u64 << c.n_channels)
        {
            return None;
        }
        let n_occ = 1usize << c.n_channels;
        Some((state.pos_bin * c.n_vel_bins + state.vel_bin) * n_occ + state.occupancy as usize)
    }

    /// Every state in index order.
    pub fn enumerate_states(&self) -> Vec<EnvState> {
        (0..self.n_states).map(|i| self.state(i)).collect()
    }

    /// Episodes start uniformly over all states.
    pub fn start_distribution(&self) -> Vec<f64> {
        uniform_distribution(self.n_states)
    }

    /// The exact transition kernel. Dynamics ignore the radar action.
    pub fn transition_model(&self) -> Result<TransitionModel> {
        dynamics::transition_model(self)
    }

    pub fn true_mdp(&self, discount: f64) -> Result<TabularMdp> {
        TabularMdp::new(self.transition_model()?, discount, self.config.horizon)
    }

    /// Task reward evaluated on every triple of `set`.
    pub fn reward_tensor(&self, task: &TaskWeights, set: Arc<TripleSet>) -> RewardTensor {
        let table = physics::reward_table(self, task);
        let n_s = self.n_states;
        TripleTensor::from_fn(set, |_, a, s2| table[a * n_s + s2])
    }

    pub fn step<R: rand::Rng + ?Sized>(&self, state: &EnvState, rng: &mut R) -> EnvState {
        dynamics::step(&self.config, state, rng)
    }

    pub fn feature_dim(&self) -> usize {
        features::feature_dim(&self.config)
    }

    pub fn encode_features(&self, s: &EnvState, a: &RadarAction, s_next: &EnvState) -> Vec<f64> {
        features::encode(&self.config, s, a, s_next)
    }

    /// Row `i` encodes the `i`-th triple of `set`.
    pub fn feature_matrix(&self, set: &TripleSet) -> ndarray::Array2<f64> {
        features::matrix(self, set)
    }

    /// Greedy policy from value iteration on the true model and task reward.
    pub fn expert_policy(&self, task: &TaskWeights, discount: f64) -> Result<StochasticPolicy> {
        let mdp = self.true_mdp(discount)?;
        let reward = self.reward_tensor(task, mdp.support().clone());
        Ok(mdp::value_iteration(&mdp, &reward, 1e-10)?.policy)
    }
}

/// Number of contiguous intervals whose lower channel is below `lo`.
fn intervals_before(n: usize, lo: usize) -> usize {
    (0..lo).map(|j| n - j).sum()
}

impl crate::reward::FeatureMap for RadarEnv {
    fn feature_dim(&self) -> usize {
        RadarEnv::feature_dim(self)
    }

    fn features(&self, set: &TripleSet) -> ndarray::Array2<f64> {
        self.feature_matrix(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_counts() {
        let mut c = ScenarioConfig::paper_scale();
        assert_eq!(enumerate_actions(&c).len(), 150);
        c.n_channels = 1;
        c.n_power_levels = 1;
        assert_eq!(enumerate_actions(&c).len(), 1);
        c.n_channels = 3;
        c.n_power_levels = 4;
        assert_eq!(enumerate_actions(&c).len(), 24);
    }

    #[test]
    fn action_index_round_trip() {
        let env = RadarEnv::new(ScenarioConfig::paper_scale()).unwrap();
        for (i, a) in env.actions().iter().enumerate() {
            assert_eq!(env.action_index(a), Some(i));
            assert!(a.band_lo <= a.band_hi);
        }
        let bad = RadarAction {
            band_lo: 3,
            band_hi: 2,
            power_level: 0,
        };
        assert_eq!(env.action_index(&bad), None);
    }

    #[test]
    fn state_counts_and_round_trip() {
        let env = RadarEnv::new(ScenarioConfig::paper_scale()).unwrap();
        assert_eq!(env.n_states(), 1600);
        for (i, s) in env.enumerate_states().iter().enumerate() {
            assert_eq!(env.state_index(s), Some(i));
        }
        let mut c = ScenarioConfig::downscaled();
        c.n_pos_bins = 2;
        c.n_vel_bins = 2;
        c.n_channels = 1;
        c.jammer_width = 1;
        assert_eq!(RadarEnv::new(c).unwrap().n_states(), 8);
        assert_eq!(RadarEnv::new(ScenarioConfig::downscaled()).unwrap().n_states(), 144);
    }

    #[test]
    fn state_cap_enforced() {
        let mut c = ScenarioConfig::paper_scale();
        c.state_cap = 1000;
        assert!(matches!(RadarEnv::new(c), Err(Error::Capacity { .. })));
    }

    #[test]
    fn zero_weights_rejected() {
        let mut c = ScenarioConfig::downscaled();
        c.task_weights.push(TaskWeights::new(0.0, 0.0, 0.0));
        assert!(c.validate().is_err());
    }

    #[test]
    fn scenario_json_rejects_unknown_keys() {
        let c = ScenarioConfig::downscaled();
        let text = c.to_json();
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), c);
        let extra = text.replacen('{', "{\"antenna_gain\": 3.0,", 1);
        assert!(ScenarioConfig::from_json(&extra).is_err());
    }
}

