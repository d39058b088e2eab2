use mirl_core::mdp::{policy_value, StochasticPolicy};
use mirl_core::radar::{enumerate_actions, reward, EnvState, RadarEnv, ScenarioConfig, TaskWeights};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn frozen() -> ScenarioConfig {
    ScenarioConfig {
        jammer_stay_prob: 1.0,
        vel_stay_prob: 1.0,
        pos_noise_probs: [0.0, 1.0, 0.0],
        n_vel_bins: 1,
        ..ScenarioConfig::downscaled()
    }
}

#[test]
fn jammer_stay_frequency() {
    let env = RadarEnv::new(ScenarioConfig::downscaled()).unwrap();
    let s = EnvState {
        pos_bin: 2,
        vel_bin: 1,
        occupancy: 0b010,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 100_000;
    let stays = (0..n).filter(|_| env.step(&s, &mut rng).occupancy == s.occupancy).count();
    let freq = stays as f64 / n as f64;
    let sigma = (0.8 * 0.2 / n as f64).sqrt();
    assert!((freq - 0.8).abs() <= 3.0 * sigma, "stay frequency {freq}");
}

#[test]
fn power_only_expert_is_brute_force_optimal() {
    let config = ScenarioConfig {
        task_weights: vec![TaskWeights::new(0.0, 0.0, 5.0)],
        ..frozen()
    };
    let env = RadarEnv::new(config.clone()).unwrap();
    let task = config.task(0).unwrap();
    let expert = env.expert_policy(&task, 0.9).unwrap();
    let actions = enumerate_actions(&config);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut min_power = 0;
    for (i, s) in env.enumerate_states().iter().enumerate() {
        // states off the jammer-block manifold still move
        if env.step(s, &mut rng) != *s {
            continue;
        }
        let rewards: Vec<f64> = actions.iter().map(|a| reward(&config, &task, s, a, s)).collect();
        let best = rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let chosen = expert.greedy_action(i);
        assert_eq!(rewards[chosen], best, "state {i}");
        let lowest_safe = (0..actions.len())
            .filter(|&k| rewards[k] > config.large_penalty)
            .map(|k| actions[k].power_level)
            .min();
        if let Some(level) = lowest_safe {
            assert_eq!(actions[chosen].power_level, level, "state {i}");
            min_power += usize::from(level == 0);
        }
    }
    assert!(min_power > 0);
}

#[test]
fn identical_tasks_identical_experts() {
    let config = ScenarioConfig {
        task_weights: vec![TaskWeights::new(5.0, 1.0, 5.0); 2],
        ..ScenarioConfig::downscaled()
    };
    let env = RadarEnv::new(config.clone()).unwrap();
    let a = env.expert_policy(&config.task(0).unwrap(), 0.9).unwrap();
    let b = env.expert_policy(&config.task(1).unwrap(), 0.9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn experts_beat_uniform_play() {
    let env = RadarEnv::new(ScenarioConfig::downscaled()).unwrap();
    let mdp = env.true_mdp(0.9).unwrap();
    let start = env.start_distribution();
    let uniform = StochasticPolicy::uniform(env.n_states(), env.n_actions());
    for id in 0..3 {
        let task = env.config().task(id).unwrap();
        let r = env.reward_tensor(&task, mdp.support().clone());
        let expert = env.expert_policy(&task, 0.9).unwrap();
        let v_expert = policy_value(&mdp, &r, &expert, &start).unwrap();
        let v_uniform = policy_value(&mdp, &r, &uniform, &start).unwrap();
        assert!(v_expert >= v_uniform, "task {id}: {v_expert} < {v_uniform}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn action_count_formula(n_channels in 1usize..7, n_power in 1usize..12) {
        let config = ScenarioConfig {
            n_channels,
            n_power_levels: n_power,
            jammer_width: 1,
            ..ScenarioConfig::downscaled()
        };
        let actions = enumerate_actions(&config);
        prop_assert_eq!(actions.len(), n_channels * (n_channels + 1) / 2 * n_power);
        prop_assert_eq!(config.action_count(), actions.len());
        let env = RadarEnv::new(config).unwrap();
        for (i, a) in actions.iter().enumerate() {
            prop_assert_eq!(env.action_index(a), Some(i));
        }
    }

    #[test]
    fn state_index_round_trips(pos in 0usize..6, vel in 0usize..3, occ in 0u32..8) {
        let env = RadarEnv::new(ScenarioConfig::downscaled()).unwrap();
        let s = EnvState { pos_bin: pos, vel_bin: vel, occupancy: occ };
        let i = env.state_index(&s).unwrap();
        prop_assert!(i < env.n_states());
        prop_assert_eq!(env.state(i), s);
    }

    #[test]
    fn step_stays_in_range(pos in 0usize..6, vel in 0usize..3, start in 0usize..3, seed in any::<u64>()) {
        let env = RadarEnv::new(ScenarioConfig::downscaled()).unwrap();
        let s = EnvState { pos_bin: pos, vel_bin: vel, occupancy: 1 << start };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let next = env.step(&s, &mut rng);
        prop_assert!(env.state_index(&next).is_some());
        prop_assert_eq!(next.occupancy.count_ones(), 1);
    }
}
