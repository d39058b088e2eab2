//! Parser entry points shared by the fuzz targets and the corpus replay test.
//! Anything a parser accepts must survive a serialize/parse round trip.

use mirl_cli::config::ExperimentConfig;
use mirl_core::dataset::{parse_dataset, to_jsonl, Bounds};
use mirl_core::irl::MixtureManifest;
use mirl_core::radar::{RadarEnv, ScenarioConfig};
use mirl_core::reward::RewardModel;

/// Scenarios larger than this are parsed but not instantiated.
const MAX_FUZZ_STATES: u128 = 4096;

pub fn dataset_jsonl(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(parsed) = parse_dataset(text, None) {
        let again = parse_dataset(&to_jsonl(&parsed), None).expect("serialized dataset parses");
        assert_eq!(parsed, again);
    }
    let bounds = Bounds {
        n_states: 16,
        n_actions: 4,
    };
    if let Ok(parsed) = parse_dataset(text, Some(bounds)) {
        assert!(parsed.iter().all(|t| t.validate(16, 4).is_ok()));
    }
}

pub fn scenario_json(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = ScenarioConfig::from_json(text) else {
        return;
    };
    let again = ScenarioConfig::from_json(&config.to_json()).expect("serialized scenario parses");
    assert_eq!(config, again);
    if config.state_count() <= MAX_FUZZ_STATES {
        let env = RadarEnv::new(config).expect("validated scenario builds");
        for (i, a) in env.actions().iter().enumerate() {
            assert_eq!(env.action_index(a), Some(i));
        }
    }
}

pub fn model_checkpoint(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = RewardModel::from_checkpoint_json(text) {
        let again = RewardModel::from_checkpoint_json(&model.to_checkpoint_json()).expect("serialized model parses");
        assert_eq!(model, again);
    }
}

pub fn mixture_manifest(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(manifest) = MixtureManifest::from_json(text) {
        let json = serde_json::to_string(&manifest).expect("manifest serializes");
        let again = MixtureManifest::from_json(&json).expect("serialized manifest parses");
        assert_eq!(manifest, again);
    }
}

pub fn experiment_config(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::from_json(text) {
        let json = serde_json::to_string(&config).expect("config serializes");
        let again = ExperimentConfig::from_json(&json).expect("serialized config parses");
        assert_eq!(config, again);
    }
}
