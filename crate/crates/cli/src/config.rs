//! Experiment configuration files.

use std::path::{Path, PathBuf};

use mirl_core::irl::IrlConfig;
use mirl_core::radar::ScenarioConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[serde(rename = "maxent")]
    #[value(name = "maxent")]
    MaxEnt,
    Ml,
    #[serde(rename = "mi-maxent")]
    #[value(name = "mi-maxent")]
    MiMaxEnt,
    MiMl,
    Kmeans,
    Gmm,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::MaxEnt => "maxent",
            Self::Ml => "ml",
            Self::MiMaxEnt => "mi-maxent",
            Self::MiMl => "mi-ml",
            Self::Kmeans => "kmeans",
            Self::Gmm => "gmm",
        }
    }

    pub fn is_mixture(self) -> bool {
        matches!(self, Self::MiMaxEnt | Self::MiMl)
    }

    pub fn is_clustering(self) -> bool {
        matches!(self, Self::Kmeans | Self::Gmm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    Mlp,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// AER values; each cell corrupts freshly generated demonstrations.
    pub aer: Vec<f64>,
    /// Expert trajectories per task.
    pub n_traj: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            aer: vec![0.0, 0.1, 0.2, 0.3],
            n_traj: Vec::new(),
            algorithms: vec![Algorithm::MaxEnt, Algorithm::Ml],
            seeds: vec![0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scenario JSON; the built-in downscaled scene when absent.
    pub scenario: Option<PathBuf>,
    pub paper_scale: bool,
    pub tasks: Vec<usize>,
    pub n_expert_trajectories: usize,
    pub n_random_trajectories: usize,
    /// Also count demonstrations when estimating transitions.
    pub transitions_include_experts: bool,
    pub transition_smoothing: f64,
    pub aer: f64,
    pub algorithm: Algorithm,
    /// Mixture size; when absent, `DEFAULT_K` components followed by a merge.
    pub k: Option<usize>,
    pub merge_threshold: f64,
    pub reward_model: RewardKind,
    pub hidden: Vec<usize>,
    pub irl: IrlConfig,
    pub clustering_restarts: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub record_timing: bool,
    pub sweep: SweepConfig,
}

pub const DEFAULT_K: usize = 5;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            paper_scale: false,
            tasks: vec![0],
            n_expert_trajectories: 500,
            n_random_trajectories: 10_000,
            transitions_include_experts: true,
            transition_smoothing: 0.0,
            aer: 0.0,
            algorithm: Algorithm::Ml,
            k: None,
            merge_threshold: mirl_core::irl::DEFAULT_MERGE_THRESHOLD,
            reward_model: RewardKind::Mlp,
            hidden: mirl_core::reward::DEFAULT_HIDDEN.to_vec(),
            irl: IrlConfig::default(),
            clustering_restarts: mirl_core::baselines::DEFAULT_RESTARTS,
            seed: 0,
            out: PathBuf::from("out"),
            record_timing: false,
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(0.0..=1.0).contains(&self.aer) {
            return Err(CliError::validation(format!("aer {} outside [0, 1]", self.aer)));
        }
        if self.tasks.is_empty() {
            return Err(CliError::validation("at least one task is required"));
        }
        if self.k == Some(0) {
            return Err(CliError::validation("k must be at least 1"));
        }
        if !(self.transition_smoothing >= 0.0 && self.transition_smoothing.is_finite()) {
            return Err(CliError::validation("transition_smoothing must be finite and >= 0"));
        }
        if self.n_random_trajectories == 0 && !self.transitions_include_experts {
            return Err(CliError::validation("no trajectories left to estimate transitions from"));
        }
        if self.scenario.is_some() && self.paper_scale {
            return Err(CliError::validation("--scenario and --paper-scale are mutually exclusive"));
        }
        self.irl.validate()?;
        Ok(())
    }

    pub fn scenario_config(&self) -> CliResult<ScenarioConfig> {
        let config = match &self.scenario {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::validation(format!("cannot read scenario {}: {e}", path.display())))?;
                ScenarioConfig::from_json(&text)?
            }
            None if self.paper_scale => ScenarioConfig::paper_scale(),
            None => ScenarioConfig::downscaled(),
        };
        for &t in &self.tasks {
            config.task(t)?;
        }
        Ok(config)
    }

    /// Components fitted by the mixture trainers.
    pub fn mixture_k(&self) -> usize {
        self.k.unwrap_or(DEFAULT_K)
    }

    /// Clusters requested from the K-means and GMM baselines.
    pub fn cluster_k(&self) -> usize {
        self.k.unwrap_or(self.tasks.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = ExperimentConfig::from_json(r#"{"algorithm":"mi-ml","k":3,"tasks":[0,1,2]}"#).unwrap();
        assert_eq!(c.algorithm, Algorithm::MiMl);
        assert_eq!(c.mixture_k(), 3);
        assert_eq!(c.n_expert_trajectories, 500);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_json(r#"{"aer":1.5}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"tasks":[]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"k":0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"irl":{"discount":2.0}}"#).is_err());
    }

    #[test]
    fn unknown_task_rejected() {
        let c = ExperimentConfig { tasks: vec![7], ..Default::default() };
        assert!(c.scenario_config().is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in [Algorithm::MaxEnt, Algorithm::Ml, Algorithm::MiMaxEnt, Algorithm::MiMl, Algorithm::Kmeans, Algorithm::Gmm] {
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.name()));
        }
    }
}
