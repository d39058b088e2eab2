//! Reward models `R(s, a, s' | θ)` evaluated in batch over encoded triples.

mod adam;
mod mlp;

use std::fs;
use std::path::Path;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mdp::TripleSet;

pub use adam::AdamState;
pub use mlp::{Activation, ForwardCache, LinearRewardModel, MlpRewardModel};

/// Hidden layout used when none is configured.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

/// Tag written into every model checkpoint.
pub const CHECKPOINT_FORMAT: &str = "mirl-reward-model/v1";

/// Encodes `(s, a, s')` triples as rows of a feature matrix.
pub trait FeatureMap {
    fn feature_dim(&self) -> usize;
    /// One row per triple of `set`, in set order.
    fn features(&self, set: &TripleSet) -> ndarray::Array2<f64>;
}

/// `[one-hot s, one-hot a, one-hot s']`.
#[derive(Clone, Copy, Debug)]
pub struct OneHotFeatures {
    pub n_states: usize,
    pub n_actions: usize,
}

impl FeatureMap for OneHotFeatures {
    fn feature_dim(&self) -> usize {
        2 * self.n_states + self.n_actions
    }

    fn features(&self, set: &TripleSet) -> ndarray::Array2<f64> {
        let mut out = ndarray::Array2::zeros((set.len(), self.feature_dim()));
        for (mut row, (s, a, s2)) in out.rows_mut().into_iter().zip(set.iter()) {
            row[s] = 1.0;
            row[self.n_states + a] = 1.0;
            row[self.n_states + self.n_actions + s2] = 1.0;
        }
        out
    }
}

/// Either reward model family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RewardModel {
    Linear(LinearRewardModel),
    Mlp(MlpRewardModel),
}

/// Activations retained for the backward pass.
#[derive(Clone, Debug)]
pub enum Cache {
    Linear,
    Mlp(ForwardCache),
}

impl RewardModel {
    /// `input_dim → hidden… → 1` network with Glorot-uniform weights.
    pub fn mlp(input_dim: usize, hidden: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(hidden);
        dims.push(1);
        Ok(Self::Mlp(MlpRewardModel::init(&dims, activation, seed)?))
    }

    pub fn linear(input_dim: usize) -> Self {
        Self::Linear(LinearRewardModel::zeros(input_dim))
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Linear(m) => m.input_dim(),
            Self::Mlp(m) => m.input_dim(),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Self::Linear(m) => m.params(),
            Self::Mlp(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Self::Linear(m) => m.params_mut(),
            Self::Mlp(m) => m.params_mut(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.params().len()
    }

    pub fn param_path(&self, index: usize) -> String {
        match self {
            Self::Linear(_) => format!("weights[{index}]"),
            Self::Mlp(m) => m.param_path(index),
        }
    }

    pub fn forward_all(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
        match self {
            Self::Linear(m) => m.forward_all(features),
            Self::Mlp(m) => m.forward_all(features),
        }
    }

    pub fn forward_cached(&self, features: ArrayView2<f64>) -> Result<(Array1<f64>, Cache)> {
        match self {
            Self::Linear(m) => Ok((m.forward_all(features)?, Cache::Linear)),
            Self::Mlp(m) => {
                let (out, cache) = m.forward_cached(features)?;
                Ok((out, Cache::Mlp(cache)))
            }
        }
    }

    pub fn backward_cached(
        &self,
        features: ArrayView2<f64>,
        cache: &Cache,
        output_grad: ArrayView1<f64>,
    ) -> Result<Vec<f64>> {
        match (self, cache) {
            (Self::Linear(m), _) => m.backward_accumulate(features, output_grad),
            (Self::Mlp(m), Cache::Mlp(c)) => m.backward_cached(features, c, output_grad),
            (Self::Mlp(m), Cache::Linear) => m.backward_accumulate(features, output_grad),
        }
    }

    /// Reverse-mode gradient of `output_grad · R(features)` w.r.t. the parameters.
    pub fn backward_accumulate(
        &self,
        features: ArrayView2<f64>,
        output_grad: ArrayView1<f64>,
    ) -> Result<Vec<f64>> {
        match self {
            Self::Linear(m) => m.backward_accumulate(features, output_grad),
            Self::Mlp(m) => m.backward_accumulate(features, output_grad),
        }
    }

    /// Adam descent step on `grads`.
    pub fn apply_update(&mut self, grads: &[f64], opt: &mut AdamState) -> Result<()> {
        let paths = self.clone();
        opt.apply(self.params_mut(), grads, |i| paths.param_path(i))
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Linear(m) => m.validate(),
            Self::Mlp(m) => m.validate(),
        }
    }

    pub fn to_checkpoint_json(&self) -> String {
        let ckpt = Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            model: self.clone(),
        };
        serde_json::to_string_pretty(&ckpt).expect("models serialize")
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(invalid(format!("unsupported checkpoint format {:?}", ckpt.format)));
        }
        ckpt.model.validate()?;
        Ok(ckpt.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_checkpoint_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint_json(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format: String,
    model: RewardModel,
}
