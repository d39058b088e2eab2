use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|x| x.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
        }
    }

    /// Multiplies `grad` by the derivative, expressed through the
    /// post-activation output `h`.
    fn backprop(self, grad: &mut Array2<f64>, h: &Array2<f64>) {
        match self {
            Activation::Relu => grad.zip_mut_with(h, |g, &h| {
                if h <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Tanh => grad.zip_mut_with(h, |g, &h| *g *= 1.0 - h * h),
        }
    }
}

/// Feed-forward reward network with a scalar linear output.
///
/// Parameters are one flat vector; layer `l` stores its `in × out` weight
/// matrix row-major followed by its `out` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpRewardModel {
    layer_dims: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
    seed: u64,
}

/// Hidden-layer outputs kept between a forward and a backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    hidden: Vec<Array2<f64>>,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpRewardModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(layer_dims: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        check_dims(layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(layer_dims));
        for w in layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            activation,
            params,
            seed,
        })
    }

    pub fn from_params(
        layer_dims: &[usize],
        activation: Activation,
        params: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let model = Self {
            layer_dims: layer_dims.to_vec(),
            activation,
            params,
            seed,
        };
        model.validate()?;
        Ok(model)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        check_dims(&self.layer_dims)?;
        let expected = param_count(&self.layer_dims);
        if self.params.len() != expected {
            return Err(shape(format!(
                "{} parameters for layer dims {:?}, expected {expected}",
                self.params.len(),
                self.layer_dims
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("model parameters must be finite"));
        }
        Ok(())
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn n_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    fn offset(&self, layer: usize) -> usize {
        param_count(&self.layer_dims[..=layer])
    }

    fn weights(&self, layer: usize) -> ArrayView2<'_, f64> {
        let (i, o) = (self.layer_dims[layer], self.layer_dims[layer + 1]);
        let off = self.offset(layer);
        ArrayView2::from_shape((i, o), &self.params[off..off + i * o]).expect("layout")
    }

    fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        let (i, o) = (self.layer_dims[layer], self.layer_dims[layer + 1]);
        let off = self.offset(layer) + i * o;
        ArrayView1::from(&self.params[off..off + o])
    }

    /// Human-readable location of a flat parameter index.
    pub fn param_path(&self, index: usize) -> String {
        for layer in 0..self.n_layers() {
            let (i, o) = (self.layer_dims[layer], self.layer_dims[layer + 1]);
            let off = self.offset(layer);
            if index < off + i * o {
                let k = index - off;
                return format!("layers[{layer}].weight[{}, {}]", k / o, k % o);
            }
            if index < off + i * o + o {
                return format!("layers[{layer}].bias[{}]", index - off - i * o);
            }
        }
        format!("<out of range {index}>")
    }

    fn check_input(&self, features: &ArrayView2<f64>) -> Result<()> {
        if features.ncols() != self.input_dim() {
            return Err(shape(format!(
                "feature width {} does not match model input {}",
                features.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward_all(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
        Ok(self.forward_cached(features)?.0)
    }

    pub fn forward_cached(&self, features: ArrayView2<f64>) -> Result<(Array1<f64>, ForwardCache)> {
        self.check_input(&features)?;
        let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(self.n_layers() - 1);
        let mut out = None;
        for layer in 0..self.n_layers() {
            let input = hidden.last().map_or(features.view(), |h| h.view());
            let mut z = input.dot(&self.weights(layer));
            z += &self.bias(layer);
            if layer + 1 < self.n_layers() {
                self.activation.apply(&mut z);
                hidden.push(z);
            } else {
                out = Some(z.index_axis_move(Axis(1), 0));
            }
        }
        Ok((out.expect("at least one layer"), ForwardCache { hidden }))
    }

    /// `∂(output_grad · f(X))/∂θ` given the cache of the forward pass on `X`.
    pub fn backward_cached(
        &self,
        features: ArrayView2<f64>,
        cache: &ForwardCache,
        output_grad: ArrayView1<f64>,
    ) -> Result<Vec<f64>> {
        self.check_input(&features)?;
        if output_grad.len() != features.nrows() {
            return Err(shape(format!(
                "{} output gradients for {} rows",
                output_grad.len(),
                features.nrows()
            )));
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut dz = output_grad.to_owned().insert_axis(Axis(1));
        for layer in (0..self.n_layers()).rev() {
            let input = if layer == 0 {
                features.view()
            } else {
                cache.hidden[layer - 1].view()
            };
            let (i, o) = (self.layer_dims[layer], self.layer_dims[layer + 1]);
            let off = self.offset(layer);
            let dw = input.t().dot(&dz);
            let db = dz.sum_axis(Axis(0));
            for (dst, v) in grads[off..off + i * o + o].iter_mut().zip(dw.iter().chain(db.iter())) {
                *dst = *v;
            }
            if layer > 0 {
                let mut dh = dz.dot(&self.weights(layer).t());
                self.activation.backprop(&mut dh, &cache.hidden[layer - 1]);
                dz = dh;
            }
        }
        Ok(grads)
    }

    pub fn backward_accumulate(
        &self,
        features: ArrayView2<f64>,
        output_grad: ArrayView1<f64>,
    ) -> Result<Vec<f64>> {
        let (_, cache) = self.forward_cached(features.view())?;
        self.backward_cached(features, &cache, output_grad)
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(invalid(format!("invalid layer dims {dims:?}")));
    }
    if *dims.last().expect("non-empty") != 1 {
        return Err(invalid(format!("reward network must end in one output, got {dims:?}")));
    }
    Ok(())
}

/// `R = w · x`, no bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRewardModel {
    weights: Vec<f64>,
}

impl LinearRewardModel {
    pub fn zeros(input_dim: usize) -> Self {
        Self {
            weights: vec![0.0; input_dim],
        }
    }

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let model = Self { weights };
        model.validate()?;
        Ok(model)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(invalid("linear model needs at least one weight"));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("model parameters must be finite"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.weights
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn check_input(&self, features: &ArrayView2<f64>) -> Result<()> {
        if features.ncols() != self.input_dim() {
            return Err(shape(format!(
                "feature width {} does not match model input {}",
                features.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward_all(&self, features: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.check_input(&features)?;
        Ok(features.dot(&ArrayView1::from(&self.weights)))
    }

    pub fn backward_accumulate(
        &self,
        features: ArrayView2<f64>,
        output_grad: ArrayView1<f64>,
    ) -> Result<Vec<f64>> {
        self.check_input(&features)?;
        if output_grad.len() != features.nrows() {
            return Err(shape(format!(
                "{} output gradients for {} rows",
                output_grad.len(),
                features.nrows()
            )));
        }
        Ok(features.t().dot(&output_grad).to_vec())
    }
}
