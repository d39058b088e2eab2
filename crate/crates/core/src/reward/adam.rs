use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam moment estimates for one parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected descent step `θ ← θ − lr·m̂/(√v̂ + ε)`. Pass the
    /// negated gradient to ascend. Nothing is modified when a gradient entry
    /// is not finite.
    pub fn apply(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        path: impl Fn(usize) -> String,
    ) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer over {} parameters got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient {} at {}",
                grads[i],
                path(i)
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut opt = AdamState::new(3, 0.1);
        let mut p = vec![1.0, -2.0, 0.5];
        opt.apply(&mut p, &[0.0; 3], |i| i.to_string()).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // step 1: m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + ε)
        for g in [0.3, 4.0, 250.0] {
            let mut opt = AdamState::new(1, 0.1);
            let mut p = vec![1.0];
            opt.apply(&mut p, &[g], |i| i.to_string()).unwrap();
            let expected = 1.0 - 0.1 * g / (g + 1e-8);
            assert!((p[0] - expected).abs() < 1e-15);
            assert!((p[0] - 0.9).abs() < 1e-8);
        }
    }

    #[test]
    fn identical_inputs_identical_updates() {
        let grads = [0.1, -0.7, 3.0];
        let run = || {
            let mut opt = AdamState::new(3, 0.01);
            let mut p = vec![0.2, 0.4, -0.1];
            for _ in 0..5 {
                opt.apply(&mut p, &grads, |i| i.to_string()).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut opt = AdamState::new(2, 0.1);
        let mut p = vec![0.0, 0.0];
        let err = opt
            .apply(&mut p, &[0.0, f64::NAN], |i| format!("w[{i}]"))
            .unwrap_err();
        assert!(err.to_string().contains("w[1]"), "{err}");
        assert_eq!(opt.step_count(), 0);
        assert_eq!(p, vec![0.0, 0.0]);
    }
}
