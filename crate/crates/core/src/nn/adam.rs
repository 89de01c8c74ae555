use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments over a flat parameter vector. Minimizes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, param_count: usize) -> Self {
        Self {
            config,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of a flat parameter slice.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.check(params.len())?;
        if grads.len() != params.len() {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                actual: grads.len(),
            });
        }
        let (c1, c2) = self.advance();
        self.apply(0, params, grads, c1, c2);
        Ok(())
    }

    /// One update of every parameter of `net`, in flat-parameter order.
    pub fn step_mlp(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        self.check(net.param_count())?;
        if grads.layers.len() != net.layers().len() {
            return Err(Error::ArchitectureMismatch(
                "gradient layers differ from network".into(),
            ));
        }
        let (c1, c2) = self.advance();
        let mut offset = 0;
        for (layer, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
            for (p, g) in [
                (layer.weights.as_slice_mut(), g.weights.as_slice()),
                (layer.bias.as_slice_mut(), g.bias.as_slice()),
            ] {
                let p = p.expect("standard layout");
                let g = g.expect("standard layout");
                if p.len() != g.len() {
                    return Err(Error::DimensionMismatch {
                        expected: p.len(),
                        actual: g.len(),
                    });
                }
                self.apply(offset, p, g, c1, c2);
                offset += p.len();
            }
        }
        Ok(())
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.m.len() {
            return Err(Error::DimensionMismatch {
                expected: self.m.len(),
                actual: len,
            });
        }
        Ok(())
    }

    fn advance(&mut self) -> (f64, f64) {
        self.step += 1;
        let t = self.step as i32;
        (
            1.0 - self.config.beta1.powi(t),
            1.0 - self.config.beta2.powi(t),
        )
    }

    fn apply(&mut self, offset: usize, params: &mut [f64], grads: &[f64], c1: f64, c2: f64) {
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let m = &mut self.m[offset..offset + params.len()];
        let v = &mut self.v[offset..offset + params.len()];
        for i in 0..params.len() {
            let g = grads[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}
