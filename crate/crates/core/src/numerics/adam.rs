use serde::{Deserialize, Serialize};

use super::mlp::{Dense, Mlp, MlpGrads};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam moments for one network. Steps descend the gradient.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    first: Vec<Dense>,
    second: Vec<Dense>,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &Mlp) -> Self {
        let zeros = params.zero_grads().layers;
        Self {
            config,
            first: zeros.clone(),
            second: zeros,
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Restores moment estimates and the step counter.
    pub fn with_moments(mut self, first: &MlpGrads, second: &MlpGrads, t: u64) -> Result<Self> {
        Error::check_len("adam moments", self.first.len(), first.layers.len())?;
        Error::check_len("adam moments", self.second.len(), second.layers.len())?;
        self.first = first.layers.clone();
        self.second = second.layers.clone();
        self.t = t;
        Ok(self)
    }

    pub fn step(&mut self, params: &mut Mlp, grads: &MlpGrads) -> Result<()> {
        Error::check_len("adam layers", params.layers().len(), grads.layers.len())?;
        for (p, g) in params.layers().iter().zip(&grads.layers) {
            if p.weight.dim() != g.weight.dim() || p.bias.dim() != g.bias.dim() {
                return Err(Error::DimensionMismatch {
                    context: "adam gradient shape",
                    expected: p.weight.len() + p.bias.len(),
                    actual: g.weight.len() + g.bias.len(),
                });
            }
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradients".into()));
        }

        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powf(self.t as f64);
        let c2 = 1.0 - beta2.powf(self.t as f64);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((p, g), m), v) in params
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            ndarray::Zip::from(&mut p.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            ndarray::Zip::from(&mut p.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        Ok(())
    }
}
