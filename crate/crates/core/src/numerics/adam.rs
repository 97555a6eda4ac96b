use alloc::format;
use alloc::vec::Vec;

use super::DenseMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 8e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam moments for an ordered list of parameter blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
    t: u64,
}

impl AdamState {
    /// Zero moments shaped like `params`.
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a DenseMatrix>) -> Self {
        let m: Vec<DenseMatrix> =
            params.into_iter().map(|p| DenseMatrix::zeros(p.rows(), p.cols())).collect();
        AdamState { config, v: m.clone(), m, t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> &[DenseMatrix] {
        &self.m
    }

    pub fn second_moments(&self) -> &[DenseMatrix] {
        &self.v
    }

    /// One Adam update with bias correction. All gradients are validated
    /// before any parameter changes.
    pub fn step(&mut self, params: &mut [&mut DenseMatrix], grads: &[DenseMatrix]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Config(format!(
                "adam: {} moment blocks, {} parameter blocks, {} gradient blocks",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (block, ((p, g), m)) in params.iter().zip(grads).zip(&self.m).enumerate() {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::Shape { op: "adam_step", left: p.shape(), right: g.shape() });
            }
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient { block });
            }
        }

        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.t += 1;
        let bias1 = 1.0 - libm::pow(beta1, self.t as f64);
        let bias2 = 1.0 - libm::pow(beta2, self.t as f64);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(&mut self.v)) {
            let iter = p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()));
            for ((theta, &grad), (m, v)) in iter {
                *m = beta1 * *m + (1.0 - beta1) * grad;
                *v = beta2 * *v + (1.0 - beta2) * grad * grad;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *theta -= lr * m_hat / (libm::sqrt(v_hat) + eps);
            }
        }
        Ok(())
    }
}
