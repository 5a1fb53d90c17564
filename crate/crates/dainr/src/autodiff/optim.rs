//! AdamW with decoupled weight decay.

use super::Tensor;
use crate::{real, Error, Real, Result};

/// Hyperparameters for [`AdamW`].
#[derive(Clone, Copy, Debug)]
pub struct AdamWConfig<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub weight_decay: T,
}

impl<T: Real> Default for AdamWConfig<T> {
    fn default() -> Self {
        Self {
            lr: real(1e-3),
            beta1: real(0.9),
            beta2: real(0.999),
            eps: real(1e-8),
            weight_decay: T::zero(),
        }
    }
}

impl<T: Real> AdamWConfig<T> {
    pub fn with_lr(lr: T) -> Self {
        Self { lr, ..Self::default() }
    }
}

/// Adam with bias-corrected moments and weight decay applied directly to the
/// parameters rather than folded into the gradient.
pub struct AdamW<T: Real> {
    config: AdamWConfig<T>,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> AdamW<T> {
    /// Moment buffers are allocated to match `params` and start at zero.
    pub fn new(config: AdamWConfig<T>, params: &[&Tensor<T>]) -> Self {
        Self {
            config,
            step: 0,
            m: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
        }
    }

    pub fn config(&self) -> &AdamWConfig<T> {
        &self.config
    }

    /// Number of successfully applied steps.
    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Apply one update. Every gradient is checked for finiteness before any
    /// parameter or moment is touched, so a rejected step leaves the
    /// optimizer state exactly as it was.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>], grads: &[Tensor<T>]) -> Result<()> {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        for (index, g) in grads.iter().enumerate() {
            if !g.all_finite() {
                return Err(Error::NonFiniteGradient { index });
            }
        }

        let t = self.step + 1;
        let c = self.config;
        let bc1 = T::one() - c.beta1.powi(t as i32);
        let bc2 = T::one() - c.beta2.powi(t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert_eq!(p.len(), g.len(), "gradient shape mismatch");
            let theta = p.data_mut();
            for i in 0..theta.len() {
                let gi = g.data()[i];
                m[i] = c.beta1 * m[i] + (T::one() - c.beta1) * gi;
                v[i] = c.beta2 * v[i] + (T::one() - c.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                theta[i] = theta[i]
                    - c.lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * theta[i]);
            }
        }
        self.step = t;
        Ok(())
    }
}
