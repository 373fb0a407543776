//! Adaptive-moment optimizer and soft target updates.

use super::ParamVector;
use serde::{Deserialize, Serialize};

/// Optimizer settings. The defaults mirror the dynamics-model training setup
/// (learn rate 0.01, at most 100 epochs); other consumers override them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    /// Global-norm gradient clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    /// Multiplicative learning-rate decay applied once per training epoch.
    pub lr_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 100,
            grad_clip: None,
            lr_decay: 1.0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.learning_rate = lr;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.learning_rate <= 0.0 {
            return Err("learning rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err("moment decay rates must lie in [0, 1)".into());
        }
        Ok(())
    }
}

/// First/second moment accumulators with bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub cfg: OptimizerConfig,
    m: ParamVector,
    v: ParamVector,
    t: u64,
}

impl AdamState {
    pub fn new(params: &ParamVector, cfg: OptimizerConfig) -> Self {
        AdamState {
            cfg,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.cfg.learning_rate = lr;
    }

    pub fn learning_rate(&self) -> f64 {
        self.cfg.learning_rate
    }

    /// One deterministic update of `params` from `grads`.
    pub fn step(&mut self, params: &mut ParamVector, grads: &ParamVector) {
        assert!(
            params.same_layout(grads) && params.same_layout(&self.m),
            "optimizer state layout mismatch"
        );
        let scale = match self.cfg.grad_clip {
            Some(limit) => {
                let norm = grads.values().map(|g| g * g).sum::<f64>().sqrt();
                if norm > limit {
                    limit / norm
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        self.t += 1;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        let lr = self.cfg.learning_rate;
        let eps = self.cfg.epsilon;
        for idx in 0..params.len() {
            let n = params.tensor(idx).data.len();
            for k in 0..n {
                let g = grads.tensor(idx).data[k] * scale;
                let m = &mut self.m.tensor_mut(idx).data[k];
                *m = b1 * *m + (1.0 - b1) * g;
                let mhat = *m / bc1;
                let v = &mut self.v.tensor_mut(idx).data[k];
                *v = b2 * *v + (1.0 - b2) * g * g;
                let vhat = *v / bc2;
                params.tensor_mut(idx).data[k] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

/// Exponential moving average of online parameters into target parameters:
/// `target = tau * online + (1 - tau) * target`, elementwise.
pub fn soft_update(target: &mut ParamVector, online: &ParamVector, tau: f64) {
    assert!(target.same_layout(online), "soft_update layout mismatch");
    for (t, o) in target.values_mut().zip(online.values()) {
        *t = tau * o + (1.0 - tau) * *t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn scalar_params(v: f64) -> ParamVector {
        let mut p = ParamVector::new();
        p.push(
            "w",
            Tensor {
                rows: 1,
                cols: 1,
                data: vec![v],
            },
        );
        p
    }

    #[test]
    fn zero_gradient_leaves_fresh_params_unchanged() {
        let mut p = scalar_params(0.7);
        let g = p.zeros_like();
        let mut opt = AdamState::new(&p, OptimizerConfig::default());
        opt.step(&mut p, &g);
        assert_eq!(p.tensor(0).data[0], 0.7);
    }

    #[test]
    fn first_step_is_sign_scaled_learning_rate() {
        // With bias correction, step one moves by lr * g / (|g| + eps).
        let mut p = scalar_params(1.0);
        let mut g = p.zeros_like();
        g.tensor_mut(0).data[0] = 0.04;
        let cfg = OptimizerConfig {
            learning_rate: 0.01,
            ..OptimizerConfig::default()
        };
        let mut opt = AdamState::new(&p, cfg);
        opt.step(&mut p, &g);
        let expected = 1.0 - 0.01 * 0.04 / (0.04 + 1e-8);
        assert!((p.tensor(0).data[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn soft_update_endpoints() {
        let online = scalar_params(1.0);
        let mut target = scalar_params(0.0);
        soft_update(&mut target, &online, 1.0);
        assert_eq!(target.tensor(0).data[0], 1.0);
        let mut target = scalar_params(0.25);
        soft_update(&mut target, &online, 0.0);
        assert_eq!(target.tensor(0).data[0], 0.25);
    }

    #[test]
    fn soft_update_paper_rate() {
        let online = scalar_params(1.0);
        let mut target = scalar_params(0.0);
        soft_update(&mut target, &online, 0.001);
        assert!((target.tensor(0).data[0] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn grad_clip_rescales_by_global_norm() {
        let mut p = scalar_params(0.0);
        let mut g = p.zeros_like();
        g.tensor_mut(0).data[0] = 10.0;
        let cfg = OptimizerConfig {
            learning_rate: 1.0,
            grad_clip: Some(1.0),
            ..OptimizerConfig::default()
        };
        let mut opt = AdamState::new(&p, cfg);
        opt.step(&mut p, &g);
        // Clipped gradient is 1.0; first Adam step is then -lr * 1/(1+eps).
        assert!((p.tensor(0).data[0] + 1.0).abs() < 1e-6);
    }
}
