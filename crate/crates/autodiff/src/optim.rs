use serde::{Deserialize, Serialize};

use crate::{Gradients, Matrix, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global L2 gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: Some(1.0),
        }
    }
}

/// Rescales `grads` so their global norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros = || {
            store
                .values()
                .iter()
                .map(|p| Matrix::zeros(p.rows(), p.cols()))
                .collect::<Vec<_>>()
        };
        Adam {
            config,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    /// Rebuilds an optimizer from saved moments.
    pub fn from_state(config: AdamConfig, m: Vec<Matrix>, v: Vec<Matrix>, t: u64) -> Self {
        assert_eq!(m.len(), v.len(), "adam moment count");
        Adam { config, m, v, t }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> &[Matrix] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Matrix] {
        &self.v
    }

    /// Clips (if configured) and applies one update. Returns the gradient
    /// norm measured before clipping.
    pub fn step(&mut self, store: &mut ParamStore, grads: &mut Gradients) -> f64 {
        assert_eq!(store.len(), self.m.len(), "optimizer/store mismatch");
        let norm = match self.config.clip_norm {
            Some(c) => clip_grad_norm(grads, c),
            None => grads.global_norm(),
        };
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            ..
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (i, p) in store.values_mut().iter_mut().enumerate() {
            let g = grads.as_slice()[i].data();
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for (j, w) in p.data_mut().iter_mut().enumerate() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                *w -= lr * mh / (vh.sqrt() + eps);
            }
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut store = ParamStore::new();
        let id = store.add("w", Matrix::row_vector(vec![1.0, -1.0, 0.5]));
        let mut grads = Gradients::zeros_like(&store);
        grads.accumulate(id, &Matrix::row_vector(vec![0.3, -2.0, 0.0]));
        let cfg = AdamConfig {
            lr: 0.1,
            clip_norm: None,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg, &store);
        adam.step(&mut store, &mut grads);
        let w = store.get(id).data();
        assert!((w[0] - 0.9).abs() < 1e-6);
        assert!((w[1] + 0.9).abs() < 1e-6);
        assert_eq!(w[2], 0.5);
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut store = ParamStore::new();
        let id = store.add("w", Matrix::row_vector(vec![0.0, 0.0]));
        let mut grads = Gradients::zeros_like(&store);
        grads.accumulate(id, &Matrix::row_vector(vec![3.0, 4.0]));
        let before = clip_grad_norm(&mut grads, 1.0);
        assert_eq!(before, 5.0);
        assert!((grads.global_norm() - 1.0).abs() < 1e-12);
        let g = grads.get(id).data();
        assert!((g[0] - 0.6).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut store = ParamStore::new();
        let id = store.add("w", Matrix::row_vector(vec![3.0, -2.0]));
        let cfg = AdamConfig {
            lr: 0.05,
            clip_norm: Some(10.0),
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg, &store);
        let mut grads = Gradients::zeros_like(&store);
        for _ in 0..2000 {
            grads.zero();
            let g = store.get(id).map(|w| 2.0 * w);
            grads.accumulate(id, &g);
            adam.step(&mut store, &mut grads);
        }
        assert!(store.get(id).data().iter().all(|w| w.abs() < 1e-2));
    }
}
