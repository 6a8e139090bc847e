//! Adam with bias-corrected moments and decoupled weight decay.

use crate::error::Result;
use crate::params::{Grads, ParamStore};

#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    /// Number of steps taken so far.
    pub t: u64,
}

impl Adam {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
            t: 0,
        }
    }

    /// One update over every block.  `grad_scale` multiplies the accumulated
    /// gradients (the train loop accumulates raw sums over a batch and scales
    /// by 1/batch here).  Errors if any parameter becomes non-finite,
    /// naming the offending block.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Grads, grad_scale: f64) -> Result<()> {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (block, grad) in store.blocks_mut().iter_mut().zip(&grads.by_block) {
            for i in 0..block.value.len() {
                let g = grad[i] * grad_scale;
                block.m[i] = self.beta1 * block.m[i] + (1.0 - self.beta1) * g;
                block.v[i] = self.beta2 * block.v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = block.m[i] / bc1;
                let v_hat = block.v[i] / bc2;
                block.value[i] -= self.learning_rate
                    * (m_hat / (v_hat.sqrt() + self.epsilon) + self.weight_decay * block.value[i]);
            }
        }
        store.check_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Grads, ParamStore};

    /// Scalar step-by-step trace, kept separate from the vectorized update.
    fn scalar_adam_trace(x0: f64, grads: &[f64], lr: f64, wd: f64) -> f64 {
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let (mut x, mut m, mut v) = (x0, 0.0, 0.0);
        for (k, &g) in grads.iter().enumerate() {
            let t = (k + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            x -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * x);
        }
        x
    }

    #[test]
    fn matches_scalar_trace_without_decay() {
        let mut store = ParamStore::new();
        let id = store.add_zeros("x", 1, 1);
        store.block_mut(id).value[0] = 1.0;
        let mut opt = Adam::new(0.1, 0.0);
        let gs = [0.5, -0.3, 0.8];
        let mut grads = Grads::for_store(&store);
        for &g in &gs {
            grads.zero();
            grads.by_block[0][0] = g;
            opt.step(&mut store, &grads, 1.0).unwrap();
        }
        let expect = scalar_adam_trace(1.0, &gs, 0.1, 0.0);
        assert!((store.block(id).value[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn matches_scalar_trace_with_decoupled_decay() {
        let mut store = ParamStore::new();
        let id = store.add_zeros("x", 1, 1);
        store.block_mut(id).value[0] = -2.0;
        let mut opt = Adam::new(0.05, 0.01);
        let gs = [1.0, 1.0, -2.0, 0.25];
        let mut grads = Grads::for_store(&store);
        for &g in &gs {
            grads.zero();
            grads.by_block[0][0] = g;
            opt.step(&mut store, &grads, 1.0).unwrap();
        }
        let expect = scalar_adam_trace(-2.0, &gs, 0.05, 0.01);
        assert!((store.block(id).value[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // with bias correction, |Δx| ≈ lr on the first step for any gradient scale
        let mut store = ParamStore::new();
        let id = store.add_zeros("x", 1, 1);
        let mut opt = Adam::new(0.001, 0.0);
        let mut grads = Grads::for_store(&store);
        grads.by_block[0][0] = 1e-3;
        opt.step(&mut store, &grads, 1.0).unwrap();
        let dx = store.block(id).value[0].abs();
        assert!((dx - 0.001).abs() < 1e-8, "first-step size {dx}");
    }

    #[test]
    fn grad_scale_divides_batch_sums() {
        let mut s1 = ParamStore::new();
        let a = s1.add_zeros("x", 1, 1);
        let mut s2 = s1.clone();
        let mut g1 = Grads::for_store(&s1);
        g1.by_block[0][0] = 4.0;
        let mut g2 = Grads::for_store(&s2);
        g2.by_block[0][0] = 1.0;
        Adam::new(0.1, 0.0).step(&mut s1, &g1, 0.25).unwrap();
        Adam::new(0.1, 0.0).step(&mut s2, &g2, 1.0).unwrap();
        assert_eq!(s1.block(a).value[0], s2.block(a).value[0]);
    }

    #[test]
    fn non_finite_parameters_name_the_block() {
        let mut store = ParamStore::new();
        store.add_zeros("ok", 1, 1);
        store.add_zeros("bad", 1, 1);
        let mut grads = Grads::for_store(&store);
        grads.by_block[1][0] = f64::INFINITY;
        let err = Adam::new(0.1, 0.0).step(&mut store, &grads, 1.0).unwrap_err();
        assert!(err.to_string().contains("bad"), "{err}");
    }
}
