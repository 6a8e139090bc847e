//! One-hidden-layer MLP: `W2 · relu(W1·x + b1) + b2`.
//!
//! All the learned sub-networks (adjacency row generators, sequence and
//! scenario encoders, preference fusion) share this shape.

use crate::error::{PerscenError, Result};
use crate::params::{BlockId, ParamStore};
use crate::tape::{NodeId, Tape};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct Mlp {
    pub w1: BlockId,
    pub b1: BlockId,
    pub w2: BlockId,
    pub b2: BlockId,
    pub in_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
}

impl Mlp {
    /// Creates the four parameter blocks under `prefix` (weights uniform in
    /// ±1/sqrt(fan_in), matching the embedding/init convention elsewhere).
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let bound1 = 1.0 / (in_dim as f64).sqrt();
        let bound2 = 1.0 / (hidden as f64).sqrt();
        let w1 = store.add_uniform(&format!("{prefix}/w1"), hidden, in_dim, bound1, rng);
        let b1 = store.add_uniform(&format!("{prefix}/b1"), hidden, 1, bound1, rng);
        let w2 = store.add_uniform(&format!("{prefix}/w2"), out_dim, hidden, bound2, rng);
        let b2 = store.add_uniform(&format!("{prefix}/b2"), out_dim, 1, bound2, rng);
        Mlp { w1, b1, w2, b2, in_dim, hidden, out_dim }
    }

    pub fn forward(&self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        if tape.rows(x) != self.in_dim || tape.cols(x) != 1 {
            return Err(PerscenError::shape(
                "mlp input",
                format!("{}x1", self.in_dim),
                format!("{}x{}", tape.rows(x), tape.cols(x)),
            ));
        }
        let w1 = tape.param(self.w1);
        let b1 = tape.param(self.b1);
        let w2 = tape.param(self.w2);
        let b2 = tape.param(self.b2);
        let h = tape.matvec(w1, x);
        let h = tape.add(h, b1);
        let h = tape.relu(h);
        let y = tape.matvec(w2, h);
        Ok(tape.add(y, b2))
    }

    pub fn blocks(&self) -> [BlockId; 4] {
        [self.w1, self.b1, self.w2, self.b2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck;
    use crate::params::{Grads, ParamStore};
    use crate::rng::substream;

    /// Independent loop-based forward for cross-checking.
    fn mlp_ref(store: &ParamStore, mlp: &Mlp, x: &[f64]) -> Vec<f64> {
        let w1 = store.block(mlp.w1);
        let b1 = store.block(mlp.b1);
        let w2 = store.block(mlp.w2);
        let b2 = store.block(mlp.b2);
        let mut h = vec![0.0; mlp.hidden];
        for i in 0..mlp.hidden {
            let mut s = b1.value[i];
            for j in 0..mlp.in_dim {
                s += w1.value[i * mlp.in_dim + j] * x[j];
            }
            h[i] = s.max(0.0);
        }
        let mut y = vec![0.0; mlp.out_dim];
        for i in 0..mlp.out_dim {
            let mut s = b2.value[i];
            for j in 0..mlp.hidden {
                s += w2.value[i * mlp.hidden + j] * h[j];
            }
            y[i] = s;
        }
        y
    }

    #[test]
    fn forward_matches_reference_loops() {
        let mut store = ParamStore::new();
        let mut rng = substream(3, "test/mlp");
        let mlp = Mlp::init(&mut store, "mlp", 5, 7, 3, &mut rng);
        let x = [0.3, -1.2, 0.0, 2.0, -0.4];
        let mut t = Tape::new(&store);
        let xn = t.const_vec(&x);
        let y = mlp.forward(&mut t, xn).unwrap();
        let expect = mlp_ref(&store, &mlp, &x);
        for (a, b) in t.value(y).iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn wrong_input_dim_is_an_error() {
        let mut store = ParamStore::new();
        let mut rng = substream(3, "test/mlp");
        let mlp = Mlp::init(&mut store, "mlp", 5, 7, 3, &mut rng);
        let mut t = Tape::new(&store);
        let xn = t.const_vec(&[1.0, 2.0]);
        assert!(mlp.forward(&mut t, xn).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut store = ParamStore::new();
        let mut rng = substream(9, "test/mlp-grad");
        let mlp = Mlp::init(&mut store, "mlp", 4, 6, 2, &mut rng);
        let x = [0.5, -0.7, 1.1, 0.2];

        let run = |s: &ParamStore| -> (f64, Option<Grads>) {
            let mut t = Tape::new(s);
            let xn = t.const_vec(&x);
            let y = mlp.forward(&mut t, xn).unwrap();
            let loss = t.dot(y, y);
            (t.scalar(loss), None)
        };
        let mut f = |s: &ParamStore| run(s).0;

        let mut t = Tape::new(&store);
        let xn = t.const_vec(&x);
        let y = mlp.forward(&mut t, xn).unwrap();
        let loss = t.dot(y, y);
        let mut grads = Grads::for_store(&store);
        t.backward(loss, &mut grads);

        gradcheck::compare_blocks(&mut store, &mlp.blocks(), &grads.by_block, &mut f, 1e-6, 1e-6)
            .unwrap_or_else(|(name, i, a, fd)| {
                panic!("{name}[{i}]: analytic {a} vs finite difference {fd}")
            });
    }
}
