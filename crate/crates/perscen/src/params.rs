//! Named parameter storage.
//!
//! Every learnable array lives in a [`ParamStore`] block together with a
//! gradient slot and the two Adam moment slots.  Blocks are created in a
//! fixed order at model build time; that order is the checkpoint layout.

use crate::error::{PerscenError, Result};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone)]
pub struct ParamBlock {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl ParamBlock {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.value[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    blocks: Vec<ParamBlock>,
}

/// Per-block gradient accumulators, aligned with a store's block list.
#[derive(Debug, Clone, Default)]
pub struct Grads {
    pub by_block: Vec<Vec<f64>>,
}

impl Grads {
    pub fn for_store(store: &ParamStore) -> Self {
        Grads {
            by_block: store.blocks.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn zero(&mut self) {
        for g in &mut self.by_block {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a block filled with zeros.
    pub fn add_zeros(&mut self, name: &str, rows: usize, cols: usize) -> BlockId {
        self.push(name, rows, cols, vec![0.0; rows * cols])
    }

    /// Adds a block drawn uniformly from [-bound, +bound].
    pub fn add_uniform(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        bound: f64,
        rng: &mut impl Rng,
    ) -> BlockId {
        let value = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
        self.push(name, rows, cols, value)
    }

    /// Adds a block drawn from N(0, std^2).
    pub fn add_normal(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        std: f64,
        rng: &mut impl Rng,
    ) -> BlockId {
        let value = (0..rows * cols)
            .map(|_| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                z * std
            })
            .collect();
        self.push(name, rows, cols, value)
    }

    fn push(&mut self, name: &str, rows: usize, cols: usize, value: Vec<f64>) -> BlockId {
        assert!(rows > 0 && cols > 0, "empty parameter block '{name}'");
        assert!(
            self.blocks.iter().all(|b| b.name != name),
            "duplicate parameter block '{name}'"
        );
        let n = rows * cols;
        self.blocks.push(ParamBlock {
            name: name.to_string(),
            rows,
            cols,
            value,
            m: vec![0.0; n],
            v: vec![0.0; n],
        });
        BlockId(self.blocks.len() - 1)
    }

    pub fn block(&self, id: BlockId) -> &ParamBlock {
        &self.blocks[id.0]
    }

    pub fn block_mut(&mut self, id: BlockId) -> &mut ParamBlock {
        &mut self.blocks[id.0]
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [ParamBlock] {
        &mut self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn by_name(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn id_by_name(&self, name: &str) -> Option<BlockId> {
        self.blocks.iter().position(|b| b.name == name).map(BlockId)
    }

    pub fn param_count(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    /// First block containing a non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<&str> {
        self.blocks
            .iter()
            .find(|b| b.value.iter().any(|x| !x.is_finite()))
            .map(|b| b.name.as_str())
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.first_non_finite() {
            Some(name) => Err(PerscenError::NonFinite(name.to_string())),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn blocks_have_grad_and_moment_slots() {
        let mut store = ParamStore::new();
        let id = store.add_zeros("w", 3, 4);
        let b = store.block(id);
        assert_eq!(b.len(), 12);
        assert_eq!(b.m.len(), 12);
        assert_eq!(b.v.len(), 12);
        let grads = Grads::for_store(&store);
        assert_eq!(grads.by_block[0].len(), 12);
    }

    #[test]
    fn uniform_respects_bound() {
        let mut rng = substream(1, "test");
        let mut store = ParamStore::new();
        let id = store.add_uniform("w", 10, 10, 0.25, &mut rng);
        assert!(store.block(id).value.iter().all(|x| x.abs() <= 0.25));
    }

    #[test]
    #[should_panic(expected = "duplicate parameter block")]
    fn duplicate_names_rejected() {
        let mut store = ParamStore::new();
        store.add_zeros("w", 1, 1);
        store.add_zeros("w", 1, 1);
    }

    #[test]
    fn non_finite_detection_names_first_block() {
        let mut store = ParamStore::new();
        store.add_zeros("a", 2, 2);
        let id = store.add_zeros("b", 2, 2);
        store.block_mut(id).value[3] = f64::NAN;
        assert_eq!(store.first_non_finite(), Some("b"));
    }
}
