//! Central-finite-difference gradient checking helpers.
//!
//! Used throughout the test suites to validate analytic backward passes:
//! the checked loss is re-evaluated with each parameter coordinate nudged
//! up and down, and the two-sided slope is compared against the tape's
//! gradient under a mixed absolute/relative tolerance.

use crate::params::{BlockId, ParamStore};

/// Central difference d f / d store[block][i] for every coordinate of `block`.
pub fn central_diff(
    store: &mut ParamStore,
    block: BlockId,
    f: &mut dyn FnMut(&ParamStore) -> f64,
    h: f64,
) -> Vec<f64> {
    let n = store.block(block).len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let orig = store.block(block).value[i];
        store.block_mut(block).value[i] = orig + h;
        let up = f(store);
        store.block_mut(block).value[i] = orig - h;
        let down = f(store);
        store.block_mut(block).value[i] = orig;
        out[i] = (up - down) / (2.0 * h);
    }
    out
}

/// Relative error with a floor so that near-zero gradients compare absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Compares analytic gradients against central differences for the listed
/// blocks.  Returns the first failure as `(block name, coordinate, analytic,
/// finite-difference)`.
pub fn compare_blocks(
    store: &mut ParamStore,
    blocks: &[BlockId],
    analytic: &[Vec<f64>],
    f: &mut dyn FnMut(&ParamStore) -> f64,
    h: f64,
    tol: f64,
) -> Result<(), (String, usize, f64, f64)> {
    for &b in blocks {
        let fd = central_diff(store, b, f, h);
        for (i, &fdi) in fd.iter().enumerate() {
            let an = analytic[b.0][i];
            if rel_err(an, fdi) >= tol {
                return Err((store.block(b).name.clone(), i, an, fdi));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Grads;
    use crate::tape::Tape;

    #[test]
    fn quadratic_has_exact_linear_gradient() {
        let mut store = ParamStore::new();
        let x = store.add_zeros("x", 3, 1);
        store.block_mut(x).value.copy_from_slice(&[1.0, -2.0, 0.5]);

        let mut f = |s: &ParamStore| {
            let mut t = Tape::new(s);
            let xn = t.param(x);
            let d = t.dot(xn, xn);
            t.scalar(d)
        };

        let mut t = Tape::new(&store);
        let xn = t.param(x);
        let d = t.dot(xn, xn);
        let mut grads = Grads::for_store(&store);
        t.backward(d, &mut grads);

        compare_blocks(&mut store, &[x], &grads.by_block, &mut f, 1e-6, 1e-6)
            .expect("gradient of |x|^2 must be 2x");
        assert_eq!(grads.by_block[x.0], vec![2.0, -4.0, 1.0]);
    }
}
