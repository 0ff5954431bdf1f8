use faer::{Mat, Side};

use super::{SolverMeta, SolverMethod, Spectrum, SymmetricOperator};
use crate::error::{Error, Result};

pub const DEFAULT_DENSE_LIMIT: usize = 6000;

pub fn dense_spectrum<O: SymmetricOperator + ?Sized>(op: &O) -> Result<Spectrum> {
    dense_spectrum_with_limit(op, DEFAULT_DENSE_LIMIT)
}

/// Full decomposition through a dense symmetric eigensolver.
pub fn dense_spectrum_with_limit<O: SymmetricOperator + ?Sized>(
    op: &O,
    limit: usize,
) -> Result<Spectrum> {
    let n = op.dim();
    if n > limit {
        return Err(Error::Solver(format!(
            "dimension {n} exceeds the dense limit {limit}; use the Lanczos solver"
        )));
    }
    let a = op.matrix();
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, v) in a.row(i) {
            m[(i, j)] = v;
        }
    }
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("dense eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for j in 0..n {
        vectors.extend((0..n).map(|i| u[(i, j)]));
    }
    let meta = SolverMeta {
        method: SolverMethod::Dense,
        iterations: 0,
        seed: None,
        tolerance: 0.0,
        shift: None,
        converged: true,
        restarts: 0,
    };
    Spectrum::from_pairs(op, values, vectors, meta)
}
