//! Eigenpairs of the lattice Hamiltonian.
//!
//! Two independent routes: a dense symmetric decomposition for small
//! lattices and a Lanczos iteration with full reorthogonalization (plain or
//! shift-invert) for large ones. Every [`Spectrum`] leaves here with its
//! eigenvectors normalized in the lattice measure, sign-fixed so the
//! largest-magnitude component is positive, and sorted ascending.

mod banded;
mod dense;
mod lanczos;
mod tridiag;

use std::cmp::Ordering;
use std::fmt;

pub use banded::BandedLdl;
pub use dense::{dense_spectrum, dense_spectrum_with_limit, DEFAULT_DENSE_LIMIT};
pub use lanczos::{lanczos_spectrum, LanczosMode, LanczosOptions};
pub use tridiag::{tridiagonal_eigen, TridiagonalEigen, TridiagonalVectors};

use crate::error::{Error, Result};
use crate::operator::{CsrMatrix, HamiltonianOperator};

/// Relative eigenvalue gap below which two pairs count as degenerate when ordering.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// A symmetric operator together with the measure its vectors are normalized in.
pub trait SymmetricOperator: Sync {
    fn matrix(&self) -> &CsrMatrix;

    fn measure(&self) -> f64 {
        1.0
    }

    fn dim(&self) -> usize {
        self.matrix().dim()
    }
}

impl SymmetricOperator for CsrMatrix {
    fn matrix(&self) -> &CsrMatrix {
        self
    }
}

impl SymmetricOperator for HamiltonianOperator {
    fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    fn measure(&self) -> f64 {
        self.grid.cell_measure()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    Dense,
    Lanczos,
    ShiftInvertLanczos,
}

impl fmt::Display for SolverMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dense => "dense",
            Self::Lanczos => "lanczos",
            Self::ShiftInvertLanczos => "shift-invert-lanczos",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverMeta {
    pub method: SolverMethod,
    pub iterations: usize,
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub shift: Option<f64>,
    /// False when the iteration stopped before every requested pair met the tolerance.
    pub converged: bool,
    /// Krylov restarts after an invariant subspace was hit.
    pub restarts: usize,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column-major, `dim` rows, one column per eigenvalue.
    eigenvectors: Vec<f64>,
    dim: usize,
    pub residual_norms: Vec<f64>,
    pub meta: SolverMeta,
    pub measure: f64,
}

impl Spectrum {
    /// Builds a spectrum from raw pairs: normalizes in the operator measure,
    /// fixes signs, orders, and computes residuals against `op`.
    pub fn from_pairs<O: SymmetricOperator + ?Sized>(
        op: &O,
        eigenvalues: Vec<f64>,
        mut eigenvectors: Vec<f64>,
        meta: SolverMeta,
    ) -> Result<Self> {
        let dim = op.dim();
        let k = eigenvalues.len();
        if eigenvectors.len() != dim * k {
            return Err(Error::Dimension {
                expected: dim * k,
                got: eigenvectors.len(),
            });
        }
        let measure = op.measure();
        for col in eigenvectors.chunks_mut(dim.max(1)).take(k) {
            normalize_in_measure(col, measure);
            fix_sign(col);
        }
        let order = canonical_order(&eigenvalues, &eigenvectors, dim);
        let mut values = Vec::with_capacity(k);
        let mut vectors = Vec::with_capacity(dim * k);
        for &i in &order {
            values.push(eigenvalues[i]);
            vectors.extend_from_slice(&eigenvectors[i * dim..(i + 1) * dim]);
        }
        let mut spectrum = Self {
            eigenvalues: values,
            eigenvectors: vectors,
            dim,
            residual_norms: Vec::new(),
            meta,
            measure,
        };
        spectrum.residual_norms = spectrum.residuals(op.matrix());
        Ok(spectrum)
    }

    /// Reassembles a persisted spectrum without touching the operator.
    pub fn from_stored(
        eigenvalues: Vec<f64>,
        eigenvectors: Vec<f64>,
        dim: usize,
        residual_norms: Vec<f64>,
        meta: SolverMeta,
        measure: f64,
    ) -> Result<Self> {
        let k = eigenvalues.len();
        if eigenvectors.len() != dim * k {
            return Err(Error::Dimension {
                expected: dim * k,
                got: eigenvectors.len(),
            });
        }
        if residual_norms.len() != k {
            return Err(Error::Dimension {
                expected: k,
                got: residual_norms.len(),
            });
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            dim,
            residual_norms,
            meta,
            measure,
        })
    }

    pub fn empty(dim: usize, meta: SolverMeta, measure: f64) -> Self {
        Self {
            eigenvalues: Vec::new(),
            eigenvectors: Vec::new(),
            dim,
            residual_norms: Vec::new(),
            meta,
            measure,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Row count of each eigenvector.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.eigenvectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn try_vector(&self, i: usize) -> Result<&[f64]> {
        if i >= self.len() {
            return Err(Error::Index {
                index: i,
                limit: self.len(),
            });
        }
        Ok(self.vector(i))
    }

    pub fn eigenvectors_column_major(&self) -> &[f64] {
        &self.eigenvectors
    }

    pub fn ground_energy(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    /// `E_i − E_0`.
    pub fn excitation(&self, i: usize) -> f64 {
        self.eigenvalues[i] - self.eigenvalues[0]
    }

    /// `⟨a, b⟩` in the lattice measure.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.measure * dot(a, b)
    }

    fn residuals(&self, a: &CsrMatrix) -> Vec<f64> {
        let mut hv = vec![0.0; self.dim];
        (0..self.len())
            .map(|i| {
                let v = self.vector(i);
                let lambda = self.eigenvalues[i];
                a.mul_into(v, &mut hv);
                let r: f64 = hv
                    .iter()
                    .zip(v)
                    .map(|(h, x)| (h - lambda * x).powi(2))
                    .sum::<f64>()
                    .sqrt();
                r / (norm(v) * lambda.abs().max(f64::MIN_POSITIVE))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyTolerances {
    pub residual: f64,
    pub gram: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            residual: 1e-6,
            gram: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub max_gram_deviation: f64,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Recomputes residuals and the Gram matrix of `spectrum` against `op`.
pub fn verify<O: SymmetricOperator + ?Sized>(
    spectrum: &Spectrum,
    op: &O,
    tol: VerifyTolerances,
) -> VerifyReport {
    let mut failures = Vec::new();
    if spectrum.is_empty() {
        return VerifyReport {
            residuals: Vec::new(),
            max_residual: 0.0,
            max_gram_deviation: 0.0,
            failures,
        };
    }
    if spectrum.dim() != op.dim() {
        failures.push(format!(
            "spectrum dimension {} does not match operator dimension {}",
            spectrum.dim(),
            op.dim()
        ));
        return VerifyReport {
            residuals: Vec::new(),
            max_residual: f64::INFINITY,
            max_gram_deviation: f64::INFINITY,
            failures,
        };
    }
    let residuals = spectrum.residuals(op.matrix());
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    for (i, &r) in residuals.iter().enumerate() {
        if !(r <= tol.residual) {
            failures.push(format!("pair {i}: residual {r:.3e} exceeds {:.1e}", tol.residual));
        }
    }
    for i in 1..spectrum.len() {
        if spectrum.eigenvalues[i] < spectrum.eigenvalues[i - 1] {
            failures.push(format!("eigenvalue {i} is out of order"));
        }
    }
    let mut max_gram_deviation: f64 = 0.0;
    for i in 0..spectrum.len() {
        for j in 0..=i {
            let g = spectrum.inner(spectrum.vector(i), spectrum.vector(j));
            let target = if i == j { 1.0 } else { 0.0 };
            max_gram_deviation = max_gram_deviation.max((g - target).abs());
        }
    }
    if !(max_gram_deviation <= tol.gram) {
        failures.push(format!(
            "Gram deviation {max_gram_deviation:.3e} exceeds {:.1e}",
            tol.gram
        ));
    }
    VerifyReport {
        residuals,
        max_residual,
        max_gram_deviation,
        failures,
    }
}

/// Inner product with eight independent partial sums so the loop vectorizes;
/// the summation order is fixed, so results are reproducible.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize_in_measure(v: &mut [f64], measure: f64) {
    let nrm = (measure * dot(v, v)).sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
}

/// Scales `v` so its largest-magnitude component (first one on ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Ascending eigenvalue order; runs of near-degenerate values are ordered
/// by their vectors' first differing component.
fn canonical_order(values: &[f64], vectors: &[f64], dim: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let col = |i: usize| &vectors[i * dim..(i + 1) * dim];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() {
            let (lo, hi) = (values[order[end - 1]], values[order[end]]);
            if hi - lo > DEGENERACY_GAP * lo.abs().max(hi.abs()) {
                break;
            }
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| lexicographic(col(a), col(b)));
        start = end;
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> SolverMeta {
        SolverMeta {
            method: SolverMethod::Dense,
            iterations: 0,
            seed: None,
            tolerance: 0.0,
            shift: None,
            converged: true,
            restarts: 0,
        }
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
        let mut w = vec![-0.5, 0.5];
        fix_sign(&mut w);
        assert_eq!(w, vec![0.5, -0.5]);
    }

    #[test]
    fn degenerate_pairs_ordered_by_components() {
        let a = CsrMatrix::from_dense(2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let s = Spectrum::from_pairs(&a, vec![1.0, 1.0], vec![1.0, 0.0, 0.0, 1.0], meta()).unwrap();
        assert_eq!(s.vector(0), &[0.0, 1.0]);
        assert_eq!(s.vector(1), &[1.0, 0.0]);
        let t = Spectrum::from_pairs(&a, vec![1.0, 1.0], vec![0.0, 1.0, 1.0, 0.0], meta()).unwrap();
        assert_eq!(s.eigenvectors_column_major(), t.eigenvectors_column_major());
    }

    #[test]
    fn verify_empty_and_corrupted() {
        let a = CsrMatrix::from_dense(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let empty = Spectrum::empty(2, meta(), 1.0);
        let report = verify(&empty, &a, VerifyTolerances::default());
        assert!(report.passed() && report.residuals.is_empty());

        let h = 0.5f64.sqrt();
        let good = Spectrum::from_pairs(&a, vec![-1.0, 1.0], vec![h, -h, h, h], meta()).unwrap();
        assert!(verify(&good, &a, VerifyTolerances::default()).passed());

        let bad = Spectrum::from_pairs(
            &a,
            vec![-1.0, 1.0],
            vec![h + 1e-3, -h, h, h - 1e-3],
            meta(),
        )
        .unwrap();
        let report = verify(&bad, &a, VerifyTolerances::default());
        assert!(!report.passed());
        assert!(report.max_residual > 1e-6);
    }
}
