//! Lanczos iteration with full (classical Gram–Schmidt, iterated when needed)
//! reorthogonalization of the Krylov basis.
//!
//! In shift-invert mode the iteration runs on `(H − σI)⁻¹`, applied through a
//! banded `LDLᵀ` factorization, so eigenvalues nearest `σ` converge first.
//! [`LanczosMode::ShiftInvertLowest`] picks `σ` just below the spectrum and
//! confirms through the factorization's inertia that nothing lies beneath it.

use faer::linalg::matmul::matmul;
use faer::{Accum, MatMut, MatRef, Par};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::banded::BandedLdl;
use super::tridiag::{tridiagonal_eigen, TridiagonalVectors};
use super::{dot, norm, SolverMeta, SolverMethod, Spectrum, SymmetricOperator};
use crate::error::{Error, Result};
use crate::operator::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LanczosMode {
    /// Plain iteration on `H`; returns the `k` lowest pairs.
    Standard,
    /// Iteration on `(H − σI)⁻¹`; returns the `k` pairs nearest `σ`.
    ShiftInvert { sigma: f64 },
    /// Shift-invert with an automatic shift below the lowest eigenvalue.
    ShiftInvertLowest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    pub max_iter: usize,
    /// Relative Ritz residual required of every requested pair.
    pub tol: f64,
    pub seed: u64,
    pub mode: LanczosMode,
    /// Steps between convergence checks once the basis holds `k` vectors.
    pub check_interval: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iter: 4000,
            tol: 1e-12,
            seed: 42,
            mode: LanczosMode::ShiftInvertLowest,
            check_interval: 25,
        }
    }
}

pub fn lanczos_spectrum<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    opts: &LanczosOptions,
) -> Result<Spectrum> {
    let n = op.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "requested {k} eigenpairs; need 1 <= k < {n}"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("Lanczos tolerance must be positive".into()));
    }
    let a = op.matrix();
    match opts.mode {
        LanczosMode::Standard => {
            let run = krylov(n, k, opts, Target::Lowest, |x, y| a.mul_into(x, y))?;
            finish(op, run, k, opts, SolverMethod::Lanczos, None, |theta| theta)
        }
        LanczosMode::ShiftInvert { sigma } => {
            let ldl = BandedLdl::factor(a, sigma)?;
            shift_invert(op, &ldl, k, opts)
        }
        LanczosMode::ShiftInvertLowest => {
            let ldl = lowest_shift(a, opts.seed)?;
            shift_invert(op, &ldl, k, opts)
        }
    }
}

fn shift_invert<O: SymmetricOperator + ?Sized>(
    op: &O,
    ldl: &BandedLdl,
    k: usize,
    opts: &LanczosOptions,
) -> Result<Spectrum> {
    let sigma = ldl.shift();
    let run = krylov(op.dim(), k, opts, Target::LargestMagnitude, |x, y| {
        y.copy_from_slice(x);
        ldl.solve_in_place(y);
    })?;
    finish(
        op,
        run,
        k,
        opts,
        SolverMethod::ShiftInvertLanczos,
        Some(sigma),
        |theta| sigma + 1.0 / theta,
    )
}

/// Finds a shift with no eigenvalue beneath it, close to the bottom of the spectrum.
fn lowest_shift(a: &CsrMatrix, seed: u64) -> Result<BandedLdl> {
    let n = a.dim();
    let (g_lo, g_hi) = a.gershgorin_bounds();
    let probe = LanczosOptions {
        max_iter: 60.min(n),
        tol: 1e-6,
        seed,
        mode: LanczosMode::Standard,
        check_interval: 60,
    };
    // the lowest Ritz value is an upper bound on the lowest eigenvalue
    let run = krylov(n, 1, &probe, Target::Lowest, |x, y| a.mul_into(x, y))?;
    let estimate = run.ritz_values.first().copied().unwrap_or(g_lo).max(g_lo);
    let mut gap = 1e-2 * (g_hi - g_lo).max(f64::MIN_POSITIVE);
    gap = gap.min(0.1 * estimate.abs().max(1.0));
    loop {
        let sigma = (estimate - gap).max(g_lo - gap);
        match BandedLdl::factor(a, sigma) {
            Ok(ldl) if ldl.negative_pivots() == 0 => return Ok(ldl),
            Ok(_) | Err(_) if sigma > g_lo - gap => gap *= 2.0,
            Ok(_) => {
                return Err(Error::Solver(
                    "could not place a shift below the spectrum".into(),
                ))
            }
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Target {
    Lowest,
    LargestMagnitude,
}

struct KrylovRun {
    /// Krylov vectors stored contiguously, column-major with `n` rows.
    basis: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Ritz values of the requested set, in selection order.
    ritz_values: Vec<f64>,
    converged: bool,
    restarts: usize,
}

/// Indices (into the ascending Ritz list) of the wanted values.
fn select(values: &[f64], k: usize, target: Target) -> Vec<usize> {
    let m = values.len();
    let k = k.min(m);
    match target {
        Target::Lowest => (0..k).collect(),
        Target::LargestMagnitude => {
            let mut idx: Vec<usize> = (0..m).collect();
            idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
            idx.truncate(k);
            idx
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nrm = norm(&v);
    v.iter_mut().for_each(|x| *x /= nrm);
    v
}

/// Classical Gram–Schmidt against every basis vector, repeated once when the
/// first pass cancels most of `w` (Daniel–Gragg–Kaufman–Stewart criterion).
fn reorthogonalize(basis: &[f64], n: usize, w: &mut [f64]) {
    let m = basis.len() / n;
    let v = MatRef::from_column_major_slice(basis, n, m);
    let mut c = vec![0.0; m];
    for pass in 0..2 {
        let before = norm(w);
        matmul(
            MatMut::from_column_major_slice_mut(&mut c, m, 1),
            Accum::Replace,
            v.transpose(),
            MatRef::from_column_major_slice(w, n, 1),
            1.0,
            Par::Seq,
        );
        matmul(
            MatMut::from_column_major_slice_mut(w, n, 1),
            Accum::Add,
            v,
            MatRef::from_column_major_slice(&c, m, 1),
            -1.0,
            Par::Seq,
        );
        if pass == 0 && norm(w) > std::f64::consts::FRAC_1_SQRT_2 * before {
            break;
        }
    }
}

fn krylov<F>(n: usize, k: usize, opts: &LanczosOptions, target: Target, apply: F) -> Result<KrylovRun>
where
    F: Fn(&[f64], &mut [f64]),
{
    let limit = opts.max_iter.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = random_unit(&mut rng, n);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut restarts = 0;
    let mut scale: f64 = 0.0;
    let mut next_check = k.max(1);

    loop {
        let j = basis.len() / n - 1;
        let v_j = &basis[j * n..(j + 1) * n];
        apply(v_j, &mut w);
        let a_j = dot(v_j, &w);
        for (wi, vi) in w.iter_mut().zip(v_j) {
            *wi -= a_j * vi;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[(j - 1) * n..j * n]) {
                *wi -= b * vi;
            }
        }
        reorthogonalize(&basis, n, &mut w);
        alpha.push(a_j);
        let b_j = norm(&w);
        scale = scale.max(a_j.abs() + b_j);
        let m = alpha.len();

        let exhausted = m >= limit;
        if m >= next_check || exhausted {
            next_check = m + opts.check_interval.max(1);
            let tri = tridiagonal_eigen(&alpha, &beta, TridiagonalVectors::LastRow)?;
            let wanted = select(&tri.values, k, target);
            let floor = 1e-8 * scale;
            let all_converged = wanted.len() == k
                && wanted.iter().all(|&i| {
                    let theta = tri.values[i];
                    (b_j * tri.vector(i)[0]).abs() <= opts.tol * theta.abs().max(floor)
                });
            if all_converged || exhausted {
                let ritz_values = wanted.iter().map(|&i| tri.values[i]).collect();
                return Ok(KrylovRun {
                    basis,
                    alpha,
                    beta,
                    ritz_values,
                    converged: all_converged,
                    restarts,
                });
            }
        }

        if b_j <= 1e-12 * scale {
            // invariant subspace: continue from a fresh direction orthogonal to it
            let mut v = random_unit(&mut rng, n);
            reorthogonalize(&basis, n, &mut v);
            let nrm = norm(&v);
            if nrm <= 1e-8 {
                return Err(Error::Solver("Lanczos restart vector collapsed".into()));
            }
            v.iter_mut().for_each(|x| *x /= nrm);
            beta.push(0.0);
            basis.extend_from_slice(&v);
            restarts += 1;
        } else {
            beta.push(b_j);
            basis.extend(w.iter().map(|x| x / b_j));
        }
    }
}

fn finish<O, G>(
    op: &O,
    run: KrylovRun,
    k: usize,
    opts: &LanczosOptions,
    method: SolverMethod,
    shift: Option<f64>,
    to_eigenvalue: G,
) -> Result<Spectrum>
where
    O: SymmetricOperator + ?Sized,
    G: Fn(f64) -> f64,
{
    let n = op.dim();
    let m = run.alpha.len();
    let tri = tridiagonal_eigen(&run.alpha, &run.beta[..m - 1], TridiagonalVectors::Full)?;
    let target = if shift.is_some() {
        Target::LargestMagnitude
    } else {
        Target::Lowest
    };
    let wanted = select(&tri.values, k, target);
    let values = wanted.iter().map(|&i| to_eigenvalue(tri.values[i])).collect();
    let mut coeffs = Vec::with_capacity(m * wanted.len());
    for &i in &wanted {
        coeffs.extend_from_slice(tri.vector(i));
    }
    let mut vectors = vec![0.0; n * wanted.len()];
    matmul(
        MatMut::from_column_major_slice_mut(&mut vectors, n, wanted.len()),
        Accum::Replace,
        MatRef::from_column_major_slice(&run.basis, n, m),
        MatRef::from_column_major_slice(&coeffs, m, wanted.len()),
        1.0,
        Par::Seq,
    );
    let meta = SolverMeta {
        method,
        iterations: m,
        seed: Some(opts.seed),
        tolerance: opts.tol,
        shift,
        converged: run.converged,
        restarts: run.restarts,
    };
    Spectrum::from_pairs(op, values, vectors, meta)
}
