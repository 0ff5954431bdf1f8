use super::dot;
use crate::error::{Error, Result};
use crate::operator::CsrMatrix;

/// `A − σI = L D Lᵀ` for a symmetric banded `A`, without pivoting.
///
/// Row `i` of `L` stores the `bw` entries left of the diagonal contiguously.
/// The number of negative pivots equals the number of eigenvalues below `σ`.
#[derive(Debug, Clone)]
pub struct BandedLdl {
    n: usize,
    bw: usize,
    lower: Vec<f64>,
    pivots: Vec<f64>,
    shift: f64,
}

impl BandedLdl {
    pub fn factor(a: &CsrMatrix, shift: f64) -> Result<Self> {
        let n = a.dim();
        let bw = a.bandwidth();
        let mut lower = vec![0.0; n * bw];
        let mut pivots = vec![0.0; n];
        let mut row_a = vec![0.0; bw + 1];
        // t[k] = L_ik D_k for the row being factored
        let mut t = vec![0.0; bw];
        let (lo_bound, hi_bound) = a.gershgorin_bounds();
        let scale = lo_bound.abs().max(hi_bound.abs()).max(shift.abs()).max(1.0);

        for i in 0..n {
            let start = i.saturating_sub(bw);
            let off = start + bw - i;
            row_a.iter_mut().for_each(|x| *x = 0.0);
            for (j, v) in a.row(i) {
                if j <= i {
                    row_a[j + bw - i] = v;
                }
            }
            row_a[bw] -= shift;
            t.iter_mut().for_each(|x| *x = 0.0);

            for j in start..i {
                let pos = j + bw - i;
                let row_j = &lower[j * bw..(j + 1) * bw];
                // overlap of row i (from `start`) with row j (from j - bw)
                let k0 = start.max(j.saturating_sub(bw));
                let s = row_a[pos] - dot(&t[k0 + bw - i..pos], &row_j[k0 + bw - j..]);
                t[pos] = s;
                lower[i * bw + pos] = s / pivots[j];
            }
            let mut dii = row_a[bw];
            for pos in off..bw {
                dii -= t[pos] * lower[i * bw + pos];
            }
            if !(dii.abs() > 1e3 * f64::EPSILON * scale) {
                return Err(Error::Solver(format!(
                    "shift {shift} is too close to an eigenvalue (pivot {dii:.3e} at row {i})"
                )));
            }
            pivots[i] = dii;
        }
        Ok(Self {
            n,
            bw,
            lower,
            pivots,
            shift,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Count of eigenvalues of `A` strictly below the shift (Sylvester inertia).
    pub fn negative_pivots(&self) -> usize {
        self.pivots.iter().filter(|&&d| d < 0.0).count()
    }

    /// Solves `(A − σI) x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let start = i.saturating_sub(bw);
            let row = &self.lower[i * bw..(i + 1) * bw];
            x[i] -= dot(&row[start + bw - i..], &x[start..i]);
        }
        for (xi, d) in x.iter_mut().zip(&self.pivots) {
            *xi /= d;
        }
        for i in (0..n).rev() {
            let start = i.saturating_sub(bw);
            let row = &self.lower[i * bw..(i + 1) * bw];
            let xi = x[i];
            for k in start..i {
                x[k] -= row[k + bw - i] * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_2d(nx: usize, ny: usize) -> CsrMatrix {
        let n = nx * ny;
        let mut dense = vec![0.0; n * n];
        for a in 0..nx {
            for b in 0..ny {
                let i = a * ny + b;
                dense[i * n + i] = 4.0 + 0.1 * (i as f64).sin();
                if b + 1 < ny {
                    dense[i * n + i + 1] = -1.0;
                    dense[(i + 1) * n + i] = -1.0;
                }
                if a + 1 < nx {
                    dense[i * n + i + ny] = -1.0;
                    dense[(i + ny) * n + i] = -1.0;
                }
            }
        }
        CsrMatrix::from_dense(n, &dense).unwrap()
    }

    #[test]
    fn solves_shifted_system() {
        let a = laplacian_2d(6, 5);
        for shift in [-1.0, 0.3, 2.7] {
            let f = BandedLdl::factor(&a, shift).unwrap();
            let want: Vec<f64> = (0..a.dim()).map(|i| (i as f64 * 0.37).cos()).collect();
            let mut b = vec![0.0; a.dim()];
            a.mul_into(&want, &mut b);
            for (bi, wi) in b.iter_mut().zip(&want) {
                *bi -= shift * wi;
            }
            f.solve_in_place(&mut b);
            for (x, w) in b.iter().zip(&want) {
                assert!((x - w).abs() < 1e-10, "shift {shift}");
            }
        }
    }

    #[test]
    fn inertia_counts_eigenvalues_below_shift() {
        let a = laplacian_2d(5, 4);
        let dense = crate::eigen::dense_spectrum(&a).unwrap();
        for shift in [0.5, 2.0, 3.9, 6.1] {
            let below = dense.eigenvalues.iter().filter(|&&l| l < shift).count();
            let f = BandedLdl::factor(&a, shift).unwrap();
            assert_eq!(f.negative_pivots(), below, "shift {shift}");
        }
    }

    #[test]
    fn singular_shift_rejected() {
        let a = CsrMatrix::from_dense(2, &[1.0, 0.0, 0.0, 2.0]).unwrap();
        assert!(BandedLdl::factor(&a, 1.0).is_err());
    }
}
