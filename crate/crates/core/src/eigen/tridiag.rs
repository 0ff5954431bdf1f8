//! Implicit QL iteration for symmetric tridiagonal matrices (the EISPACK
//! `tql2` scheme). Rotations act on each eigenvector row independently, so
//! the Lanczos convergence test can track just the bottom row in O(m²).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TridiagonalVectors {
    None,
    /// Only the last component of every eigenvector.
    LastRow,
    Full,
}

#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column-major, `rows` entries per eigenvector.
    pub vectors: Vec<f64>,
    pub rows: usize,
}

impl TridiagonalEigen {
    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.rows..(j + 1) * self.rows]
    }
}

/// Eigen-decomposes the tridiagonal matrix with diagonal `diag` and
/// sub/super-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigen(
    diag: &[f64],
    off: &[f64],
    want: TridiagonalVectors,
) -> Result<TridiagonalEigen> {
    let n = diag.len();
    if n == 0 {
        return Ok(TridiagonalEigen {
            values: Vec::new(),
            vectors: Vec::new(),
            rows: 0,
        });
    }
    if off.len() + 1 != n {
        return Err(Error::Dimension {
            expected: n - 1,
            got: off.len(),
        });
    }
    let tracked: Vec<usize> = match want {
        TridiagonalVectors::None => Vec::new(),
        TridiagonalVectors::LastRow => vec![n - 1],
        TridiagonalVectors::Full => (0..n).collect(),
    };
    let nt = tracked.len();
    let mut z = vec![0.0; nt * n];
    for (t, &row) in tracked.iter().enumerate() {
        z[row * nt + t] = 1.0;
    }

    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let max_sweeps = 60 * n.max(1);
    let mut sweeps = 0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(Error::Solver("tridiagonal QL iteration did not converge".into()));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if nt > 0 {
                        let (left, right) = z.split_at_mut((i + 1) * nt);
                        let zi = &mut left[i * nt..];
                        let zi1 = &mut right[..nt];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hb = *b;
                            *b = s * *a + c * hb;
                            *a = c * *a - s * hb;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Vec::with_capacity(nt * n);
    for &i in &order {
        vectors.extend_from_slice(&z[i * nt..(i + 1) * nt]);
    }
    Ok(TridiagonalEigen {
        values,
        vectors,
        rows: nt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn second_difference_spectrum() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2cos(kπ/(n+1))
        let n = 40;
        let t = tridiagonal_eigen(&vec![2.0; n], &vec![-1.0; n - 1], TridiagonalVectors::None)
            .unwrap();
        for (k, v) in t.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn vectors_are_eigenvectors_and_last_row_matches() {
        let n = 25;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 1.0 + (i as f64 * 1.3).cos() * 0.5).collect();
        let full = tridiagonal_eigen(&diag, &off, TridiagonalVectors::Full).unwrap();
        let last = tridiagonal_eigen(&diag, &off, TridiagonalVectors::LastRow).unwrap();
        for j in 0..n {
            let v = full.vector(j);
            let lam = full.values[j];
            for i in 0..n {
                let mut tv = diag[i] * v[i];
                if i > 0 {
                    tv += off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    tv += off[i] * v[i + 1];
                }
                assert!((tv - lam * v[i]).abs() < 1e-12);
            }
            assert_eq!(last.values[j], full.values[j]);
            assert!((last.vector(j)[0] - v[n - 1]).abs() < 1e-14);
            let nrm: f64 = v.iter().map(|x| x * x).sum();
            assert!((nrm - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn one_by_one_and_split() {
        let t = tridiagonal_eigen(&[4.0], &[], TridiagonalVectors::Full).unwrap();
        assert_eq!(t.values, vec![4.0]);
        assert_eq!(t.vectors, vec![1.0]);
        // a zero coupling decouples the blocks
        let t = tridiagonal_eigen(&[1.0, 3.0, 2.0], &[0.0, 0.0], TridiagonalVectors::None).unwrap();
        assert_eq!(t.values, vec![1.0, 2.0, 3.0]);
    }
}
