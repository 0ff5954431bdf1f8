//! Discrete Hamiltonian on the `(R, ρ, cos θ)` lattice.
//!
//! The light-particle wave function is carried as `u = ρΨ`, which turns the
//! radial part of the spherical Laplacian into a plain second difference
//! and gives a matrix that is symmetric in the flat lattice measure. The
//! angular block is the flux form of `∂ₓ((1−x²)∂ₓ)` with face values of
//! `1−x²`, scaled by `1/ρ²` at the node. Only the `l = 0` sector is built.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::{coulomb_at, diamagnetic_at, PotentialParams};

/// Default heavy kinetic factor: the operator carries `−8μ ∂²/∂R²`.
pub const DEFAULT_HEAVY_FACTOR: f64 = 8.0;

/// Row-compressed symmetric matrix with both triangles stored and columns
/// ascending within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Gershgorin interval enclosing the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    diag = v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }

    /// `y = A x`, each row summed in column order.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().with_min_len(512).enumerate().for_each(|(i, yi)| {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut acc = 0.0;
            for (&j, &v) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
                acc += v * x[j];
            }
            *yi = acc;
        });
    }

    pub fn to_dense_column_major(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[j * self.n + i] = v;
            }
        }
        a
    }

    pub fn from_dense(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: entries.len(),
            });
        }
        let mut rows = RowBuilder::new(n);
        for i in 0..n {
            for j in 0..n {
                let v = entries[i * n + j];
                if v != 0.0 {
                    rows.push(i, j, v);
                }
            }
        }
        Ok(rows.finish())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i).to_bits() == v.to_bits()))
    }
}

struct RowBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    current: usize,
}

impl RowBuilder {
    fn new(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
            current: 0,
        }
    }

    /// Entries must arrive row by row with ascending columns.
    fn push(&mut self, i: usize, j: usize, v: f64) {
        while self.current < i {
            self.row_ptr.push(self.cols.len());
            self.current += 1;
        }
        self.cols.push(j);
        self.vals.push(v);
    }

    fn finish(mut self) -> CsrMatrix {
        while self.row_ptr.len() <= self.n {
            self.row_ptr.push(self.cols.len());
        }
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    pub matrix: CsrMatrix,
    pub grid: Grid,
    pub potential: PotentialParams,
    pub mu: f64,
    /// Coefficient multiplying `∂²/∂R²` (negative).
    pub heavy_kinetic_coeff: f64,
}

/// Assemble with the default heavy kinetic term `−8μ ∂²/∂R²`.
pub fn assemble(grid: &Grid, p: &PotentialParams, mu: f64) -> Result<HamiltonianOperator> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!("mass ratio must be positive, got {mu}")));
    }
    assemble_with_coeff(grid, p, mu, -DEFAULT_HEAVY_FACTOR * mu)
}

/// Assemble with an explicit coefficient `c` for the heavy term `c ∂²/∂R²`.
pub fn assemble_with_coeff(
    grid: &Grid,
    p: &PotentialParams,
    mu: f64,
    heavy_kinetic_coeff: f64,
) -> Result<HamiltonianOperator> {
    p.validate()?;
    if !(heavy_kinetic_coeff < 0.0 && heavy_kinetic_coeff.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "heavy kinetic coefficient must be negative, got {heavy_kinetic_coeff}"
        )));
    }
    let (n_r, n_rho, n_x) = (grid.n_r(), grid.n_rho(), grid.n_theta());
    let heavy = -heavy_kinetic_coeff / (grid.dr * grid.dr);
    let radial = 1.0 / (grid.drho * grid.drho);
    let inv_dx2 = 1.0 / (grid.dx * grid.dx);
    let faces = pole_faces(grid);

    let mut rows = RowBuilder::new(grid.len());
    for i_r in 0..n_r {
        let r = grid.r_nodes[i_r];
        for i_rho in 0..n_rho {
            let rho = grid.rho_nodes[i_rho];
            let ang = inv_dx2 / (rho * rho);
            for i_x in 0..n_x {
                let row = grid.flat_unchecked(i_r, i_rho, i_x);
                let x = grid.x_nodes[i_x];
                let v = coulomb_at(r, rho, 1.0 - x, 1.0 + x, p)?
                    + diamagnetic_at(rho, 1.0 - x, 1.0 + x, p.beta);
                let diag = 2.0 * heavy
                    + 2.0 * radial
                    + ang * (faces[i_x] + faces[i_x + 1])
                    + v;
                if !diag.is_finite() {
                    return Err(Error::Singularity { r, rho, x });
                }
                // ascending column order: R-1, ρ-1, x-1, diag, x+1, ρ+1, R+1
                if i_r > 0 {
                    rows.push(row, grid.flat_unchecked(i_r - 1, i_rho, i_x), -heavy);
                }
                if i_rho > 0 {
                    rows.push(row, grid.flat_unchecked(i_r, i_rho - 1, i_x), -radial);
                }
                if i_x > 0 && faces[i_x] != 0.0 {
                    rows.push(row, row - 1, -ang * faces[i_x]);
                }
                rows.push(row, row, diag);
                if i_x + 1 < n_x && faces[i_x + 1] != 0.0 {
                    rows.push(row, row + 1, -ang * faces[i_x + 1]);
                }
                if i_rho + 1 < n_rho {
                    rows.push(row, grid.flat_unchecked(i_r, i_rho + 1, i_x), -radial);
                }
                if i_r + 1 < n_r {
                    rows.push(row, grid.flat_unchecked(i_r + 1, i_rho, i_x), -heavy);
                }
            }
        }
    }
    Ok(HamiltonianOperator {
        matrix: rows.finish(),
        grid: grid.clone(),
        potential: *p,
        mu,
        heavy_kinetic_coeff,
    })
}

/// `(1 − x²)` on the `n_theta + 1` cell faces; zero at both poles.
fn pole_faces(grid: &Grid) -> Vec<f64> {
    let n_x = grid.n_theta();
    (0..=n_x)
        .map(|f| {
            let x = -1.0 + f as f64 * grid.dx;
            if f == 0 || f == n_x {
                0.0
            } else {
                (1.0 - x) * (1.0 + x)
            }
        })
        .collect()
}

/// Light-particle operator at a frozen heavy separation `r`: the `(ρ, x)` block
/// of the full operator without the heavy kinetic term and without the
/// heavy–heavy repulsion `Z/R`. Rows are indexed `i_rho · n_theta + i_x`.
pub fn light_block(grid: &Grid, p: &PotentialParams, r: f64) -> Result<CsrMatrix> {
    p.validate()?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("frozen separation must be positive, got {r}")));
    }
    let light = PotentialParams { z: 0.0, ..*p };
    let (n_rho, n_x) = (grid.n_rho(), grid.n_theta());
    let radial = 1.0 / (grid.drho * grid.drho);
    let inv_dx2 = 1.0 / (grid.dx * grid.dx);
    let faces = pole_faces(grid);
    let mut rows = RowBuilder::new(n_rho * n_x);
    for i_rho in 0..n_rho {
        let rho = grid.rho_nodes[i_rho];
        let ang = inv_dx2 / (rho * rho);
        for i_x in 0..n_x {
            let row = i_rho * n_x + i_x;
            let x = grid.x_nodes[i_x];
            let v = coulomb_at(r, rho, 1.0 - x, 1.0 + x, &light)?
                + diamagnetic_at(rho, 1.0 - x, 1.0 + x, p.beta);
            let diag = 2.0 * radial + ang * (faces[i_x] + faces[i_x + 1]) + v;
            if !diag.is_finite() {
                return Err(Error::Singularity { r, rho, x });
            }
            if i_rho > 0 {
                rows.push(row, row - n_x, -radial);
            }
            if i_x > 0 && faces[i_x] != 0.0 {
                rows.push(row, row - 1, -ang * faces[i_x]);
            }
            rows.push(row, row, diag);
            if i_x + 1 < n_x && faces[i_x + 1] != 0.0 {
                rows.push(row, row + 1, -ang * faces[i_x + 1]);
            }
            if i_rho + 1 < n_rho {
                rows.push(row, row + n_x, -radial);
            }
        }
    }
    Ok(rows.finish())
}

impl HamiltonianOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut w = vec![0.0; self.dim()];
        self.apply_into(v, &mut w)?;
        Ok(w)
    }

    pub fn apply_into(&self, v: &[f64], w: &mut [f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        if w.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: w.len(),
            });
        }
        self.matrix.mul_into(v, w);
        Ok(())
    }

    /// `⟨v, Hv⟩ / ⟨v, v⟩` in the lattice measure.
    pub fn rayleigh_quotient(&self, v: &[f64]) -> Result<f64> {
        let hv = self.apply(v)?;
        let w = self.grid.cell_measure();
        let num: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>() * w;
        let den: f64 = v.iter().map(|a| a * a).sum::<f64>() * w;
        if den == 0.0 {
            return Err(Error::InvalidInput("Rayleigh quotient of the zero vector".into()));
        }
        Ok(num / den)
    }
}
