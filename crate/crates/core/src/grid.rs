//! Uniform lattice over `(R, ρ, cos θ)`.
//!
//! R and ρ carry Dirichlet walls at both ends, so only interior nodes are
//! stored: `R_j = (j+1)·ΔR` with `ΔR = r_max/(n_r+1)`. The angular
//! coordinate `x = cos θ` is cell-centered on `(-1, 1)`, which keeps every
//! node away from the poles.
//!
//! Flat ordering is `k = (i_r·n_rho + i_rho)·n_theta + i_x`; the angular
//! index varies fastest, so the operator bandwidth is `n_rho·n_theta`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_rho: usize,
    pub n_theta: usize,
    pub r_max: f64,
    pub rho_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_r: 24,
            n_rho: 24,
            n_theta: 16,
            r_max: 10.0,
            rho_max: 5.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_r", self.n_r), ("n_rho", self.n_rho), ("n_theta", self.n_theta)] {
            if n < 3 {
                return Err(Error::InvalidInput(format!("{name} must be at least 3, got {n}")));
            }
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(Error::InvalidInput(format!("r_max must be positive, got {}", self.r_max)));
        }
        if !(self.rho_max > 0.0 && self.rho_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "rho_max must be positive, got {}",
                self.rho_max
            )));
        }
        let n = self
            .n_r
            .checked_mul(self.n_rho)
            .and_then(|v| v.checked_mul(self.n_theta))
            .filter(|&v| v <= u32::MAX as usize);
        if n.is_none() {
            return Err(Error::InvalidInput("grid is too large".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    pub r_nodes: Vec<f64>,
    pub rho_nodes: Vec<f64>,
    pub x_nodes: Vec<f64>,
    pub theta_weights: Vec<f64>,
    pub dr: f64,
    pub drho: f64,
    pub dx: f64,
}

pub fn build_grid(spec: GridSpec) -> Result<Grid> {
    spec.validate()?;
    let dr = spec.r_max / (spec.n_r + 1) as f64;
    let drho = spec.rho_max / (spec.n_rho + 1) as f64;
    let dx = 2.0 / spec.n_theta as f64;
    Ok(Grid {
        spec,
        r_nodes: (1..=spec.n_r).map(|j| j as f64 * dr).collect(),
        rho_nodes: (1..=spec.n_rho).map(|j| j as f64 * drho).collect(),
        x_nodes: (0..spec.n_theta).map(|k| -1.0 + (k as f64 + 0.5) * dx).collect(),
        theta_weights: vec![dx; spec.n_theta],
        dr,
        drho,
        dx,
    })
}

impl Grid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n_r(&self) -> usize {
        self.spec.n_r
    }

    pub fn n_rho(&self) -> usize {
        self.spec.n_rho
    }

    pub fn n_theta(&self) -> usize {
        self.spec.n_theta
    }

    /// Flat dimension `n_r·n_rho·n_theta`.
    pub fn len(&self) -> usize {
        self.spec.n_r * self.spec.n_rho * self.spec.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat_index(&self, i_r: usize, i_rho: usize, i_x: usize) -> Result<usize> {
        let checks = [(i_r, self.n_r()), (i_rho, self.n_rho()), (i_x, self.n_theta())];
        for (index, limit) in checks {
            if index >= limit {
                return Err(Error::Index { index, limit });
            }
        }
        Ok(self.flat_unchecked(i_r, i_rho, i_x))
    }

    #[inline]
    pub(crate) fn flat_unchecked(&self, i_r: usize, i_rho: usize, i_x: usize) -> usize {
        (i_r * self.spec.n_rho + i_rho) * self.spec.n_theta + i_x
    }

    pub fn unflatten(&self, k: usize) -> Result<(usize, usize, usize)> {
        if k >= self.len() {
            return Err(Error::Index {
                index: k,
                limit: self.len(),
            });
        }
        let i_x = k % self.n_theta();
        let rest = k / self.n_theta();
        Ok((rest / self.n_rho(), rest % self.n_rho(), i_x))
    }

    pub fn integration_weight(&self, i_r: usize, i_rho: usize, i_x: usize) -> Result<f64> {
        self.flat_index(i_r, i_rho, i_x)?;
        Ok(self.dr * self.drho * self.theta_weights[i_x])
    }

    /// The common value of every integration weight (the angular cells are uniform).
    pub fn cell_measure(&self) -> f64 {
        self.dr * self.drho * self.dx
    }

    /// Index of the angular node closest to `theta` (radians).
    pub fn nearest_x_index(&self, theta: f64) -> usize {
        let x = theta.cos();
        let mut best = 0;
        for (k, &xk) in self.x_nodes.iter().enumerate() {
            if (xk - x).abs() < (self.x_nodes[best] - x).abs() {
                best = k;
            }
        }
        best
    }
}
