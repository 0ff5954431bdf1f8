//! Dimensionless Coulomb potential of two heavy charges at `z = ±R/2` and a
//! light charge at `(ρ, θ)`, its θ-average, and the diamagnetic term of a
//! uniform field along the heavy axis.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub z: f64,
    pub q: f64,
    /// Coefficient of `ρ² sin²θ`; zero switches the field off.
    pub beta: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            z: 1.0,
            q: 1.0,
            beta: 0.0,
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.z.is_finite() && self.q.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidInput("potential parameters must be finite".into()));
        }
        if self.z < 0.0 || self.q < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidInput(
                "potential parameters Z, q and beta must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Potential at `x = cos θ`, with `1 ∓ x` passed separately so that nodes
/// hugging the poles keep their distance to the heavy charges exact.
pub(crate) fn coulomb_at(
    r: f64,
    rho: f64,
    one_minus_x: f64,
    one_plus_x: f64,
    p: &PotentialParams,
) -> Result<f64> {
    let x = one_plus_x - 1.0;
    if !(r > 0.0) {
        return Err(Error::Singularity { r, rho, x });
    }
    let gap = 0.5 * r - rho;
    let d2_upper = gap * gap + r * rho * one_minus_x;
    let d2_lower = gap * gap + r * rho * one_plus_x;
    if !(d2_upper > 0.0 && d2_lower > 0.0) {
        return Err(Error::Singularity { r, rho, x });
    }
    Ok(p.z / r - p.q * (1.0 / d2_upper.sqrt() + 1.0 / d2_lower.sqrt()))
}

pub fn coulomb_potential(r: f64, rho: f64, theta: f64, p: &PotentialParams) -> Result<f64> {
    // exact complements at the poles: θ = 0 and θ = π are the only places the
    // light charge can sit on a heavy one
    let (one_minus_x, one_plus_x) = if theta == 0.0 {
        (0.0, 2.0)
    } else if theta == PI {
        (2.0, 0.0)
    } else {
        let half = 0.5 * theta;
        let (s, c) = half.sin_cos();
        (2.0 * s * s, 2.0 * c * c)
    };
    coulomb_at(r, rho, one_minus_x, one_plus_x, p)
}

pub fn diamagnetic_term(rho: f64, theta: f64, p: &PotentialParams) -> f64 {
    let s = theta.sin();
    p.beta * rho * rho * s * s
}

#[inline]
pub(crate) fn diamagnetic_at(rho: f64, one_minus_x: f64, one_plus_x: f64, beta: f64) -> f64 {
    beta * rho * rho * one_minus_x * one_plus_x
}

/// Quadrature rule for `∫₋₁¹ f(x) dx`.
#[derive(Debug, Clone)]
pub struct AngularQuadrature {
    one_minus_x: Vec<f64>,
    one_plus_x: Vec<f64>,
    weights: Vec<f64>,
}

impl AngularQuadrature {
    /// The grid's cell-centered midpoint rule.
    pub fn from_grid(grid: &Grid) -> Self {
        Self {
            one_minus_x: grid.x_nodes.iter().map(|x| 1.0 - x).collect(),
            one_plus_x: grid.x_nodes.iter().map(|x| 1.0 + x).collect(),
            weights: grid.theta_weights.clone(),
        }
    }

    pub fn midpoint(n: usize) -> Self {
        let dx = 2.0 / n as f64;
        let xs: Vec<f64> = (0..n).map(|k| -1.0 + (k as f64 + 0.5) * dx).collect();
        Self {
            one_minus_x: xs.iter().map(|x| 1.0 - x).collect(),
            one_plus_x: xs.iter().map(|x| 1.0 + x).collect(),
            weights: vec![dx; n],
        }
    }

    /// Double-exponential (tanh-sinh) rule with `n` nodes. Handles the
    /// near-singular endpoint peaks that appear when ρ is close to R/2.
    pub fn tanh_sinh(n: usize) -> Self {
        const T_MAX: f64 = 4.0;
        let h = 2.0 * T_MAX / n as f64;
        let mut one_minus_x = Vec::with_capacity(n);
        let mut one_plus_x = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let t = -T_MAX + (i as f64 + 0.5) * h;
            let u = 0.5 * PI * t.sinh();
            // 1 - tanh(u) = 2/(e^{2u}+1), 1 + tanh(u) = 2/(e^{-2u}+1)
            one_minus_x.push(2.0 / ((2.0 * u).exp() + 1.0));
            one_plus_x.push(2.0 / ((-2.0 * u).exp() + 1.0));
            let cu = u.cosh();
            weights.push(h * 0.5 * PI * t.cosh() / (cu * cu));
        }
        Self {
            one_minus_x,
            one_plus_x,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate<F: FnMut(f64, f64) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for ((&w, &m), &p) in self.weights.iter().zip(&self.one_minus_x).zip(&self.one_plus_x) {
            acc += w * f(m, p)?;
        }
        Ok(acc)
    }
}

/// `½∫₋₁¹ d(cos θ) [V + diamagnetic]` by the given quadrature.
pub fn averaged_potential(
    r: f64,
    rho: f64,
    p: &PotentialParams,
    quad: &AngularQuadrature,
) -> Result<f64> {
    if !(r > 0.0 && rho > 0.0) {
        return Err(Error::Domain(format!("need R > 0 and rho > 0, got R={r}, rho={rho}")));
    }
    let total = quad.integrate(|m, pl| {
        Ok(coulomb_at(r, rho, m, pl, p)? + diamagnetic_at(rho, m, pl, p.beta))
    })?;
    Ok(0.5 * total)
}

/// Shell-theorem form of the θ-average: each heavy charge acts as a shell of
/// radius R/2 seen from the light particle.
pub fn averaged_potential_closed_form(r: f64, rho: f64, p: &PotentialParams) -> Result<f64> {
    if !(r > 0.0 && rho > 0.0) {
        return Err(Error::Domain(format!("need R > 0 and rho > 0, got R={r}, rho={rho}")));
    }
    let attraction = if rho >= 0.5 * r {
        2.0 * p.q / rho
    } else {
        4.0 * p.q / r
    };
    Ok(p.z / r - attraction + p.beta * rho * rho * (2.0 / 3.0))
}
