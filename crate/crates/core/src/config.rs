//! Flat `section.key=value` run configuration.
//!
//! Blank lines and `#` comments are ignored; every key is optional and
//! unknown keys are rejected. [`RunConfig::to_text`] writes every
//! effective key back in the same format.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::observables::{Eta, Polarization};
use crate::potential::PotentialParams;
use crate::store::fmt_f64;
use crate::units::{codata, compute_scales, ParticleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    /// Dense when the lattice fits under the dense limit, shift-invert Lanczos otherwise.
    Auto,
    Dense,
    Lanczos,
    ShiftInvert,
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "dense" => Ok(Self::Dense),
            "lanczos" => Ok(Self::Lanczos),
            "shift-invert" => Ok(Self::ShiftInvert),
            _ => Err("expected one of auto, dense, lanczos, shift-invert".into()),
        }
    }
}

impl SolverChoice {
    fn as_str(&self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::Dense => "dense",
            Self::Lanczos => "lanczos",
            Self::ShiftInvert => "shift-invert",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: SolverChoice,
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Target for shift-invert; `None` means "just below the spectrum".
    pub shift: Option<f64>,
    pub dense_limit: usize,
    pub residual_gate: f64,
    pub gram_gate: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverChoice::Auto,
            k: 400,
            tol: 1e-12,
            max_iter: 4000,
            seed: 42,
            shift: None,
            dense_limit: crate::eigen::DEFAULT_DENSE_LIMIT,
            residual_gate: 1e-6,
            gram_gate: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalSelector {
    /// The excited state with the largest collision probability.
    Auto,
    Index(usize),
}

impl FromStr for GoalSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        s.parse()
            .map(Self::Index)
            .map_err(|_| "expected a state index or `auto`".into())
    }
}

impl std::fmt::Display for GoalSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub particles: ParticleParams,
    pub grid: GridSpec,
    pub beta: f64,
    /// Light charge entering the potential when it differs from
    /// `particles.q`; `0` removes the attraction (free light particle).
    pub potential_q: Option<f64>,
    /// Overrides the default `−8μ` coefficient of `∂²/∂R²`.
    pub heavy_kinetic_coeff: Option<f64>,
    pub solver: SolverConfig,
    pub eta: Eta,
    /// Polarization angle from the heavy axis, degrees.
    pub polarization_deg: f64,
    pub goal: GoalSelector,
    /// Spacing of the `(R, ρ)` sampling used by the potential table.
    pub potential_step: f64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            particles: ParticleParams::electron_deuteron(),
            grid: GridSpec::default(),
            beta: 0.0,
            potential_q: None,
            heavy_kinetic_coeff: None,
            solver: SolverConfig::default(),
            eta: Eta::default(),
            polarization_deg: 45.0,
            goal: GoalSelector::Auto,
            potential_step: 0.1,
            output_dir: PathBuf::from("runs"),
        }
    }
}

fn parse_mass(s: &str) -> std::result::Result<f64, String> {
    match s {
        "electron" => Ok(codata::ELECTRON_MASS),
        "proton" => Ok(codata::PROTON_MASS),
        "deuteron" => Ok(codata::DEUTERON_MASS),
        _ => s
            .parse::<f64>()
            .map_err(|_| "expected a mass in kg or one of electron, proton, deuteron".into()),
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("expected {what}, got `{s}`"))
}

fn positive(v: f64) -> std::result::Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {v}"))
    }
}

fn at_least(v: usize, min: usize) -> std::result::Result<usize, String> {
    if v >= min {
        Ok(v)
    } else {
        Err(format!("must be at least {min}, got {v}"))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut lines_of: HashMap<&'static str, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: line_no,
                    key: line.to_string(),
                    msg: "expected key=value".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let err = |msg: String| Error::Config {
                line: line_no,
                key: key.to_string(),
                msg,
            };
            let canonical = cfg.set(key, value).map_err(err)?;
            if lines_of.insert(canonical, line_no).is_some() {
                return Err(Error::Config {
                    line: line_no,
                    key: key.to_string(),
                    msg: "duplicate key".into(),
                });
            }
        }
        cfg.validate_with_lines(&lines_of)?;
        Ok(cfg)
    }

    /// Applies one key; returns its canonical name.
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<&'static str, String> {
        let name = match key {
            "particles.z" => {
                self.particles.z = positive(parse_num(v, "a number")?)?;
                "particles.z"
            }
            "particles.q" => {
                self.particles.q = positive(parse_num(v, "a number")?)?;
                "particles.q"
            }
            "particles.light_mass" => {
                self.particles.light_mass = positive(parse_mass(v)?)?;
                "particles.light_mass"
            }
            "particles.heavy_mass" => {
                self.particles.heavy_mass = positive(parse_mass(v)?)?;
                "particles.heavy_mass"
            }
            "grid.n_r" => {
                self.grid.n_r = at_least(parse_num(v, "a count")?, 3)?;
                "grid.n_r"
            }
            "grid.n_rho" => {
                self.grid.n_rho = at_least(parse_num(v, "a count")?, 3)?;
                "grid.n_rho"
            }
            "grid.n_theta" => {
                self.grid.n_theta = at_least(parse_num(v, "a count")?, 3)?;
                "grid.n_theta"
            }
            "grid.r_max" => {
                self.grid.r_max = positive(parse_num(v, "a number")?)?;
                "grid.r_max"
            }
            "grid.rho_max" => {
                self.grid.rho_max = positive(parse_num(v, "a number")?)?;
                "grid.rho_max"
            }
            "potential.beta" => {
                let b: f64 = parse_num(v, "a number")?;
                if !(b >= 0.0 && b.is_finite()) {
                    return Err(format!("must be non-negative, got {b}"));
                }
                self.beta = b;
                "potential.beta"
            }
            "potential.sample_step" => {
                self.potential_step = positive(parse_num(v, "a number")?)?;
                "potential.sample_step"
            }
            "potential.q" => {
                let q: f64 = parse_num(v, "a number")?;
                if !(q >= 0.0 && q.is_finite()) {
                    return Err(format!("must be non-negative, got {q}"));
                }
                self.potential_q = Some(q);
                "potential.q"
            }
            "operator.heavy_kinetic_coeff" => {
                let c: f64 = parse_num(v, "a number")?;
                if !(c < 0.0 && c.is_finite()) {
                    return Err(format!("must be negative, got {c}"));
                }
                self.heavy_kinetic_coeff = Some(c);
                "operator.heavy_kinetic_coeff"
            }
            "solver.method" => {
                self.solver.method = v.parse()?;
                "solver.method"
            }
            "solver.k" => {
                self.solver.k = at_least(parse_num(v, "a count")?, 1)?;
                "solver.k"
            }
            "solver.tol" => {
                self.solver.tol = positive(parse_num(v, "a number")?)?;
                "solver.tol"
            }
            "solver.max_iter" => {
                self.solver.max_iter = at_least(parse_num(v, "a count")?, 1)?;
                "solver.max_iter"
            }
            "solver.seed" => {
                self.solver.seed = parse_num(v, "an unsigned integer")?;
                "solver.seed"
            }
            "solver.shift" => {
                let s: f64 = parse_num(v, "a number")?;
                if !s.is_finite() {
                    return Err("must be finite".into());
                }
                self.solver.shift = Some(s);
                "solver.shift"
            }
            "solver.dense_limit" => {
                self.solver.dense_limit = at_least(parse_num(v, "a count")?, 1)?;
                "solver.dense_limit"
            }
            "solver.residual_gate" => {
                self.solver.residual_gate = positive(parse_num(v, "a number")?)?;
                "solver.residual_gate"
            }
            "solver.gram_gate" => {
                self.solver.gram_gate = positive(parse_num(v, "a number")?)?;
                "solver.gram_gate"
            }
            "observables.eta" => {
                self.eta = v.parse().map_err(|e: Error| e.to_string())?;
                "observables.eta"
            }
            "observables.polarization_deg" => {
                let d: f64 = parse_num(v, "a number")?;
                if !d.is_finite() {
                    return Err("must be finite".into());
                }
                self.polarization_deg = d;
                "observables.polarization_deg"
            }
            "observables.goal" => {
                self.goal = v.parse()?;
                "observables.goal"
            }
            "output.dir" => {
                if v.is_empty() {
                    return Err("must not be empty".into());
                }
                self.output_dir = PathBuf::from(v);
                "output.dir"
            }
            _ => return Err("unknown key".into()),
        };
        Ok(name)
    }

    fn validate_with_lines(&self, lines: &HashMap<&'static str, usize>) -> Result<()> {
        if let Err(e) = self.particles.validate() {
            let p = &self.particles;
            let key = if !(p.z > 0.0) {
                "particles.z"
            } else if !(p.q > 0.0) {
                "particles.q"
            } else if lines.contains_key("particles.heavy_mass") {
                "particles.heavy_mass"
            } else {
                "particles.light_mass"
            };
            return Err(Error::Config {
                line: lines.get(key).copied().unwrap_or(0),
                key: key.into(),
                msg: e.to_string(),
            });
        }
        self.grid.validate().map_err(|e| Error::Config {
            line: lines.get("grid.n_r").copied().unwrap_or(0),
            key: "grid".into(),
            msg: e.to_string(),
        })?;
        self.potential_params().validate().map_err(|e| Error::Config {
            line: lines.get("potential.q").copied().unwrap_or(0),
            key: "potential".into(),
            msg: e.to_string(),
        })?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_lines(&HashMap::new())
    }

    pub fn potential_params(&self) -> PotentialParams {
        PotentialParams {
            z: self.particles.z,
            q: self.potential_q.unwrap_or(self.particles.q),
            beta: self.beta,
        }
    }

    pub fn polarization(&self) -> Polarization {
        Polarization {
            angle_from_axis: self.polarization_deg.to_radians(),
        }
    }

    /// The coefficient of `∂²/∂R²` actually used.
    pub fn effective_heavy_coeff(&self) -> f64 {
        self.heavy_kinetic_coeff.unwrap_or_else(|| {
            -crate::operator::DEFAULT_HEAVY_FACTOR * compute_scales(&self.particles).mu
        })
    }

    /// Every effective key, one `key=value` per line, in parse-compatible form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("particles.z", fmt_f64(self.particles.z));
        kv("particles.q", fmt_f64(self.particles.q));
        kv("particles.light_mass", fmt_f64(self.particles.light_mass));
        kv("particles.heavy_mass", fmt_f64(self.particles.heavy_mass));
        kv("grid.n_r", self.grid.n_r.to_string());
        kv("grid.n_rho", self.grid.n_rho.to_string());
        kv("grid.n_theta", self.grid.n_theta.to_string());
        kv("grid.r_max", fmt_f64(self.grid.r_max));
        kv("grid.rho_max", fmt_f64(self.grid.rho_max));
        kv("potential.beta", fmt_f64(self.beta));
        if let Some(q) = self.potential_q {
            kv("potential.q", fmt_f64(q));
        }
        kv("potential.sample_step", fmt_f64(self.potential_step));
        if let Some(c) = self.heavy_kinetic_coeff {
            kv("operator.heavy_kinetic_coeff", fmt_f64(c));
        }
        kv("solver.method", self.solver.method.as_str().to_string());
        kv("solver.k", self.solver.k.to_string());
        kv("solver.tol", fmt_f64(self.solver.tol));
        kv("solver.max_iter", self.solver.max_iter.to_string());
        kv("solver.seed", self.solver.seed.to_string());
        if let Some(sh) = self.solver.shift {
            kv("solver.shift", fmt_f64(sh));
        }
        kv("solver.dense_limit", self.solver.dense_limit.to_string());
        kv("solver.residual_gate", fmt_f64(self.solver.residual_gate));
        kv("solver.gram_gate", fmt_f64(self.solver.gram_gate));
        kv("observables.eta", self.eta.to_string());
        kv("observables.polarization_deg", fmt_f64(self.polarization_deg));
        kv("observables.goal", self.goal.to_string());
        kv("output.dir", self.output_dir.display().to_string());
        s
    }
}
