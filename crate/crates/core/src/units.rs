//! Physical constants and the conversions between lattice (dimensionless)
//! quantities and SI units.
//!
//! Lengths scale with `1/G²`, energies with `ħ²G⁴/2m`, times with
//! `2m/(ħG⁴)`, where `G² = Z e² m / (2π ε₀ ħ²)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// CODATA 2018 values, SI units.
pub mod codata {
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const PLANCK: f64 = 6.626_070_15e-34;
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
    pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;
    pub const DEUTERON_MASS: f64 = 3.343_583_772_4e-27;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleParams {
    /// Charge number of each heavy (positive) particle.
    pub z: f64,
    /// Charge number of the light (negative) particle.
    pub q: f64,
    /// Light mass in kg.
    pub light_mass: f64,
    /// Heavy mass in kg.
    pub heavy_mass: f64,
}

impl ParticleParams {
    pub fn new(z: f64, q: f64, light_mass: f64, heavy_mass: f64) -> Result<Self> {
        let p = Self {
            z,
            q,
            light_mass,
            heavy_mass,
        };
        p.validate()?;
        Ok(p)
    }

    /// Two deuterons and one electron, unit charges.
    pub fn electron_deuteron() -> Self {
        Self {
            z: 1.0,
            q: 1.0,
            light_mass: codata::ELECTRON_MASS,
            heavy_mass: codata::DEUTERON_MASS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.z, self.q, self.light_mass, self.heavy_mass]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("particle parameters must be finite".into()));
        }
        if self.z <= 0.0 || self.q <= 0.0 {
            return Err(Error::InvalidInput("charges Z and q must be positive".into()));
        }
        if !(self.light_mass > 0.0 && self.light_mass < self.heavy_mass) {
            return Err(Error::InvalidInput(
                "masses must satisfy 0 < light_mass < heavy_mass".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSet {
    /// `G²/Z` in m⁻¹.
    pub g2_over_z: f64,
    /// Meters per dimensionless length.
    pub length_unit: f64,
    /// eV per dimensionless energy.
    pub energy_unit: f64,
    /// Seconds per dimensionless time.
    pub time_unit: f64,
    /// `m/M`.
    pub mu: f64,
    /// `hc` over the energy unit, in meters: `λ = wavelength_numerator / ΔE`.
    pub wavelength_numerator: f64,
}

pub fn compute_scales(p: &ParticleParams) -> ScaleSet {
    use codata::*;
    let e2 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
    let g2_over_z = e2 * p.light_mass / (2.0 * PI * VACUUM_PERMITTIVITY * HBAR * HBAR);
    let g2 = p.z * g2_over_z;
    let energy_joule = HBAR * HBAR * g2 * g2 / (2.0 * p.light_mass);
    ScaleSet {
        g2_over_z,
        length_unit: 1.0 / g2,
        energy_unit: energy_joule / ELEMENTARY_CHARGE,
        time_unit: HBAR / energy_joule,
        mu: p.light_mass / p.heavy_mass,
        wavelength_numerator: PLANCK * SPEED_OF_LIGHT / energy_joule,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Energy,
    Time,
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "length" => Ok(Self::Length),
            "energy" => Ok(Self::Energy),
            "time" => Ok(Self::Time),
            other => Err(Error::InvalidInput(format!("unknown dimension `{other}`"))),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Length => "length",
            Self::Energy => "energy",
            Self::Time => "time",
        })
    }
}

impl ScaleSet {
    fn unit(&self, dim: Dimension) -> f64 {
        match dim {
            Dimension::Length => self.length_unit,
            Dimension::Energy => self.energy_unit,
            Dimension::Time => self.time_unit,
        }
    }

    /// Dimensionless value to meters, eV or seconds.
    pub fn convert(&self, value: f64, dim: Dimension) -> Result<f64> {
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite {dim} value {value}")));
        }
        Ok(value * self.unit(dim))
    }

    pub fn to_dimensionless(&self, physical: f64, dim: Dimension) -> Result<f64> {
        if !physical.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite {dim} value {physical}")));
        }
        Ok(physical / self.unit(dim))
    }

    /// Photon wavelength in meters resonant with a dimensionless excitation energy.
    pub fn wavelength_for_excitation(&self, delta_e: f64) -> Result<f64> {
        if !(delta_e > 0.0) || !delta_e.is_finite() {
            return Err(Error::Domain(format!(
                "excitation energy must be positive and finite, got {delta_e}"
            )));
        }
        Ok(self.wavelength_numerator / delta_e)
    }

    /// Diamagnetic strength for a uniform field of `tesla` along the heavy axis.
    ///
    /// The light-particle `e²A²/2m` term with `A = ½ r×B` becomes
    /// `beta ρ² sin²θ` with `beta = e²B² / (4ħ²G⁸)` in lattice units.
    pub fn beta_from_tesla(&self, tesla: f64, z: f64) -> f64 {
        use codata::*;
        let g2 = z * self.g2_over_z;
        let g8 = g2 * g2 * g2 * g2;
        ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * tesla * tesla / (4.0 * HBAR * HBAR * g8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sig5(a: f64, b: f64) {
        assert_relative_eq!(a, b, max_relative = 5e-5);
    }

    #[test]
    fn electron_deuteron_constants() {
        let s = compute_scales(&ParticleParams::electron_deuteron());
        sig5(s.g2_over_z, 3.77945e10);
        sig5(s.length_unit, 2.6459e-11);
        sig5(s.energy_unit, 54.42277);
        sig5(s.time_unit, 1.20944e-17);
        sig5(s.mu, 2.724447e-4);
        sig5(s.wavelength_numerator, 2.2782e-8);
        // the Joule figure quoted alongside the eV one
        sig5(s.energy_unit * codata::ELEMENTARY_CHARGE, 0.87195e-17);
    }

    #[test]
    fn convert_examples() {
        let s = compute_scales(&ParticleParams::electron_deuteron());
        let len = s.convert(5.0, Dimension::Length).unwrap();
        assert_relative_eq!(len * 1e10, 1.32295, max_relative = 5e-5);
        assert_eq!(s.convert(0.0, Dimension::Energy).unwrap(), 0.0);
        assert_relative_eq!(s.convert(10.0, Dimension::Energy).unwrap(), 544.2277, max_relative = 1e-5);
        assert!(s.convert(f64::NAN, Dimension::Time).is_err());
        assert!("mass".parse::<Dimension>().is_err());
        assert_eq!("Energy".parse::<Dimension>().unwrap(), Dimension::Energy);
    }

    #[test]
    fn wavelengths_of_worked_example() {
        let s = compute_scales(&ParticleParams::electron_deuteron());
        for (de, lam) in [(10.4754, 2.175e-9), (7.7865, 2.926e-9), (2.6889, 8.472e-9)] {
            let got = s.wavelength_for_excitation(de).unwrap();
            assert_relative_eq!(got, lam, max_relative = 1e-3);
        }
        assert!(matches!(s.wavelength_for_excitation(0.0), Err(Error::Domain(_))));
        assert!(s.wavelength_for_excitation(-1.0).is_err());
    }

    #[test]
    fn length_unit_consistency_for_other_charges() {
        let p = ParticleParams::new(2.0, 1.0, codata::ELECTRON_MASS, codata::PROTON_MASS).unwrap();
        let s = compute_scales(&p);
        assert_relative_eq!(s.length_unit * s.g2_over_z, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn rejects_bad_particles() {
        assert!(ParticleParams::new(0.0, 1.0, 1.0, 2.0).is_err());
        assert!(ParticleParams::new(1.0, -1.0, 1.0, 2.0).is_err());
        assert!(ParticleParams::new(1.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn strong_field_beta_scale() {
        // one atomic unit of field (2.35e5 T) gives beta of order 1e-2 in these units
        let s = compute_scales(&ParticleParams::electron_deuteron());
        let beta = s.beta_from_tesla(2.350_517_567e5, 1.0);
        assert_relative_eq!(beta, 1.0 / 64.0, max_relative = 1e-6);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip(x in -1e6f64..1e6, d in 0usize..3) {
                let dim = [Dimension::Length, Dimension::Energy, Dimension::Time][d];
                let s = compute_scales(&ParticleParams::electron_deuteron());
                let back = s.to_dimensionless(s.convert(x, dim).unwrap(), dim).unwrap();
                prop_assert!((back - x).abs() <= 1e-14 * x.abs().max(1e-300));
            }

            #[test]
            fn wavelength_times_energy_constant(de in 1e-3f64..1e3) {
                let s = compute_scales(&ParticleParams::electron_deuteron());
                let lam = s.wavelength_for_excitation(de).unwrap();
                prop_assert!((lam * de - s.wavelength_numerator).abs() <= 4.0 * f64::EPSILON * s.wavelength_numerator);
            }
        }
    }
}
