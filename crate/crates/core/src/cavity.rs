//! Patch-antenna microcavity: geometry, resonance, mode volume, areas and
//! the reflectivity dip seen in FTIR measurements.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::purcell::lorentzian;
use crate::quantities::{wavelength_to_energy, CurrentDensity, Energy, Wavelength, UM2_PER_CM2};

/// Geometry of an N_x × N_y array of square metal-semiconductor-metal
/// patches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchCavity {
    /// Patch side (µm).
    pub side_um: f64,
    /// Semiconductor thickness (µm).
    pub thickness_um: f64,
    /// Array period (µm).
    pub period_um: f64,
    pub nx: u32,
    pub ny: u32,
    pub mode_index: f64,
}

impl PatchCavity {
    pub fn new(side_um: f64, thickness_um: f64, period_um: f64, nx: u32, ny: u32, mode_index: f64) -> Result<Self> {
        let cavity = Self {
            side_um,
            thickness_um,
            period_um,
            nx,
            ny,
            mode_index,
        };
        cavity.validate()?;
        Ok(cavity)
    }

    pub fn validate(&self) -> Result<()> {
        positive("patch side s (um)", self.side_um)?;
        positive("thickness H (um)", self.thickness_um)?;
        positive("period p (um)", self.period_um)?;
        if self.side_um > self.period_um {
            return Err(Error::Input(format!(
                "patch side {} um exceeds period {} um; patches would overlap",
                self.side_um, self.period_um
            )));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Input("array needs at least one patch per side".into()));
        }
        if !(self.mode_index.is_finite() && self.mode_index > 1.0) {
            return Err(Error::Domain {
                what: "modal index",
                constraint: "finite and > 1",
                value: self.mode_index,
            });
        }
        Ok(())
    }

    pub fn patch_count(&self) -> u32 {
        self.nx * self.ny
    }

    /// Total electrically pumped area N·s² (µm²).
    pub fn electrical_area_um2(&self) -> f64 {
        self.patch_count() as f64 * self.side_um * self.side_um
    }

    /// Total optical collection area N·p² (µm²).
    pub fn optical_area_um2(&self) -> f64 {
        self.patch_count() as f64 * self.period_um * self.period_um
    }

    /// s²/p², in (0, 1].
    pub fn fill_factor(&self) -> f64 {
        (self.side_um / self.period_um).powi(2)
    }

    /// Volume of one patch resonator (µm³).
    pub fn mode_volume_um3(&self) -> f64 {
        self.side_um * self.side_um * self.thickness_um
    }

    pub fn resonance(&self) -> Result<(Wavelength, Energy)> {
        resonance(self.side_um, self.mode_index)
    }
}

/// Fundamental mode of one patch resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityMode {
    pub energy: Energy,
    pub quality: f64,
    pub wavelength: Wavelength,
    /// µm³.
    pub volume_um3: f64,
}

impl CavityMode {
    pub fn of(cavity: &PatchCavity, quality: f64) -> Result<Self> {
        let (wavelength, energy) = cavity.resonance()?;
        Ok(Self {
            energy,
            quality: positive("cavity quality factor", quality)?,
            wavelength,
            volume_um3: cavity.mode_volume_um3(),
        })
    }

    /// ΔE_cav = E_cav / Q_cav.
    pub fn linewidth(&self) -> Energy {
        Energy::new(self.energy.mev() / self.quality).expect("finite by construction")
    }
}

/// λ_cav = 2·n·s and the matching photon energy.
pub fn resonance(side_um: f64, mode_index: f64) -> Result<(Wavelength, Energy)> {
    let s = positive("patch side s (um)", side_um)?;
    let n = positive("modal index", mode_index)?;
    let wavelength = Wavelength::new(2.0 * n * s)?;
    Ok((wavelength, wavelength_to_energy(wavelength)?))
}

/// Modal index that places the fundamental resonance of a patch of side `s`
/// at `wavelength`.
pub fn mode_index_from_resonance(side_um: f64, wavelength: Wavelength) -> Result<f64> {
    let s = positive("patch side s (um)", side_um)?;
    Ok(wavelength.um() / (2.0 * s))
}

/// s²·H (µm³).
pub fn mode_volume(side_um: f64, thickness_um: f64) -> Result<f64> {
    Ok(positive("patch side s (um)", side_um)? * side_um * positive("thickness H (um)", thickness_um)?)
}

/// Converts a device current (A) into current density over the electrical
/// area of the array.
pub fn current_to_density(current_a: f64, cavity: &PatchCavity) -> Result<CurrentDensity> {
    let i = non_negative("current (A)", current_a)?;
    CurrentDensity::new(i / (cavity.electrical_area_um2() / UM2_PER_CM2))
}

pub fn density_to_current(density: CurrentDensity, cavity: &PatchCavity) -> f64 {
    density.a_per_cm2() * cavity.electrical_area_um2() / UM2_PER_CM2
}

/// R(E) = 1 − depth·ℒ(E − E_cav, ΔE_cav) sampled on `energies` (meV).
pub fn reflectivity_spectrum(mode: &CavityMode, depth: f64, energies: &[f64]) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&depth) {
        return Err(Error::Domain {
            what: "dip depth",
            constraint: "within [0, 1]",
            value: depth,
        });
    }
    let width = mode.linewidth().mev();
    let centre = mode.energy.mev();
    Ok(energies
        .iter()
        .map(|&e| 1.0 - depth * lorentzian(e - centre, width))
        .collect())
}
