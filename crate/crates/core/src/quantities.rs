//! Physical quantities and unit conversions.
//!
//! Canonical units: energies in meV, wavelengths and lengths in µm, times in
//! s, current densities in A/cm². SI is used only inside formulas that mix
//! in the constants below.

use serde::{Deserialize, Serialize};

use crate::error::{finite, non_negative, positive, Result};

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// h·c expressed in meV·µm (≈ 1239.841984).
pub const HC_MEV_UM: f64 = PLANCK * SPEED_OF_LIGHT / ELEMENTARY_CHARGE * 1e9;

/// Square micrometres per square centimetre.
pub const UM2_PER_CM2: f64 = 1e8;
/// Cubic centimetres per cubic micrometre.
pub const CM3_PER_UM3: f64 = 1e-12;

/// Photon or transition energy in meV. Differences (detunings) use the same
/// type, so the sign is unconstrained; only finiteness is enforced.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Energy(f64);

impl Energy {
    pub fn new(mev: f64) -> Result<Self> {
        finite("energy (meV)", mev).map(Self)
    }

    /// A photon energy; must be strictly positive.
    pub fn photon(mev: f64) -> Result<Self> {
        positive("photon energy (meV)", mev).map(Self)
    }

    pub fn mev(self) -> f64 {
        self.0
    }

    pub fn joules(self) -> f64 {
        self.0 * 1e-3 * ELEMENTARY_CHARGE
    }
}

/// Vacuum wavelength in µm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Wavelength(f64);

impl Wavelength {
    pub fn new(um: f64) -> Result<Self> {
        positive("wavelength (um)", um).map(Self)
    }

    pub fn um(self) -> f64 {
        self.0
    }
}

pub fn energy_to_wavelength(energy: Energy) -> Result<Wavelength> {
    let e = positive("photon energy (meV)", energy.mev())?;
    Ok(Wavelength(HC_MEV_UM / e))
}

pub fn wavelength_to_energy(wavelength: Wavelength) -> Result<Energy> {
    let l = positive("wavelength (um)", wavelength.um())?;
    Ok(Energy(HC_MEV_UM / l))
}

/// A lifetime in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lifetime(f64);

impl Lifetime {
    pub fn new(seconds: f64) -> Result<Self> {
        positive("lifetime (s)", seconds).map(Self)
    }

    pub fn from_ps(ps: f64) -> Result<Self> {
        Self::new(ps * 1e-12)
    }

    pub fn from_ns(ns: f64) -> Result<Self> {
        Self::new(ns * 1e-9)
    }

    pub fn seconds(self) -> f64 {
        self.0
    }

    pub fn rate(self) -> Rate {
        Rate(1.0 / self.0)
    }
}

/// A rate in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rate(f64);

impl Rate {
    pub fn new(per_second: f64) -> Result<Self> {
        positive("rate (1/s)", per_second).map(Self)
    }

    pub fn per_second(self) -> f64 {
        self.0
    }

    pub fn lifetime(self) -> Lifetime {
        Lifetime(1.0 / self.0)
    }
}

/// Injected current density in A/cm².
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurrentDensity(f64);

impl CurrentDensity {
    pub fn new(a_per_cm2: f64) -> Result<Self> {
        non_negative("current density (A/cm^2)", a_per_cm2).map(Self)
    }

    pub fn from_ka_per_cm2(ka: f64) -> Result<Self> {
        Self::new(ka * 1e3)
    }

    pub fn a_per_cm2(self) -> f64 {
        self.0
    }

    pub fn ka_per_cm2(self) -> f64 {
        self.0 * 1e-3
    }
}
