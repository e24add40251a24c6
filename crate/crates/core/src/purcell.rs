//! Purcell enhancement of the intersubband emission rate.
//!
//! The zero-detuning coefficient uses the harmonic combination of the
//! emitter and cavity quality factors, while the detuning Lorentzian uses
//! the arithmetic sum of the two linewidths. Both conventions are kept as
//! written even though they are not mutually consistent.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cavity::{CavityMode, PatchCavity};
use crate::emitter::{BiasCurrentMap, StarkEmitter};
use crate::error::{non_negative, positive, Result};
use crate::quantities::{CurrentDensity, Energy, Wavelength, UM2_PER_CM2};

/// (1/Q_EL + 1/Q_cav)⁻¹. An infinite cavity Q returns `q_el`.
pub fn combined_q(q_el: f64, q_cav: f64) -> Result<f64> {
    let a = positive("emitter quality Q_EL", q_el)?;
    if q_cav == f64::INFINITY {
        return Ok(a);
    }
    let b = positive("cavity quality Q_cav", q_cav)?;
    Ok(1.0 / (1.0 / a + 1.0 / b))
}

/// ΔE = ΔE_EL + ΔE_cav.
pub fn total_linewidth(el: Energy, cav: Energy) -> Result<Energy> {
    let a = non_negative("emitter linewidth (meV)", el.mev())?;
    let b = non_negative("cavity linewidth (meV)", cav.mev())?;
    Energy::photon(a + b)
}

/// Unit-peak Lorentzian ΔE²/(4δ² + ΔE²).
#[inline]
pub fn lorentzian(detuning: f64, width: f64) -> f64 {
    let w2 = width * width;
    w2 / (4.0 * detuning * detuning + w2)
}

/// F_P = 3Q(λ/n)³ / (4π²V).
pub fn purcell_coefficient(quality: f64, wavelength: Wavelength, mode_index: f64, volume_um3: f64) -> Result<f64> {
    let q = positive("quality factor", quality)?;
    let n = positive("modal index", mode_index)?;
    let v = positive("mode volume (um^3)", volume_um3)?;
    let reduced = wavelength.um() / n;
    Ok(3.0 * q * reduced.powi(3) / (4.0 * PI * PI * v))
}

/// ℱ_P = F_P·ℒ(δ, ΔE). No angular correction: the intersubband dipoles are
/// parallel to the cavity field.
pub fn purcell_factor(coefficient: f64, detuning: Energy, linewidth: Energy) -> Result<f64> {
    let fp = non_negative("Purcell coefficient", coefficient)?;
    let w = positive("linewidth (meV)", linewidth.mev())?;
    Ok(fp * lorentzian(detuning.mev(), w))
}

/// Everything needed to evaluate the Purcell factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurcellInputs {
    pub quality: f64,
    pub wavelength: Wavelength,
    pub mode_index: f64,
    pub volume_um3: f64,
    pub linewidth: Energy,
    pub detuning: Energy,
}

impl PurcellInputs {
    pub fn coefficient(&self) -> Result<f64> {
        purcell_coefficient(self.quality, self.wavelength, self.mode_index, self.volume_um3)
    }

    pub fn factor(&self) -> Result<f64> {
        purcell_factor(self.coefficient()?, self.detuning, self.linewidth)
    }
}

/// Bias- and current-dependent Purcell factor: the Stark shift moves the
/// emission line across the cavity resonance as the drive changes.
#[derive(Debug, Clone, PartialEq)]
pub struct PurcellDrive {
    pub emitter: StarkEmitter,
    pub mode: CavityMode,
    pub bias_map: BiasCurrentMap,
    /// F_P at zero detuning.
    pub coefficient: f64,
    /// ΔE used in the detuning Lorentzian.
    pub linewidth: Energy,
    electrical_area_cm2: f64,
}

impl PurcellDrive {
    /// `purcell_q_el` is the emitter quality entering the harmonic Q of F_P.
    pub fn new(
        emitter: StarkEmitter,
        cavity: &PatchCavity,
        mode: CavityMode,
        bias_map: BiasCurrentMap,
        purcell_q_el: f64,
    ) -> Result<Self> {
        let q = combined_q(purcell_q_el, mode.quality)?;
        let coefficient = purcell_coefficient(q, mode.wavelength, cavity.mode_index, mode.volume_um3)?;
        let linewidth = total_linewidth(emitter.linewidth, mode.linewidth())?;
        Ok(Self {
            emitter,
            mode,
            bias_map,
            coefficient,
            linewidth,
            electrical_area_cm2: cavity.electrical_area_um2() / UM2_PER_CM2,
        })
    }

    pub fn factor_at_bias(&self, bias_v: f64) -> f64 {
        let detuning = self.emitter.detuning(bias_v, &self.mode);
        self.coefficient * lorentzian(detuning.mev(), self.linewidth.mev())
    }

    /// Bias (V) reached at current density `j`.
    pub fn bias_at_density(&self, j: CurrentDensity) -> f64 {
        let current_ma = j.a_per_cm2() * self.electrical_area_cm2 * 1e3;
        self.bias_map.bias_at(current_ma)
    }

    pub fn density_at_bias(&self, bias_v: f64) -> CurrentDensity {
        let current_a = self.bias_map.current_at(bias_v) * 1e-3;
        CurrentDensity::new(current_a / self.electrical_area_cm2).expect("non-negative table")
    }

    /// ℱ_P(J).
    pub fn factor_at_density(&self, j: CurrentDensity) -> f64 {
        self.factor_at_bias(self.bias_at_density(j))
    }

    /// Current density at which the line is aligned with the cavity, when
    /// the alignment bias lies inside the bias-current table.
    pub fn alignment_density(&self) -> Option<CurrentDensity> {
        let v = self.emitter.alignment_bias(&self.mode)?;
        let (lo, hi) = self.bias_map.bias_range();
        (lo..=hi).contains(&v).then(|| self.density_at_bias(v))
    }
}
