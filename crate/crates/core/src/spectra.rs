//! Cavity-filtered electroluminescence and linewidth narrowing.
//!
//! The in-cavity spectrum is modelled as the product of the mesa emission
//! line and the cavity Lorentzian. No gain narrowing is included.

use serde::Serialize;

use crate::cavity::CavityMode;
use crate::emitter::StarkEmitter;
use crate::error::{Error, Result};
use crate::profile::{ensure_unimodal, half_max, linspace};
use crate::purcell::lorentzian;

/// Minimum number of grid points for linewidth extraction.
pub const MIN_GRID_POINTS: usize = 2000;
/// Required half-span of the grid in units of the narrower linewidth.
pub const MIN_SPAN_LINEWIDTHS: f64 = 10.0;
/// Secondary maxima more prominent than this fraction of the peak make a
/// spectrum multimodal.
pub const MULTIMODAL_PROMINENCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmissionSpectrum {
    pub energies_mev: Vec<f64>,
    /// Unit-peak intensity.
    pub intensity: Vec<f64>,
    pub peak_mev: f64,
    pub fwhm_mev: f64,
}

impl EmissionSpectrum {
    fn from_samples(energies_mev: Vec<f64>, raw: Vec<f64>) -> Result<Self> {
        let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return Err(Error::Analysis("spectrum vanishes on the grid".into()));
        }
        let intensity: Vec<f64> = raw.iter().map(|v| v / max).collect();
        let hm = half_max(&energies_mev, &intensity)?;
        Ok(Self {
            energies_mev,
            intensity,
            peak_mev: hm.peak_x,
            fwhm_mev: hm.width(),
        })
    }

    /// Peak energy over FWHM.
    pub fn quality(&self) -> f64 {
        self.peak_mev / self.fwhm_mev
    }
}

/// A grid meeting the extraction requirements for `emitter` at `bias_v`
/// in front of `mode`.
pub fn analysis_grid(emitter: &StarkEmitter, bias_v: f64, mode: &CavityMode, points: usize) -> Vec<f64> {
    let a = emitter.el_peak_energy(bias_v).mev();
    let b = mode.energy.mev();
    // the wider line sets the span so both the mesa and filtered checks pass
    let wide = emitter.linewidth.mev().max(mode.linewidth().mev());
    let pad = MIN_SPAN_LINEWIDTHS * wide * 1.001;
    linspace(a.min(b) - pad, a.max(b) + pad, points.max(MIN_GRID_POINTS))
}

fn check_grid(energies: &[f64], centres: &[f64], narrow: f64) -> Result<()> {
    if energies.len() < MIN_GRID_POINTS {
        return Err(Error::Input(format!(
            "spectral grid has {} points; at least {MIN_GRID_POINTS} required",
            energies.len()
        )));
    }
    if energies.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("spectral grid must be strictly increasing".into()));
    }
    let (lo, hi) = (energies[0], energies[energies.len() - 1]);
    let pad = MIN_SPAN_LINEWIDTHS * narrow;
    for &c in centres {
        if c - pad < lo || c + pad > hi {
            return Err(Error::Input(format!(
                "spectral grid [{lo}, {hi}] meV does not span ±{MIN_SPAN_LINEWIDTHS} linewidths ({pad} meV) around {c} meV"
            )));
        }
    }
    Ok(())
}

/// Mesa emission line at `bias_v`.
pub fn mesa_emission(emitter: &StarkEmitter, bias_v: f64, energies: &[f64]) -> Result<EmissionSpectrum> {
    let centre = emitter.el_peak_energy(bias_v).mev();
    check_grid(energies, &[centre], emitter.linewidth.mev())?;
    EmissionSpectrum::from_samples(energies.to_vec(), emitter.mesa_spectrum(bias_v, energies))
}

/// Mesa line multiplied by the cavity Lorentzian, renormalized to unit peak.
pub fn filtered_spectrum(
    emitter: &StarkEmitter,
    bias_v: f64,
    mode: &CavityMode,
    energies: &[f64],
) -> Result<EmissionSpectrum> {
    let line = emitter.el_peak_energy(bias_v).mev();
    let cav = mode.energy.mev();
    let cav_width = mode.linewidth().mev();
    let narrow = emitter.linewidth.mev().min(cav_width);
    check_grid(energies, &[line, cav], narrow)?;
    let mesa = emitter.mesa_spectrum(bias_v, energies);
    let product = energies
        .iter()
        .zip(mesa)
        .map(|(&e, m)| m * lorentzian(e - cav, cav_width))
        .collect();
    let spectrum = EmissionSpectrum::from_samples(energies.to_vec(), product)?;
    ensure_unimodal(&spectrum.intensity, MULTIMODAL_PROMINENCE)?;
    Ok(spectrum)
}

/// Q = peak energy / FWHM, with half-max crossings interpolated linearly.
pub fn spectrum_quality_factor(spectrum: &EmissionSpectrum) -> Result<f64> {
    ensure_unimodal(&spectrum.intensity, MULTIMODAL_PROMINENCE)?;
    let hm = half_max(&spectrum.energies_mev, &spectrum.intensity)?;
    Ok(hm.peak_x / hm.width())
}

/// Mesa FWHM over filtered FWHM.
pub fn narrowing_factor(mesa: &EmissionSpectrum, filtered: &EmissionSpectrum) -> f64 {
    mesa.fwhm_mev / filtered.fwhm_mev
}
