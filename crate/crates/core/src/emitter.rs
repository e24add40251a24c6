//! Intersubband emitter: linear Stark shift of the electroluminescence line,
//! the mesa (cavity-free) spectrum, and the cubic energy scaling of the
//! spontaneous lifetime.

use serde::{Deserialize, Serialize};

use crate::cavity::CavityMode;
use crate::error::{finite, positive, Error, Result};
use crate::purcell::lorentzian;
use crate::quantities::{Energy, Lifetime};

/// Electroluminescence line whose peak moves linearly with bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkEmitter {
    /// Peak energy at the reference bias.
    pub reference_peak: Energy,
    pub reference_bias_v: f64,
    /// meV per volt.
    pub stark_slope: f64,
    /// Mesa linewidth ΔE_EL, taken bias independent.
    pub linewidth: Energy,
    /// Free-space spontaneous lifetime at `reference_peak`.
    pub spontaneous_lifetime: Lifetime,
    /// Bias interval the Stark law was calibrated on, if known.
    pub calibrated_bias: Option<(f64, f64)>,
}

impl StarkEmitter {
    /// Builds the emitter from its line quality Q_EL = E₀/ΔE_EL.
    pub fn from_quality(
        reference_peak: Energy,
        reference_bias_v: f64,
        stark_slope: f64,
        line_quality: f64,
        spontaneous_lifetime: Lifetime,
    ) -> Result<Self> {
        let e0 = positive("reference peak energy (meV)", reference_peak.mev())?;
        let q = positive("line quality Q_EL", line_quality)?;
        Ok(Self {
            reference_peak,
            reference_bias_v: finite("reference bias (V)", reference_bias_v)?,
            stark_slope: finite("Stark slope (meV/V)", stark_slope)?,
            linewidth: Energy::photon(e0 / q)?,
            spontaneous_lifetime,
            calibrated_bias: None,
        })
    }

    /// E_EL(V) = E₀ + κ(V − V₀).
    pub fn el_peak_energy(&self, bias_v: f64) -> Energy {
        Energy::new(self.reference_peak.mev() + self.stark_slope * (bias_v - self.reference_bias_v))
            .expect("finite inputs give a finite energy")
    }

    /// True when `bias_v` lies outside the calibrated bias interval.
    pub fn is_extrapolated(&self, bias_v: f64) -> bool {
        match self.calibrated_bias {
            Some((lo, hi)) => bias_v < lo || bias_v > hi,
            None => false,
        }
    }

    /// Q_EL = E_EL(V)/ΔE_EL.
    pub fn line_quality(&self, bias_v: f64) -> f64 {
        self.el_peak_energy(bias_v).mev() / self.linewidth.mev()
    }

    /// Unit-peak Lorentzian centred on E_EL(V) with FWHM ΔE_EL.
    pub fn mesa_spectrum(&self, bias_v: f64, energies: &[f64]) -> Vec<f64> {
        let centre = self.el_peak_energy(bias_v).mev();
        let width = self.linewidth.mev();
        energies.iter().map(|&e| lorentzian(e - centre, width)).collect()
    }

    /// ℏω_EL(V) − E_cav.
    pub fn detuning(&self, bias_v: f64, mode: &CavityMode) -> Energy {
        Energy::new(self.el_peak_energy(bias_v).mev() - mode.energy.mev()).expect("finite by construction")
    }

    /// Bias at which the emission line crosses the cavity resonance.
    pub fn alignment_bias(&self, mode: &CavityMode) -> Option<f64> {
        if self.stark_slope == 0.0 {
            return None;
        }
        Some(self.reference_bias_v + (mode.energy.mev() - self.reference_peak.mev()) / self.stark_slope)
    }
}

/// τ_sp(E) = τ_ref·(E_ref/E)³.
pub fn spontaneous_lifetime(energy: Energy, reference: Energy, tau_ref: Lifetime) -> Result<Lifetime> {
    let e = positive("photon energy (meV)", energy.mev())?;
    let r = positive("reference energy (meV)", reference.mev())?;
    Lifetime::new(tau_ref.seconds() * (r / e).powi(3))
}

/// Monotone bias → current table with linear interpolation, clamped to the
/// table hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCurrentMap {
    bias_v: Vec<f64>,
    current_ma: Vec<f64>,
}

impl BiasCurrentMap {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Input("bias-current map needs at least two points".into()));
        }
        let (bias_v, current_ma): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        if bias_v.iter().chain(&current_ma).any(|v| !v.is_finite()) {
            return Err(Error::Input("bias-current map contains non-finite values".into()));
        }
        if bias_v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("bias values must be strictly increasing".into()));
        }
        if current_ma.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Input("current must be non-decreasing in bias".into()));
        }
        if current_ma[0] < 0.0 {
            return Err(Error::Input("currents must be non-negative".into()));
        }
        Ok(Self { bias_v, current_ma })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.bias_v.iter().copied().zip(self.current_ma.iter().copied())
    }

    pub fn bias_range(&self) -> (f64, f64) {
        (self.bias_v[0], *self.bias_v.last().unwrap())
    }

    pub fn current_range_ma(&self) -> (f64, f64) {
        (self.current_ma[0], *self.current_ma.last().unwrap())
    }

    /// Current (mA) at `bias_v`.
    pub fn current_at(&self, bias_v: f64) -> f64 {
        let (v, i) = (&self.bias_v, &self.current_ma);
        if bias_v <= v[0] {
            return i[0];
        }
        if bias_v >= v[v.len() - 1] {
            return i[i.len() - 1];
        }
        let k = v.partition_point(|&x| x <= bias_v) - 1;
        i[k] + (i[k + 1] - i[k]) * (bias_v - v[k]) / (v[k + 1] - v[k])
    }

    /// Lowest bias (V) at which the current reaches `current_ma`.
    pub fn bias_at(&self, current_ma: f64) -> f64 {
        let (v, i) = (&self.bias_v, &self.current_ma);
        if current_ma <= i[0] {
            return v[0];
        }
        if current_ma >= i[i.len() - 1] {
            // first point of a possible final plateau
            let k = i.partition_point(|&x| x < i[i.len() - 1]);
            return v[k];
        }
        let k = i.partition_point(|&x| x < current_ma);
        // i[k-1] < current <= i[k]
        v[k - 1] + (v[k] - v[k - 1]) * (current_ma - i[k - 1]) / (i[k] - i[k - 1])
    }
}
