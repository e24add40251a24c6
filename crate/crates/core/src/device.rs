//! Model objects assembled from a [`DeviceConfig`].

use crate::cavity::{CavityMode, PatchCavity};
use crate::config::DeviceConfig;
use crate::emitter::{BiasCurrentMap, StarkEmitter};
use crate::error::{Error, Result};
use crate::farfield::ArrayGeometry;
use crate::purcell::PurcellDrive;
use crate::quantities::{CurrentDensity, Energy, Lifetime, Rate};
use crate::ratemodel::CascadeParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub cavity: PatchCavity,
    pub mode: CavityMode,
    pub emitter: StarkEmitter,
    pub drive: PurcellDrive,
    pub cascade: CascadeParams,
    pub collection_efficiency: f64,
    pub array: ArrayGeometry,
}

fn field<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(name, other.to_string()),
    })
}

impl Device {
    pub fn from_config(config: &DeviceConfig) -> Result<Self> {
        let c = &config.cavity;
        let cavity = field("cavity", PatchCavity::new(c.s_um, c.h_um, c.p_um, c.nx, c.ny, c.n_mode))?;
        let mode = field("cavity.Q_cav", CavityMode::of(&cavity, c.q_cav))?;

        let e = &config.emitter;
        let tau_sp = field("emitter.tau_sp_ns", Lifetime::from_ns(e.tau_sp_ns))?;
        let emitter = field(
            "emitter",
            StarkEmitter::from_quality(Energy::photon(e.e0_mev)?, e.v0_v, e.kappa_mev_per_v, e.q_el, tau_sp),
        )?;
        let points: Vec<(f64, f64)> = e.bias_map.iter().map(|p| (p[0], p[1])).collect();
        let bias_map = field("emitter.bias_map", BiasCurrentMap::new(&points))?;
        let mut emitter = emitter;
        emitter.calibrated_bias = Some(bias_map.bias_range());
        let drive = field(
            "emitter.purcell_Q_EL",
            PurcellDrive::new(emitter, &cavity, mode, bias_map, e.purcell_q_el.unwrap_or(e.q_el)),
        )?;

        let k = &config.cascade;
        let cascade = field(
            "cascade",
            CascadeParams::calibrated(
                k.lp_nm,
                Lifetime::from_ps(k.tau3_ps)?,
                Lifetime::from_ps(k.tau2_ps)?,
                Lifetime::from_ps(k.tau32_ps)?,
                tau_sp,
                Rate::new(k.gamma_tot_per_s)?,
                k.radiative_fraction,
                CurrentDensity::from_ka_per_cm2(k.jth_ka_cm2)?,
            ),
        )?;

        let f = &config.farfield;
        let mut array = field(
            "farfield",
            ArrayGeometry::new(c.nx, c.ny, c.p_um, mode.wavelength, f.element_pattern),
        )?;
        array.aperture_scale = f.aperture_scale;
        field("farfield.aperture_scale", array.validate())?;

        Ok(Self {
            cavity,
            mode,
            emitter,
            drive,
            cascade,
            collection_efficiency: k.collection_efficiency,
            array,
        })
    }
}
