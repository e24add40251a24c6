//! Device configuration: a single JSON document with four sections.
//!
//! Every field has a default. Fields missing from the document, and fields
//! given a note under `provenance`, are listed in [`DeviceConfig::assumed`]
//! with that note. The list travels into every output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::farfield::ElementPattern;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityConfig {
    pub s_um: f64,
    #[serde(rename = "H_um")]
    pub h_um: f64,
    pub p_um: f64,
    #[serde(rename = "Nx")]
    pub nx: u32,
    #[serde(rename = "Ny")]
    pub ny: u32,
    pub n_mode: f64,
    #[serde(rename = "Q_cav")]
    pub q_cav: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self {
            s_um: 1.4,
            h_um: 0.75,
            p_um: 7.0,
            nx: 10,
            ny: 10,
            n_mode: 3.5714,
            q_cav: 14.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmitterConfig {
    #[serde(rename = "E0_meV")]
    pub e0_mev: f64,
    #[serde(rename = "V0_V")]
    pub v0_v: f64,
    #[serde(rename = "kappa_meV_per_V")]
    pub kappa_mev_per_v: f64,
    #[serde(rename = "Q_EL")]
    pub q_el: f64,
    pub tau_sp_ns: f64,
    /// (bias V, current mA) pairs.
    pub bias_map: Vec<[f64; 2]>,
    /// Emitter quality used in the Purcell Q; `None` means `Q_EL`.
    #[serde(rename = "purcell_Q_EL")]
    pub purcell_q_el: Option<f64>,
}

impl Default for EmitterConfig {
    fn default() -> Self {
        Self {
            e0_mev: 130.0,
            v0_v: 4.5,
            kappa_mev_per_v: 15.0,
            q_el: 9.0,
            tau_sp_ns: 50.0,
            bias_map: vec![
                [3.0, 0.0],
                [4.0, 0.5],
                [4.5, 3.0],
                [5.0, 7.0],
                [6.0, 15.0],
                [7.0, 25.0],
                [8.0, 40.0],
                [9.0, 60.0],
            ],
            purcell_q_el: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CascadeConfig {
    #[serde(rename = "Lp_nm")]
    pub lp_nm: f64,
    pub tau3_ps: f64,
    pub tau2_ps: f64,
    pub tau32_ps: f64,
    #[serde(rename = "Gamma_tot_per_s")]
    pub gamma_tot_per_s: f64,
    pub radiative_fraction: f64,
    #[serde(rename = "Jth_kA_cm2")]
    pub jth_ka_cm2: f64,
    pub collection_efficiency: f64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self {
            lp_nm: 50.0,
            tau3_ps: 1.0,
            tau2_ps: 0.2,
            tau32_ps: 2.0,
            gamma_tot_per_s: 1e12,
            radiative_fraction: 0.8,
            jth_ka_cm2: 25.0,
            collection_efficiency: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FarFieldConfig {
    pub z_mm: f64,
    /// Half-width of the square detector window.
    pub grid_mm: f64,
    pub step_mm: f64,
    pub element_pattern: ElementPattern,
    pub aperture_scale: f64,
}

impl Default for FarFieldConfig {
    fn default() -> Self {
        Self {
            z_mm: 50.0,
            grid_mm: 10.0,
            step_mm: 0.05,
            element_pattern: ElementPattern::Cosine,
            aperture_scale: 1.0,
        }
    }
}

/// A defaulted field and where its value comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assumption {
    pub field: String,
    pub assumed: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    pub cavity: CavityConfig,
    pub emitter: EmitterConfig,
    pub cascade: CascadeConfig,
    pub farfield: FarFieldConfig,
    /// User notes keyed by field path, e.g. `"cascade.tau3_ps"`.
    pub provenance: BTreeMap<String, String>,
    #[serde(skip_deserializing)]
    pub assumed: Vec<Assumption>,
    /// SHA-256 of the configuration bytes, lowercase hex.
    #[serde(skip_deserializing)]
    pub digest: String,
}

const REPORTED: &str = "reported device value";
const ASSUMED: &str = "modelling assumption, not measured";

/// Default provenance per field path.
const DEFAULT_NOTES: &[(&str, &str)] = &[
    ("cavity.s_um", REPORTED),
    ("cavity.H_um", REPORTED),
    ("cavity.p_um", REPORTED),
    ("cavity.Nx", REPORTED),
    ("cavity.Ny", REPORTED),
    ("cavity.n_mode", "chosen so a 1.4 um patch resonates at 10 um"),
    ("cavity.Q_cav", REPORTED),
    ("emitter.E0_meV", REPORTED),
    ("emitter.V0_V", "alignment bias of the reported spectra"),
    ("emitter.kappa_meV_per_V", ASSUMED),
    ("emitter.Q_EL", REPORTED),
    ("emitter.tau_sp_ns", ASSUMED),
    ("emitter.bias_map", ASSUMED),
    ("emitter.purcell_Q_EL", "equal to Q_EL"),
    ("cascade.Lp_nm", ASSUMED),
    ("cascade.tau3_ps", ASSUMED),
    ("cascade.tau2_ps", ASSUMED),
    ("cascade.tau32_ps", ASSUMED),
    ("cascade.Gamma_tot_per_s", REPORTED),
    ("cascade.radiative_fraction", REPORTED),
    ("cascade.Jth_kA_cm2", "fitted threshold used to calibrate the gain"),
    ("cascade.collection_efficiency", ASSUMED),
    ("farfield.z_mm", REPORTED),
    ("farfield.grid_mm", ASSUMED),
    ("farfield.step_mm", ASSUMED),
    (
        "farfield.element_pattern",
        "cosine taper of a patch above a ground plane",
    ),
    ("farfield.aperture_scale", "fully phase-locked physical aperture"),
];

fn present(doc: &serde_json::Value, path: &str) -> bool {
    let (section, key) = path.split_once('.').expect("dotted path");
    doc.get(section).and_then(|s| s.get(key)).is_some()
}

fn check(ok: bool, field: &str, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, constraint))
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    check(
        value.is_finite() && value > 0.0,
        field,
        &format!("must be finite and > 0, got {value}"),
    )
}

impl DeviceConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    /// Parses, applies defaults, records assumptions and validates. Empty or
    /// whitespace-only input is the all-default document.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Input(format!("config is not UTF-8: {e}")))?;
        let doc: serde_json::Value = if text.trim().is_empty() {
            serde_json::Value::Object(Default::default())
        } else {
            serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?
        };
        if !doc.is_object() {
            return Err(Error::config("<document>", "top level must be a JSON object"));
        }
        let mut config: DeviceConfig =
            serde_json::from_value(doc.clone()).map_err(|e| Error::config("<document>", e.to_string()))?;
        config.digest = hex_digest(bytes);
        config.assumed = DEFAULT_NOTES
            .iter()
            .filter(|(path, _)| !present(&doc, path) || config.provenance.contains_key(*path))
            .map(|(path, note)| Assumption {
                field: path.to_string(),
                assumed: true,
                note: config
                    .provenance
                    .get(*path)
                    .cloned()
                    .unwrap_or_else(|| note.to_string()),
            })
            .collect();
        config.validate()?;
        Ok(config)
    }

    pub fn assumed_fields(&self) -> Vec<&str> {
        self.assumed.iter().map(|a| a.field.as_str()).collect()
    }

    pub fn is_assumed(&self, field: &str) -> bool {
        self.assumed.iter().any(|a| a.field == field)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.cavity;
        positive("cavity.s_um", c.s_um)?;
        positive("cavity.H_um", c.h_um)?;
        positive("cavity.p_um", c.p_um)?;
        check(c.s_um <= c.p_um, "cavity.s_um", "must not exceed cavity.p_um")?;
        check(c.nx >= 1, "cavity.Nx", "must be >= 1")?;
        check(c.ny >= 1, "cavity.Ny", "must be >= 1")?;
        check(
            c.n_mode.is_finite() && c.n_mode > 1.0,
            "cavity.n_mode",
            "must be finite and > 1",
        )?;
        positive("cavity.Q_cav", c.q_cav)?;

        let e = &self.emitter;
        positive("emitter.E0_meV", e.e0_mev)?;
        check(e.v0_v.is_finite(), "emitter.V0_V", "must be finite")?;
        check(
            e.kappa_mev_per_v.is_finite(),
            "emitter.kappa_meV_per_V",
            "must be finite",
        )?;
        positive("emitter.Q_EL", e.q_el)?;
        positive("emitter.tau_sp_ns", e.tau_sp_ns)?;
        if let Some(q) = e.purcell_q_el {
            positive("emitter.purcell_Q_EL", q)?;
        }
        let points: Vec<(f64, f64)> = e.bias_map.iter().map(|p| (p[0], p[1])).collect();
        crate::emitter::BiasCurrentMap::new(&points)
            .map_err(|err| Error::config("emitter.bias_map", err.to_string()))?;

        let k = &self.cascade;
        positive("cascade.Lp_nm", k.lp_nm)?;
        positive("cascade.tau3_ps", k.tau3_ps)?;
        positive("cascade.tau2_ps", k.tau2_ps)?;
        positive("cascade.tau32_ps", k.tau32_ps)?;
        check(
            k.tau3_ps <= k.tau32_ps,
            "cascade.tau3_ps",
            "must not exceed cascade.tau32_ps",
        )?;
        check(
            k.tau2_ps < k.tau32_ps,
            "cascade.tau2_ps",
            "must be below cascade.tau32_ps for population inversion",
        )?;
        positive("cascade.Gamma_tot_per_s", k.gamma_tot_per_s)?;
        check(
            (0.0..=1.0).contains(&k.radiative_fraction),
            "cascade.radiative_fraction",
            "must lie in [0, 1]",
        )?;
        positive("cascade.Jth_kA_cm2", k.jth_ka_cm2)?;
        check(
            k.collection_efficiency > 0.0 && k.collection_efficiency <= 1.0,
            "cascade.collection_efficiency",
            "must lie in (0, 1]",
        )?;

        let f = &self.farfield;
        positive("farfield.z_mm", f.z_mm)?;
        positive("farfield.grid_mm", f.grid_mm)?;
        positive("farfield.step_mm", f.step_mm)?;
        check(
            f.step_mm * 2.0 <= f.grid_mm,
            "farfield.step_mm",
            "must be at most half of farfield.grid_mm",
        )?;
        positive("farfield.aperture_scale", f.aperture_scale)?;

        for key in self.provenance.keys() {
            check(
                DEFAULT_NOTES.iter().any(|(p, _)| p == key),
                &format!("provenance.{key}"),
                "names no config field",
            )?;
        }
        Ok(())
    }

    /// Resolved configuration with digest and assumption list, for
    /// embedding in summaries.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
