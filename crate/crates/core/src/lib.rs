//! Models of a patch-antenna microcavity array with an intersubband
//! emitter: cavity resonance, Stark-tuned emission, Purcell enhancement,
//! rate equations, spectral filtering, array far field and fitting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::approx_constant))]

pub mod cavity;
pub mod config;
pub mod device;
pub mod emitter;
pub mod error;
pub mod farfield;
pub mod fitting;
pub mod profile;
pub mod purcell;
pub mod quantities;
pub mod ratemodel;
pub mod spectra;
pub mod table;

pub use cavity::{CavityMode, PatchCavity};
pub use config::DeviceConfig;
pub use device::Device;
pub use emitter::{BiasCurrentMap, StarkEmitter};
pub use error::{Error, ErrorKind, Result};
pub use farfield::{ArrayGeometry, ElementPattern, FarFieldMap};
pub use fitting::FitResult;
pub use purcell::PurcellDrive;
pub use quantities::{CurrentDensity, Energy, Lifetime, Rate, Wavelength};
pub use ratemodel::{CascadeParams, ConstantPurcell, PurcellProfile, RateState, SteadyState};
pub use spectra::EmissionSpectrum;
pub use table::{MeasurementTable, OutputMeta, Schema};
