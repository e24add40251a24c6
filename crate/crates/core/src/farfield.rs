//! Far field of a phase-locked patch array.
//!
//! Elements are excited with uniform amplitude and phase. The intensity at
//! direction cosines (u, v) is |AF(u, v)|² times the element power pattern;
//! detector-plane maps use the exact (non-paraxial) mapping from plane
//! coordinates to direction cosines.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::profile::{fwhm, half_max};
use crate::quantities::Wavelength;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementPattern {
    Isotropic,
    /// cos θ field taper of a patch radiating above its ground plane.
    Cosine,
}

impl ElementPattern {
    /// Power pattern at direction cosines (u, v).
    #[inline]
    pub fn power(self, u: f64, v: f64) -> f64 {
        match self {
            ElementPattern::Isotropic => 1.0,
            ElementPattern::Cosine => (1.0 - u * u - v * v).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub nx: u32,
    pub ny: u32,
    pub pitch_um: f64,
    pub wavelength: Wavelength,
    pub element: ElementPattern,
    /// Multiplier on the effective pitch, hence on the coherent aperture.
    /// 1.0 models a fully phase-locked array of the physical size.
    pub aperture_scale: f64,
    /// Rigid translation of the whole array (µm).
    pub offset_um: [f64; 2],
}

impl ArrayGeometry {
    pub fn new(nx: u32, ny: u32, pitch_um: f64, wavelength: Wavelength, element: ElementPattern) -> Result<Self> {
        let g = Self {
            nx,
            ny,
            pitch_um,
            wavelength,
            element,
            aperture_scale: 1.0,
            offset_um: [0.0, 0.0],
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Input("array needs at least one element per side".into()));
        }
        positive("array pitch (um)", self.pitch_um)?;
        positive("aperture scale", self.aperture_scale)?;
        if !(self.offset_um[0].is_finite() && self.offset_um[1].is_finite()) {
            return Err(Error::Input("array offset must be finite".into()));
        }
        Ok(())
    }

    pub fn effective_pitch_um(&self) -> f64 {
        self.pitch_um * self.aperture_scale
    }

    /// Effective aperture (D_x, D_y) in µm.
    pub fn aperture_um(&self) -> (f64, f64) {
        let p = self.effective_pitch_um();
        (self.nx as f64 * p, self.ny as f64 * p)
    }

    /// Fraunhofer distance 2D²/λ (mm) of the larger aperture side.
    pub fn fraunhofer_distance_mm(&self) -> f64 {
        let (dx, dy) = self.aperture_um();
        let d = dx.max(dy);
        2.0 * d * d / self.wavelength.um() * 1e-3
    }

    fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength.um()
    }

    /// |AF|²·element power, without the visibility check.
    #[inline]
    pub(crate) fn intensity_unchecked(&self, u: f64, v: f64) -> f64 {
        // a rigid translation only contributes a unit-modulus phase
        let a = lattice_sum(self, u, v);
        a * a * self.element.power(u, v)
    }
}

/// Σ_m exp(i·ψ·(m − (N−1)/2)). Centred indexing makes the sum real, and
/// the cosine form keeps it exactly even in ψ.
#[inline]
fn linear_sum(n: u32, psi: f64) -> f64 {
    let centre = (n as f64 - 1.0) / 2.0;
    (0..n).map(|m| (psi * (m as f64 - centre)).cos()).sum()
}

/// Real product of the two centred line sums; the double sum over a
/// rectangular lattice factorizes exactly.
#[inline]
fn lattice_sum(g: &ArrayGeometry, u: f64, v: f64) -> f64 {
    let kp = g.wavenumber() * g.effective_pitch_um();
    linear_sum(g.nx, kp * u) * linear_sum(g.ny, kp * v)
}

#[inline]
fn array_factor_unchecked(g: &ArrayGeometry, u: f64, v: f64) -> Complex64 {
    let sum = Complex64::new(lattice_sum(g, u, v), 0.0);
    if g.offset_um == [0.0, 0.0] {
        sum
    } else {
        let k = g.wavenumber();
        sum * Complex64::from_polar(1.0, k * (g.offset_um[0] * u + g.offset_um[1] * v))
    }
}

/// AF(u, v) for unit-amplitude, uniform-phase elements on a centred lattice.
pub fn array_factor(geometry: &ArrayGeometry, u: f64, v: f64) -> Result<Complex64> {
    if !(u * u + v * v <= 1.0) {
        return Err(Error::Input(format!(
            "direction cosines ({u}, {v}) lie outside the visible region"
        )));
    }
    Ok(array_factor_unchecked(geometry, u, v))
}

/// θ = 2·atan(Δ/(2z)) in degrees.
pub fn divergence(width_mm: f64, distance_mm: f64) -> Result<f64> {
    let w = positive("spatial width (mm)", width_mm)?;
    let z = positive("detector distance (mm)", distance_mm)?;
    Ok((2.0 * (w / (2.0 * z)).atan()).to_degrees())
}

/// Intensity sampled on a detector plane at distance `z_mm`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FarFieldMap {
    pub z_mm: f64,
    pub xs_mm: Vec<f64>,
    pub ys_mm: Vec<f64>,
    /// Row-major, `ys` outer: `intensity[iy * xs.len() + ix]`. Unit max.
    pub intensity: Vec<f64>,
    pub delta_x_mm: f64,
    pub delta_y_mm: f64,
    pub theta_div_x_deg: f64,
    pub theta_div_y_deg: f64,
    pub aperture_scale: f64,
    pub warnings: Vec<String>,
}

impl FarFieldMap {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.intensity[iy * self.xs_mm.len() + ix]
    }

    pub fn row(&self, iy: usize) -> &[f64] {
        let n = self.xs_mm.len();
        &self.intensity[iy * n..(iy + 1) * n]
    }

    pub fn column(&self, ix: usize) -> Vec<f64> {
        (0..self.ys_mm.len()).map(|iy| self.at(ix, iy)).collect()
    }
}

fn symmetric_axis(half_extent_mm: f64, step_mm: f64) -> Result<Vec<f64>> {
    positive("grid half extent (mm)", half_extent_mm)?;
    positive("grid step (mm)", step_mm)?;
    let n = (half_extent_mm / step_mm).round() as i64;
    if n < 2 {
        return Err(Error::Input("grid must hold at least 5 points per axis".into()));
    }
    Ok((-n..=n).map(|k| k as f64 * step_mm).collect())
}

/// Samples the normalized intensity on a square-gridded detector plane and
/// extracts the FWHM through the beam centre along x and y.
pub fn intensity_map(
    geometry: &ArrayGeometry,
    z_mm: f64,
    half_extent_mm: [f64; 2],
    step_mm: f64,
) -> Result<FarFieldMap> {
    geometry.validate()?;
    let z = positive("detector distance (mm)", z_mm)?;
    let xs = symmetric_axis(half_extent_mm[0], step_mm)?;
    let ys = symmetric_axis(half_extent_mm[1], step_mm)?;

    let mut warnings = Vec::new();
    let fraunhofer = geometry.fraunhofer_distance_mm();
    if z < fraunhofer {
        warnings.push(format!(
            "detector distance {z} mm is inside the Fraunhofer distance {fraunhofer:.3} mm"
        ));
    }
    if geometry.aperture_scale != 1.0 {
        warnings.push(format!("aperture scale set to {}", geometry.aperture_scale));
    }

    let nx = xs.len();
    let mut intensity: Vec<f64> = ys
        .par_iter()
        .flat_map_iter(|&y| {
            xs.iter().map(move |&x| {
                let r = (x * x + y * y + z * z).sqrt();
                geometry.intensity_unchecked(x / r, y / r)
            })
        })
        .collect();

    let max = intensity.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::Analysis("far-field map is identically zero".into()));
    }
    intensity.iter_mut().for_each(|v| *v /= max);
    let imax = intensity
        .iter()
        .position(|&v| v == 1.0)
        .expect("normalized maximum present");
    let (ix, iy) = (imax % nx, imax / nx);
    if ix == 0 || iy == 0 || ix == nx - 1 || iy == ys.len() - 1 {
        return Err(Error::Analysis(
            "intensity maximum lies on the grid boundary; the main lobe is not enclosed".into(),
        ));
    }

    let mut map = FarFieldMap {
        z_mm: z,
        xs_mm: xs,
        ys_mm: ys,
        intensity,
        delta_x_mm: 0.0,
        delta_y_mm: 0.0,
        theta_div_x_deg: 0.0,
        theta_div_y_deg: 0.0,
        aperture_scale: geometry.aperture_scale,
        warnings,
    };
    map.delta_x_mm = fwhm(&map.xs_mm, map.row(iy))?;
    map.delta_y_mm = fwhm(&map.ys_mm, &map.column(ix))?;
    map.theta_div_x_deg = divergence(map.delta_x_mm, z)?;
    map.theta_div_y_deg = divergence(map.delta_y_mm, z)?;
    Ok(map)
}

/// Which principal plane to cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Angular FWHM (degrees) of the main lobe in a principal plane, from
/// `samples` evenly spaced angles across ±`span_deg`.
pub fn main_lobe_fwhm_deg(geometry: &ArrayGeometry, axis: Axis, span_deg: f64, samples: usize) -> Result<f64> {
    let span = positive("angular span (deg)", span_deg)?.min(90.0);
    let thetas = crate::profile::linspace(-span, span, samples.max(5));
    let profile: Vec<f64> = thetas
        .iter()
        .map(|t| {
            let s = t.to_radians().sin();
            match axis {
                Axis::X => geometry.intensity_unchecked(s, 0.0),
                Axis::Y => geometry.intensity_unchecked(0.0, s),
            }
        })
        .collect();
    Ok(half_max(&thetas, &profile)?.width())
}

/// Highest intensity outside the main lobe relative to the peak (dB), from
/// a grid scan of the visible disk. The main lobe is the rectangle bounded
/// by the first nulls |u| < λ/(N_x p), |v| < λ/(N_y p).
pub fn peak_sidelobe_db(geometry: &ArrayGeometry, samples_per_lobe: usize) -> f64 {
    let p = geometry.effective_pitch_um();
    let lambda = geometry.wavelength.um();
    let null_u = lambda / (geometry.nx as f64 * p);
    let null_v = lambda / (geometry.ny as f64 * p);
    let step = null_u.min(null_v) / samples_per_lobe.max(2) as f64;
    let n = (1.0 / step).ceil() as i64;
    let peak = geometry.intensity_unchecked(0.0, 0.0);
    let worst = (-n..=n)
        .into_par_iter()
        .map(|i| {
            let u = i as f64 * step;
            let mut local = 0.0f64;
            for k in -n..=n {
                let v = k as f64 * step;
                if u * u + v * v > 1.0 || (u.abs() < null_u && v.abs() < null_v) {
                    continue;
                }
                local = local.max(geometry.intensity_unchecked(u, v));
            }
            local
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    10.0 * (worst / peak).log10()
}

const GAUSS_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GAUSS_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Composite 8-point Gauss-Legendre nodes and weights on [a, b].
fn composite_gauss(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * 8);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

/// ∫ intensity dΩ over the upper hemisphere with `theta_panels` ×
/// `phi_panels` Gauss-Legendre panels. Rows are summed in a fixed order.
fn hemisphere_power(geometry: &ArrayGeometry, theta_panels: usize, phi_panels: usize) -> f64 {
    let thetas = composite_gauss(0.0, PI / 2.0, theta_panels);
    let phis = composite_gauss(0.0, 2.0 * PI, phi_panels);
    let rows: Vec<f64> = thetas
        .par_iter()
        .map(|&(theta, wt)| {
            let (st, _) = theta.sin_cos();
            let ring: f64 = phis
                .iter()
                .map(|&(phi, wp)| {
                    let (sp, cp) = phi.sin_cos();
                    wp * geometry.intensity_unchecked(st * cp, st * sp)
                })
                .sum();
            wt * st * ring
        })
        .collect();
    rows.iter().sum()
}

/// Result of the directivity quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Directivity {
    pub value: f64,
    /// Relative change between the last two refinements.
    pub relative_change: f64,
    pub theta_panels: usize,
    pub phi_panels: usize,
}

/// D = 4π·I_max / ∫ I dΩ.
///
/// A cosine-tapered patch radiates only above its ground plane; an isotropic
/// element radiates into both half-spaces, which doubles the hemisphere
/// integral. The panel counts are doubled until successive estimates agree
/// to `rel_tol`.
pub fn directivity(geometry: &ArrayGeometry, rel_tol: f64) -> Result<Directivity> {
    geometry.validate()?;
    let peak = geometry.intensity_unchecked(0.0, 0.0);
    let sides = match geometry.element {
        ElementPattern::Isotropic => 2.0,
        ElementPattern::Cosine => 1.0,
    };
    // start with panels comparable to the lobe spacing
    let lobes = (geometry.nx.max(geometry.ny) as f64 * geometry.effective_pitch_um() / geometry.wavelength.um()).ceil()
        as usize;
    let mut theta_panels = (lobes / 2).max(4);
    let mut phi_panels = (2 * lobes).max(8);
    let estimate = |t: usize, p: usize| 4.0 * PI * peak / (sides * hemisphere_power(geometry, t, p));
    let mut previous = estimate(theta_panels, phi_panels);
    for _ in 0..10 {
        theta_panels *= 2;
        phi_panels *= 2;
        let current = estimate(theta_panels, phi_panels);
        let change = ((current - previous) / current).abs();
        if change < rel_tol {
            return Ok(Directivity {
                value: current,
                relative_change: change,
                theta_panels,
                phi_panels,
            });
        }
        previous = current;
    }
    Err(Error::Analysis(format!(
        "directivity quadrature did not reach relative tolerance {rel_tol}"
    )))
}
