//! Least-squares parameter extraction.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{reflectivity_spectrum, CavityMode};
use crate::error::{positive, Error, Result};
use crate::quantities::{energy_to_wavelength, CurrentDensity, Energy, ELEMENTARY_CHARGE};
use crate::ratemodel::{photon_density_curve, CascadeParams, PurcellProfile};

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-8;
/// Relative forward-difference step for Jacobians.
pub const FD_STEP: f64 = 1e-6;
/// Smallest eigenvalue ratio of the scaled normal matrix still treated as
/// full rank.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain numeric struct")
    }
}

/// Inclusive box constraint per parameter.
pub type Bounds = [(f64, f64)];

fn project(p: &mut [f64], bounds: Option<&Bounds>) {
    if let Some(b) = bounds {
        for (x, &(lo, hi)) in p.iter_mut().zip(b) {
            *x = x.clamp(lo, hi);
        }
    }
}

fn residuals<F>(model: &F, params: &[f64], data: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let predicted = model(params)?;
    if predicted.len() != data.len() {
        return Err(Error::Input(format!(
            "model returned {} samples for {} data points",
            predicted.len(),
            data.len()
        )));
    }
    Ok(predicted.iter().zip(data).map(|(m, d)| m - d).collect())
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// Forward-difference Jacobian of the residuals. Steps go backwards when
/// the forward point would leave the box.
fn jacobian<F>(model: &F, params: &[f64], data: &[f64], r0: &[f64], bounds: Option<&Bounds>) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let (m, n) = (data.len(), params.len());
    let mut jac = DMatrix::zeros(m, n);
    let mut shifted = params.to_vec();
    for j in 0..n {
        let mut h = FD_STEP * params[j].abs().max(FD_STEP);
        if let Some(b) = bounds {
            if params[j] + h > b[j].1 {
                h = -h;
            }
        }
        shifted[j] = params[j] + h;
        let h = shifted[j] - params[j];
        let r = residuals(model, &shifted, data)?;
        for i in 0..m {
            jac[(i, j)] = (r[i] - r0[i]) / h;
        }
        shifted[j] = params[j];
    }
    Ok(jac)
}

/// Fails when the correlation-scaled normal matrix is numerically singular.
fn check_rank(normal: &DMatrix<f64>) -> Result<()> {
    let n = normal.nrows();
    let diag: Vec<f64> = (0..n).map(|i| normal[(i, i)]).collect();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| normal[(i, j)] / (diag[i].sqrt() * diag[j].sqrt()));
    let eig = SymmetricEigen::new(scaled).eigenvalues;
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    let ratio = min / max;
    if !(ratio > RANK_TOLERANCE) {
        return Err(Error::RankDeficient { ratio });
    }
    Ok(())
}

fn relative_step(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(a, b)| (b - a).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn standard_errors(normal: &DMatrix<f64>, rss: f64, dof: usize) -> Vec<f64> {
    let n = normal.nrows();
    if dof == 0 {
        return vec![0.0; n];
    }
    let sigma2 = rss / dof as f64;
    match normal.clone().try_inverse() {
        Some(inv) => (0..n).map(|i| (inv[(i, i)].max(0.0) * sigma2).sqrt()).collect(),
        None => vec![f64::NAN; n],
    }
}

/// Damped Gauss-Newton (Levenberg-Marquardt) minimization of
/// Σ (model(p) − data)².
///
/// Each iteration first tries the undamped step, raising the damping only
/// when the residual grows. Hitting the iteration cap returns a result with
/// `converged == false`.
pub fn least_squares<F>(model: F, data: &[f64], initial: &[f64], bounds: Option<&Bounds>) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = initial.len();
    if n == 0 {
        return Err(Error::Input("no parameters to fit".into()));
    }
    if data.len() < 2 * n {
        return Err(Error::Input(format!(
            "{} data points for {n} parameters; need at least {}",
            data.len(),
            2 * n
        )));
    }
    if data.iter().chain(initial).any(|v| !v.is_finite()) {
        return Err(Error::Input("data and initial guess must be finite".into()));
    }
    if let Some(b) = bounds {
        if b.len() != n {
            return Err(Error::Input("one bound pair per parameter required".into()));
        }
        if initial.iter().zip(b).any(|(x, (lo, hi))| !(lo <= x && x <= hi)) {
            return Err(Error::Input("initial guess outside bounds".into()));
        }
    }

    let mut p = initial.to_vec();
    let mut r = residuals(&model, &p, data)?;
    let mut rss = sum_sq(&r);
    let mut lambda = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS && !converged {
        iterations += 1;
        let jac = jacobian(&model, &p, data, &r, bounds)?;
        let normal = jac.transpose() * &jac;
        check_rank(&normal)?;
        let gradient = jac.transpose() * DVector::from_column_slice(&r);

        loop {
            let mut damped = normal.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * normal[(i, i)];
            }
            let Some(chol) = damped.cholesky() else {
                lambda = (lambda * 10.0).max(1e-3);
                continue;
            };
            let delta = chol.solve(&(-&gradient));
            let mut trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            project(&mut trial, bounds);
            let step = relative_step(&p, &trial);
            let trial_r = residuals(&model, &trial, data)
                .ok()
                .filter(|r| r.iter().all(|v| v.is_finite()));
            let trial_rss = trial_r.as_deref().map(sum_sq).unwrap_or(f64::INFINITY);

            if trial_rss <= rss {
                p = trial;
                r = trial_r.expect("finite residuals");
                rss = trial_rss;
                lambda = if lambda < 1e-9 { 0.0 } else { lambda / 10.0 };
                converged = step < STEP_TOLERANCE;
                break;
            }
            if step < STEP_TOLERANCE {
                // no representable descent left at this damping
                converged = true;
                break;
            }
            lambda = (lambda * 10.0).max(1e-3);
            if lambda > 1e20 {
                break;
            }
        }
    }

    let jac = jacobian(&model, &p, data, &r, bounds)?;
    let normal = jac.transpose() * &jac;
    Ok(FitResult {
        stderr: standard_errors(&normal, rss, data.len() - n),
        params: p,
        rss,
        iterations,
        converged,
    })
}

/// Runs [`least_squares`] from every start concurrently and keeps the
/// lowest residual, earliest start first on ties.
pub fn least_squares_multistart<F>(
    model: F,
    data: &[f64],
    starts: &[Vec<f64>],
    bounds: Option<&Bounds>,
) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let results: Vec<Result<FitResult>> = starts
        .par_iter()
        .map(|s| least_squares(&model, data, s, bounds))
        .collect();
    let mut best: Option<FitResult> = None;
    let mut first_error = None;
    for r in results {
        match r {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.rss < b.rss) {
                    best = Some(fit);
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_error.unwrap_or_else(|| Error::Input("no starting points".into())))
}

/// max_j |J_jᵀ r| / (‖J_j‖·‖r‖) with the same forward-difference Jacobian
/// the solver uses. Exact fits (‖r‖ at rounding level) report 0.
pub fn first_order_optimality<F>(model: F, data: &[f64], params: &[f64], bounds: Option<&Bounds>) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let r = residuals(&model, params, data)?;
    let r_norm = sum_sq(&r).sqrt();
    let scale = sum_sq(data).sqrt();
    if r_norm <= 1e-12 * scale {
        return Ok(0.0);
    }
    let jac = jacobian(&model, params, data, &r, bounds)?;
    let rv = DVector::from_column_slice(&r);
    Ok(jac
        .column_iter()
        .map(|c| {
            let cn = c.norm();
            if cn == 0.0 {
                0.0
            } else {
                c.dot(&rv).abs() / (cn * r_norm)
            }
        })
        .fold(0.0, f64::max))
}

/// Reflectivity model R(E) = 1 − depth·ℒ(E − E_cav, E_cav/Q) with
/// parameters `[E_cav (meV), Q_cav, depth]`.
pub fn cavity_dip_model(energies: &[f64], params: &[f64]) -> Result<Vec<f64>> {
    let energy = Energy::photon(params[0])?;
    let mode = CavityMode {
        energy,
        quality: positive("cavity quality factor", params[1])?,
        wavelength: energy_to_wavelength(energy)?,
        volume_um3: 1.0,
    };
    reflectivity_spectrum(&mode, params[2], energies)
}

/// Fits the cavity reflectivity dip; parameters are `[E_cav, Q_cav, depth]`.
pub fn fit_cavity_lorentzian(energies: &[f64], reflectivity: &[f64]) -> Result<FitResult> {
    if energies.len() != reflectivity.len() {
        return Err(Error::Input("energy and reflectivity columns differ in length".into()));
    }
    if energies.len() < 6 {
        return Err(Error::Input("reflectivity spectrum needs at least 6 points".into()));
    }
    let (imin, &rmin) = reflectivity
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let rmax = reflectivity.iter().cloned().fold(f64::MIN, f64::max);
    let depth = rmax - rmin;
    if !(depth > 1e-6) {
        return Err(Error::Analysis("reflectivity spectrum shows no dip".into()));
    }
    let e0 = energies[imin];
    // width from the half-depth crossings, or a tenth of the span
    let half = rmin + depth / 2.0;
    let left = energies[..imin]
        .iter()
        .zip(&reflectivity[..imin])
        .rev()
        .find(|(_, &r)| r >= half);
    let right = energies[imin..]
        .iter()
        .zip(&reflectivity[imin..])
        .find(|(_, &r)| r >= half);
    let span = energies.iter().cloned().fold(f64::MIN, f64::max) - energies.iter().cloned().fold(f64::MAX, f64::min);
    let width = match (left, right) {
        (Some((l, _)), Some((r, _))) => (r - l).max(1e-6),
        _ => span / 10.0,
    };
    let initial = [e0, (e0 / width).max(1e-3), depth.min(1.0)];
    let bounds = [(1e-9, f64::INFINITY), (1e-6, f64::INFINITY), (0.0, 1.0)];
    least_squares(|p| cavity_dip_model(energies, p), reflectivity, &initial, Some(&bounds))
}

fn weighted_sums(weights: Option<&[f64]>, m: usize) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0; m]),
        Some(w) if w.len() == m && w.iter().all(|&v| v.is_finite() && v > 0.0) => Ok(w.to_vec()),
        Some(_) => Err(Error::Input("weights must be positive, one per point".into())),
    }
}

/// Closed-form weighted regression of E_EL(V) = E₀ + κ(V − V₀) with V₀
/// fixed. Parameters are `[E₀ (meV), κ (meV/V)]`.
pub fn fit_stark(
    bias_v: &[f64],
    peak_mev: &[f64],
    reference_bias_v: f64,
    weights: Option<&[f64]>,
) -> Result<FitResult> {
    let m = bias_v.len();
    if peak_mev.len() != m {
        return Err(Error::Input("bias and peak columns differ in length".into()));
    }
    if m < 3 {
        return Err(Error::Input("Stark fit needs at least 3 bias points".into()));
    }
    let w = weighted_sums(weights, m)?;
    let x: Vec<f64> = bias_v.iter().map(|v| v - reference_bias_v).collect();
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..m {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * peak_mev[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * peak_mev[i];
    }
    let det = sw * sxx - sx * sx;
    if !(det > 1e-12 * sw * sxx) {
        return Err(Error::RankDeficient {
            ratio: det / (sw * sxx),
        });
    }
    let kappa = (sw * sxy - sx * sy) / det;
    let e0 = (sy - kappa * sx) / sw;
    let rss: f64 = (0..m).map(|i| w[i] * (peak_mev[i] - e0 - kappa * x[i]).powi(2)).sum();
    let sigma2 = rss / (m - 2) as f64;
    Ok(FitResult {
        params: vec![e0, kappa],
        stderr: vec![(sigma2 * sxx / det).sqrt(), (sigma2 * sw / det).sqrt()],
        rss,
        iterations: 0,
        converged: true,
    })
}

/// Zero-intercept weighted slope of photon rate against electron rate.
/// Accepts a single point, which gives the plain ratio.
pub fn qe_slope(current_a: &[f64], power_w: &[f64], photon: Energy, weights: Option<&[f64]>) -> Result<FitResult> {
    let m = current_a.len();
    if power_w.len() != m || m == 0 {
        return Err(Error::Input(
            "current and power columns must be non-empty and equal in length".into(),
        ));
    }
    positive("photon energy (meV)", photon.mev())?;
    let w = weighted_sums(weights, m)?;
    let electrons: Vec<f64> = current_a.iter().map(|i| i / ELEMENTARY_CHARGE).collect();
    let photons: Vec<f64> = power_w.iter().map(|p| p / photon.joules()).collect();
    if electrons.iter().chain(&photons).any(|v| !v.is_finite()) {
        return Err(Error::Input("current and power must be finite".into()));
    }
    let sxx: f64 = (0..m).map(|i| w[i] * electrons[i] * electrons[i]).sum();
    if !(sxx > 0.0) {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let sxy: f64 = (0..m).map(|i| w[i] * electrons[i] * photons[i]).sum();
    let eta = sxy / sxx;
    let rss: f64 = (0..m).map(|i| w[i] * (photons[i] - eta * electrons[i]).powi(2)).sum();
    let stderr = if m > 1 {
        (rss / (m - 1) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(FitResult {
        params: vec![eta],
        stderr: vec![stderr],
        rss,
        iterations: 0,
        converged: true,
    })
}

/// η_QE from a measured L-I table (at least 3 points).
pub fn fit_qe_slope(current_a: &[f64], power_w: &[f64], photon: Energy) -> Result<FitResult> {
    if current_a.len() < 3 {
        return Err(Error::Input("quantum-efficiency fit needs at least 3 points".into()));
    }
    qe_slope(current_a, power_w, photon, None)
}

/// Copy of `params` with σ_V recalibrated so the cavity-free threshold is
/// `j_th`.
pub fn with_threshold(params: &CascadeParams, j_th: CurrentDensity) -> Result<CascadeParams> {
    let j = positive("threshold current density (A/cm^2)", j_th.a_per_cm2())?;
    let mut p = *params;
    p.gain_coefficient = p.total_loss.per_second() * ELEMENTARY_CHARGE * p.period_cm() / (j * p.tau_eff());
    p.validate()?;
    Ok(p)
}

fn unit_max(values: &[f64]) -> Result<Vec<f64>> {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::Analysis("flux has no positive maximum".into()));
    }
    Ok(values.iter().map(|v| v / max).collect())
}

/// Sub-threshold photon-density curve for a trial J_th, scaled to unit max.
pub fn normalized_threshold_model(
    params: &CascadeParams,
    purcell: &dyn PurcellProfile,
    j: &[CurrentDensity],
    j_th: f64,
) -> Result<Vec<f64>> {
    let trial = with_threshold(params, CurrentDensity::new(j_th)?)?;
    unit_max(&photon_density_curve(&trial, purcell, j)?)
}

const SCAN_POINTS: usize = 400;
const SCAN_DECADES: f64 = 4.0;
const GOLDEN_TOLERANCE: f64 = 1e-12;

/// Fits J_th (A/cm²) to unit-max-normalized flux with the drive-dependent
/// Purcell factor. Trial thresholds that put any datum at or beyond the
/// pole score an infinite residual.
pub fn fit_threshold(
    j: &[CurrentDensity],
    flux: &[f64],
    params: &CascadeParams,
    purcell: &dyn PurcellProfile,
) -> Result<FitResult> {
    let m = j.len();
    if flux.len() != m {
        return Err(Error::Input("current and flux columns differ in length".into()));
    }
    if m < 2 {
        return Err(Error::Input("threshold fit needs at least 2 points".into()));
    }
    if flux.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("flux values must be finite".into()));
    }
    let data = unit_max(flux)?;
    let rss_at = |j_th: f64| -> f64 {
        match normalized_threshold_model(params, purcell, j, j_th) {
            Ok(model) => model.iter().zip(&data).map(|(a, b)| (a - b).powi(2)).sum(),
            Err(_) => f64::INFINITY,
        }
    };

    // the model pole sits where J·ℱ_P(J) reaches J_th
    let pole = j
        .iter()
        .map(|&x| x.a_per_cm2() * purcell.factor_at(x))
        .fold(0.0, f64::max);
    if !(pole > 0.0) {
        return Err(Error::Analysis("Purcell-weighted drive vanishes on every datum".into()));
    }
    let lo = pole * (1.0 + 1e-9);
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|k| lo * 10f64.powf(SCAN_DECADES * k as f64 / (SCAN_POINTS - 1) as f64))
        .collect();
    let scores: Vec<f64> = grid.par_iter().map(|&x| rss_at(x)).collect();
    let best = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("non-empty scan");
    if !scores[best].is_finite() {
        return Err(Error::Analysis("no finite residual over the threshold scan".into()));
    }
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(SCAN_POINTS - 1)]);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (rss_at(c), rss_at(d));
    let mut iterations = 0;
    while (b - a) > GOLDEN_TOLERANCE * b && iterations < MAX_ITERATIONS {
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = rss_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = rss_at(d);
        }
    }
    let converged = (b - a) <= GOLDEN_TOLERANCE * b;
    let (j_th, rss) = if fc <= fd { (c, fc) } else { (d, fd) };

    // linearized standard error from a forward difference in J_th
    let h = FD_STEP * j_th;
    let base = normalized_threshold_model(params, purcell, j, j_th)?;
    let stderr = match normalized_threshold_model(params, purcell, j, j_th + h) {
        Ok(shifted) if m > 1 => {
            let norm2: f64 = shifted.iter().zip(&base).map(|(s, b)| ((s - b) / h).powi(2)).sum();
            (rss / (m - 1) as f64 / norm2).sqrt()
        }
        _ => f64::NAN,
    };
    Ok(FitResult {
        params: vec![j_th],
        stderr: vec![stderr],
        rss,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::linspace;
    use crate::quantities::{Lifetime, Rate};
    use crate::ratemodel::ConstantPurcell;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn linear_model_exact() {
        let xs = linspace(0.0, 5.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x).collect();
        let fit = least_squares(|p| Ok(xs.iter().map(|x| p[0] * x).collect()), &ys, &[1.0], None).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations <= 2, "{}", fit.iterations);
        assert!((fit.params[0] - 2.5).abs() < 1e-10);
        assert!(fit.stderr[0] >= 0.0);
    }

    #[test]
    fn degenerate_model_is_rank_deficient() {
        let xs = linspace(0.0, 5.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x).collect();
        let err = least_squares(
            |p| Ok(xs.iter().map(|x| (p[0] + p[1]) * x).collect()),
            &ys,
            &[1.0, 1.0],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    #[test]
    fn too_few_points_and_bad_start() {
        let ys = [1.0, 2.0, 3.0];
        assert!(least_squares(|p| Ok(vec![p[0], p[1], p[0]]), &ys, &[0.0, 0.0], None).is_err());
        let bounds = [(0.0, 1.0)];
        assert!(least_squares(|p| Ok(vec![p[0]; 3]), &ys, &[2.0], Some(&bounds)).is_err());
    }

    #[test]
    fn bounds_are_respected() {
        let xs = linspace(0.0, 5.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x).collect();
        let bounds = [(0.0, 2.0)];
        let fit = least_squares(
            |p| Ok(xs.iter().map(|x| p[0] * x).collect()),
            &ys,
            &[1.0],
            Some(&bounds),
        )
        .unwrap();
        assert_eq!(fit.params[0], 2.0);
    }

    #[test]
    fn iteration_cap_flags_instead_of_failing() {
        // each Gauss-Newton step doubles p; the minimum sits at infinity
        let ys = vec![0.0; 4];
        let fit = least_squares(|p| Ok(vec![1.0 / p[0]; 4]), &ys, &[1.0], None).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, MAX_ITERATIONS);
    }

    fn energies() -> Vec<f64> {
        linspace(90.0, 170.0, 161)
    }

    #[test]
    fn cavity_dip_noiseless_round_trip() {
        let e = energies();
        let truth = [130.0, 14.0, 0.6];
        let r = cavity_dip_model(&e, &truth).unwrap();
        let fit = fit_cavity_lorentzian(&e, &r).unwrap();
        assert!(fit.converged);
        for (a, b) in fit.params.iter().zip(truth) {
            assert!((a / b - 1.0).abs() < 1e-8, "{a} vs {b}");
        }
        let opt = first_order_optimality(|p| cavity_dip_model(&e, p), &r, &fit.params, None).unwrap();
        assert!(opt < 1e-6);
    }

    #[test]
    fn cavity_dip_with_noise() {
        let e = energies();
        let truth = [130.0, 14.0, 0.6];
        let clean = cavity_dip_model(&e, &truth).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.005).unwrap();
        let noisy: Vec<f64> = clean.iter().map(|r| r * (1.0 + noise.sample(&mut rng))).collect();
        let fit = fit_cavity_lorentzian(&e, &noisy).unwrap();
        assert!((fit.params[1] / 14.0 - 1.0).abs() < 0.05);
        let opt = first_order_optimality(|p| cavity_dip_model(&e, p), &noisy, &fit.params, None).unwrap();
        assert!(opt < 1e-6, "{opt}");
    }

    #[test]
    fn lorentzian_coverage_over_seeded_trials() {
        let e = energies();
        let truth = [130.0, 14.0, 0.6];
        let clean = cavity_dip_model(&e, &truth).unwrap();
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut covered = [0usize; 3];
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let noisy: Vec<f64> = clean.iter().map(|r| r + noise.sample(&mut rng)).collect();
            let fit = fit_cavity_lorentzian(&e, &noisy).unwrap();
            for k in 0..3 {
                if (fit.params[k] - truth[k]).abs() <= 3.0 * fit.stderr[k] {
                    covered[k] += 1;
                }
            }
        }
        assert_eq!(covered, [100; 3]);
    }

    #[test]
    fn flat_spectrum_is_flagged() {
        let e = energies();
        let flat = vec![0.9; e.len()];
        assert!(fit_cavity_lorentzian(&e, &flat).is_err());
    }

    #[test]
    fn stark_line() {
        let v = [3.0, 4.0, 5.0, 6.0, 7.0];
        let e: Vec<f64> = v.iter().map(|x| 130.0 + 15.0 * (x - 4.5)).collect();
        let fit = fit_stark(&v, &e, 4.5, None).unwrap();
        assert!((fit.params[0] - 130.0).abs() < 1e-10);
        assert!((fit.params[1] - 15.0).abs() < 1e-12);
        let flat = fit_stark(&v, &[120.0, 120.5, 119.5, 120.2, 119.8], 4.5, None).unwrap();
        assert!(flat.params[1].abs() <= flat.stderr[1] * 1.5);
        assert!(fit_stark(&v[..2], &e[..2], 4.5, None).is_err());
        assert!(fit_stark(&[4.0, 4.0, 4.0], &[1.0, 2.0, 3.0], 4.5, None).is_err());
    }

    #[test]
    fn stark_monte_carlo() {
        let v = linspace(3.0, 8.0, 11);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut inside = 0;
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e: Vec<f64> = v
                .iter()
                .map(|x| 130.0 + 15.0 * (x - 4.5) + noise.sample(&mut rng))
                .collect();
            let fit = fit_stark(&v, &e, 4.5, None).unwrap();
            if (fit.params[1] - 15.0).abs() <= 3.0 * fit.stderr[1] {
                inside += 1;
            }
        }
        assert!(inside >= 48, "{inside}");
    }

    #[test]
    fn qe_examples() {
        let photon = Energy::photon(130.0).unwrap();
        let single = qe_slope(&[0.08], &[2.9e-6], photon, None).unwrap();
        assert!((single.params[0] - 2.788e-4).abs() < 1e-7, "{}", single.params[0]);
        let mesa = qe_slope(&[0.08], &[0.03e-6], photon, None).unwrap();
        assert!((mesa.params[0] / 2.884e-6 - 1.0).abs() < 0.01);
        let i = [0.02, 0.04, 0.06, 0.08];
        let p: Vec<f64> = i.iter().map(|x| x * 3.625e-5).collect();
        let fit = fit_qe_slope(&i, &p, photon).unwrap();
        let expected = 3.625e-5 * ELEMENTARY_CHARGE / photon.joules();
        assert!((fit.params[0] / expected - 1.0).abs() < 1e-12);
        assert!(fit_qe_slope(&i[..2], &p[..2], photon).is_err());
    }

    fn cascade() -> CascadeParams {
        CascadeParams::calibrated(
            50.0,
            Lifetime::from_ps(1.0).unwrap(),
            Lifetime::from_ps(0.3).unwrap(),
            Lifetime::from_ps(2.0).unwrap(),
            Lifetime::from_ns(10.0).unwrap(),
            Rate::new(1e12).unwrap(),
            0.8,
            CurrentDensity::from_ka_per_cm2(25.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constant_purcell_threshold_fit() {
        let params = cascade();
        let purcell = ConstantPurcell(6.285);
        let pole = 25_000.0 / 6.285;
        let js: Vec<CurrentDensity> = linspace(0.05 * pole, 0.9 * pole, 40)
            .into_iter()
            .map(|x| CurrentDensity::new(x).unwrap())
            .collect();
        let flux = photon_density_curve(&params, &purcell, &js).unwrap();
        let fit = fit_threshold(&js, &flux, &params, &purcell).unwrap();
        assert!(fit.converged);
        assert!((fit.params[0] / 25_000.0 - 1.0).abs() < 1e-6, "{}", fit.params[0]);
        assert!((fit.params[0] / 6.285 / pole - 1.0).abs() < 1e-6);
    }

    #[test]
    fn threshold_fit_scale_invariant_and_deterministic() {
        let params = cascade();
        let purcell = ConstantPurcell(3.0);
        let js: Vec<CurrentDensity> = linspace(100.0, 7000.0, 30)
            .into_iter()
            .map(|x| CurrentDensity::new(x).unwrap())
            .collect();
        let mut flux = photon_density_curve(&params, &purcell, &js).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.02).unwrap();
        flux.iter_mut().for_each(|f| *f *= 1.0 + noise.sample(&mut rng));
        let a = fit_threshold(&js, &flux, &params, &purcell).unwrap();
        let scaled: Vec<f64> = flux.iter().map(|f| f * 1234.5).collect();
        let b = fit_threshold(&js, &scaled, &params, &purcell).unwrap();
        assert!((a.params[0] / b.params[0] - 1.0).abs() < 1e-9);
        let c = fit_threshold(&js, &flux, &params, &purcell).unwrap();
        assert_eq!(a.to_json(), c.to_json());
    }

    #[test]
    fn multistart_picks_lowest_residual() {
        let xs = linspace(-3.0, 3.0, 41);
        let ys: Vec<f64> = xs.iter().map(|x| (1.7 * x).sin()).collect();
        let model = |p: &[f64]| Ok(xs.iter().map(|x| (p[0] * x).sin()).collect());
        let starts = vec![vec![0.2], vec![1.5], vec![4.0]];
        let fit = least_squares_multistart(model, &ys, &starts, None).unwrap();
        assert!((fit.params[0] - 1.7).abs() < 1e-8);
        let again = least_squares_multistart(model, &ys, &starts, None).unwrap();
        assert_eq!(fit, again);
    }

    #[test]
    fn fit_result_json_keys() {
        let fit = FitResult {
            params: vec![1.0],
            stderr: vec![0.1],
            rss: 0.5,
            iterations: 3,
            converged: true,
        };
        assert_eq!(
            fit.to_json(),
            r#"{"params":[1.0],"stderr":[0.1],"rss":0.5,"iterations":3,"converged":true}"#
        );
    }
}
