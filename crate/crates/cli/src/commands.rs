use patchlum::cavity::density_to_current;
use patchlum::error::positive;
use patchlum::farfield::{directivity, divergence, intensity_map, peak_sidelobe_db};
use patchlum::fitting::{
    cavity_dip_model, first_order_optimality, fit_cavity_lorentzian, fit_qe_slope, fit_stark, fit_threshold,
    normalized_threshold_model, FitResult,
};
use patchlum::profile::linspace;
use patchlum::purcell::combined_q;
use patchlum::ratemodel::{
    effective_threshold, emitted_power, steady_state_photon_density, threshold_current_density, PurcellProfile,
};
use patchlum::spectra::{analysis_grid, filtered_spectrum, mesa_emission, narrowing_factor, spectrum_quality_factor};
use patchlum::table::{ingest_csv, Schema};
use patchlum::{CurrentDensity, Energy, Error, Result};
use serde_json::{json, Value};

use crate::output::Run;
use crate::{Common, Fit, Simulate};

pub fn simulate(command: Simulate) -> Result<String> {
    match command {
        Simulate::Li { common, jmax, points } => simulate_li(&common, jmax, points),
        Simulate::Spectrum { common, bias, points } => simulate_spectrum(&common, bias, points),
        Simulate::Farfield { common, z } => simulate_farfield(&common, z),
        Simulate::Purcell { common, jmax, points } => simulate_purcell(&common, jmax, points),
    }
}

pub fn fit(command: Fit) -> Result<String> {
    match command {
        Fit::Lorentzian { common, data } => {
            let run = Run::start(&common)?;
            let table = ingest_csv(&data, Schema::Reflectivity)?;
            table.require_increasing(0)?;
            let (e, r) = (table.column(0), table.column(1));
            let fit = fit_cavity_lorentzian(e, r)?;
            let model = cavity_dip_model(e, &fit.params)?;
            let rows: Vec<Vec<f64>> = e.iter().zip(&model).map(|(&x, &y)| vec![x, y]).collect();
            run.csv("lorentzian_fit.csv", Schema::Reflectivity.columns(), &rows)?;
            let optimality = first_order_optimality(|p| cavity_dip_model(e, p), r, &fit.params, None)?;
            run.summary(
                "fit lorentzian",
                json!({
                    "fit": fit,
                    "E_cav_meV": fit.params[0],
                    "Q_cav": fit.params[1],
                    "depth": fit.params[2],
                    "optimality": optimality,
                }),
            )?;
            finish(
                &fit,
                format!("E_cav = {:.4} meV, Q_cav = {:.4}", fit.params[0], fit.params[1]),
            )
        }
        Fit::Stark { common, data } => {
            let run = Run::start(&common)?;
            let table = ingest_csv(&data, Schema::Stark)?;
            let v0 = run.config.emitter.v0_v;
            let fit = fit_stark(table.column(0), table.column(1), v0, None)?;
            let rows: Vec<Vec<f64>> = table
                .column(0)
                .iter()
                .map(|&v| vec![v, fit.params[0] + fit.params[1] * (v - v0)])
                .collect();
            run.csv("stark_fit.csv", Schema::Stark.columns(), &rows)?;
            run.summary(
                "fit stark",
                json!({
                    "fit": fit,
                    "E0_meV": fit.params[0],
                    "kappa_meV_per_V": fit.params[1],
                    "V0_V": v0,
                }),
            )?;
            finish(
                &fit,
                format!("E0 = {:.4} meV, kappa = {:.4} meV/V", fit.params[0], fit.params[1]),
            )
        }
        Fit::Threshold { common, data } => {
            let run = Run::start(&common)?;
            let table = ingest_csv(&data, Schema::Flux)?;
            table.require_increasing(0)?;
            let js = densities(table.column(0))?;
            let d = &run.device;
            let fit = fit_threshold(&js, table.column(1), &d.cascade, &d.drive)?;
            let j_th = fit.params[0];
            let model = normalized_threshold_model(&d.cascade, &d.drive, &js, j_th)?;
            let rows: Vec<Vec<f64>> = table.column(0).iter().zip(&model).map(|(&x, &y)| vec![x, y]).collect();
            run.csv("threshold_fit.csv", Schema::Flux.columns(), &rows)?;
            let j_eff = effective_threshold(CurrentDensity::new(j_th)?, &d.drive, search_limit(j_th, 0.0)?).ok();
            run.summary(
                "fit threshold",
                json!({
                    "fit": fit,
                    "Jth_kA_cm2": j_th * 1e-3,
                    "Jth_stderr_kA_cm2": fit.stderr[0] * 1e-3,
                    "Jth_eff_kA_cm2": j_eff.map(|j| j.ka_per_cm2()),
                }),
            )?;
            finish(&fit, format!("J_th = {:.4} kA/cm^2", j_th * 1e-3))
        }
        Fit::Qe {
            common,
            data,
            photon_mev,
        } => {
            let run = Run::start(&common)?;
            let table = ingest_csv(&data, Schema::PowerCurrent)?;
            let photon = match photon_mev {
                Some(e) => Energy::photon(e)?,
                None => run.device.mode.energy,
            };
            let current_a: Vec<f64> = table.column(0).iter().map(|i| i * 1e-3).collect();
            let power_w: Vec<f64> = table.column(1).iter().map(|p| p * 1e-6).collect();
            let fit = fit_qe_slope(&current_a, &power_w, photon)?;
            // η = (P/ℏω)/(I/q) ⇒ P = η·ℏω·I/q
            let watts_per_amp = fit.params[0] * photon.joules() / patchlum::quantities::ELEMENTARY_CHARGE;
            let rows: Vec<Vec<f64>> = table
                .column(0)
                .iter()
                .map(|&i| vec![i, i * 1e-3 * watts_per_amp * 1e6])
                .collect();
            run.csv("qe_fit.csv", Schema::PowerCurrent.columns(), &rows)?;
            run.summary(
                "fit qe",
                json!({
                    "fit": fit,
                    "eta_QE": fit.params[0],
                    "photon_meV": photon.mev(),
                }),
            )?;
            finish(&fit, format!("eta_QE = {:e}", fit.params[0]))
        }
    }
}

fn finish(fit: &FitResult, line: String) -> Result<String> {
    if fit.converged {
        Ok(line)
    } else {
        Err(Error::NotConverged {
            iterations: fit.iterations,
        })
    }
}

fn densities(ka_per_cm2: &[f64]) -> Result<Vec<CurrentDensity>> {
    ka_per_cm2.iter().map(|&j| CurrentDensity::from_ka_per_cm2(j)).collect()
}

fn grid(jmax_ka: f64, points: usize) -> Result<Vec<f64>> {
    positive("jmax (kA/cm^2)", jmax_ka)?;
    if points < 2 {
        return Err(Error::Input("at least 2 grid points required".into()));
    }
    Ok(linspace(0.0, jmax_ka, points))
}

/// Upper end of the J'_th search: ten cavity-free thresholds or the sweep end.
fn search_limit(j_th: f64, jmax_a: f64) -> Result<CurrentDensity> {
    CurrentDensity::new((10.0 * j_th).max(jmax_a))
}

fn simulate_li(common: &Common, jmax: f64, points: usize) -> Result<String> {
    let run = Run::start(common)?;
    let d = &run.device;
    let j_ka = grid(jmax, points)?;
    let j_th = threshold_current_density(&d.cascade)?;
    let j_eff = effective_threshold(j_th, &d.drive, search_limit(j_th.a_per_cm2(), jmax * 1e3)?).ok();
    let scale = d.cavity.patch_count() as f64 * d.collection_efficiency;

    let mut rows = Vec::with_capacity(points);
    for &jk in &j_ka {
        let j = CurrentDensity::from_ka_per_cm2(jk)?;
        let s = steady_state_photon_density(&d.cascade, d.drive.factor_at(j), j).photon_density(j)?;
        let p = emitted_power(s, d.mode.energy, d.cascade.radiative_loss(), d.mode.volume_um3)? * scale;
        rows.push(vec![jk, s, p]);
    }
    run.csv("li_curve.csv", &["J_kA_cm2", "S_cm3", "P_W"], &rows)?;
    let last = rows.last().expect("grid has points");
    run.summary(
        "simulate li",
        json!({
            "Jth_kA_cm2": j_th.ka_per_cm2(),
            "Jth_eff_kA_cm2": j_eff.map(|j| j.ka_per_cm2()),
            "purcell_coefficient": d.drive.coefficient,
            "alignment_J_kA_cm2": d.drive.alignment_density().map(|j| j.ka_per_cm2()),
            "photon_energy_meV": d.mode.energy.mev(),
            "patches": d.cavity.patch_count(),
            "collection_efficiency": d.collection_efficiency,
            "P_W_at_jmax": last[2],
            "I_A_at_jmax": density_to_current(CurrentDensity::from_ka_per_cm2(jmax)?, &d.cavity),
        }),
    )?;
    Ok(match j_eff {
        Some(j) => format!("J'_th = {:.4} kA/cm^2", j.ka_per_cm2()),
        None => "J'_th not reached within the search range".to_string(),
    })
}

fn simulate_spectrum(common: &Common, bias: Option<f64>, points: usize) -> Result<String> {
    let run = Run::start(common)?;
    let d = &run.device;
    let bias = match bias {
        Some(v) => patchlum::error::finite("bias (V)", v)?,
        None => d.emitter.alignment_bias(&d.mode).unwrap_or(d.emitter.reference_bias_v),
    };
    let energies = analysis_grid(&d.emitter, bias, &d.mode, points);
    let mesa = mesa_emission(&d.emitter, bias, &energies)?;
    let filtered = filtered_spectrum(&d.emitter, bias, &d.mode, &energies)?;
    let rows = |s: &patchlum::EmissionSpectrum| -> Vec<Vec<f64>> {
        s.energies_mev
            .iter()
            .zip(&s.intensity)
            .map(|(&e, &i)| vec![e, i])
            .collect()
    };
    run.csv("spectrum.csv", Schema::Spectrum.columns(), &rows(&filtered))?;
    run.csv("mesa_spectrum.csv", Schema::Spectrum.columns(), &rows(&mesa))?;
    let q = spectrum_quality_factor(&filtered)?;
    run.summary(
        "simulate spectrum",
        json!({
            "bias_V": bias,
            "extrapolated": d.emitter.is_extrapolated(bias),
            "mesa_peak_meV": mesa.peak_mev,
            "mesa_fwhm_meV": mesa.fwhm_mev,
            "filtered_peak_meV": filtered.peak_mev,
            "filtered_fwhm_meV": filtered.fwhm_mev,
            "quality_factor": q,
            "narrowing_factor": narrowing_factor(&mesa, &filtered),
        }),
    )?;
    Ok(format!("FWHM = {:.4} meV, Q = {:.3}", filtered.fwhm_mev, q))
}

fn simulate_farfield(common: &Common, z: Option<f64>) -> Result<String> {
    let run = Run::start(common)?;
    let f = &run.config.farfield;
    let array = &run.device.array;
    let z = z.unwrap_or(f.z_mm);
    let map = intensity_map(array, z, [f.grid_mm, f.grid_mm], f.step_mm)?;
    for w in &map.warnings {
        eprintln!("{}", json!({ "warning": w }));
    }
    let nx = map.xs_mm.len();
    let rows: Vec<Vec<f64>> = map
        .intensity
        .iter()
        .enumerate()
        .map(|(k, &i)| vec![map.xs_mm[k % nx], map.ys_mm[k / nx], i])
        .collect();
    run.csv("farfield_map.csv", Schema::FarField.columns(), &rows)?;
    let d = directivity(array, 1e-3)?;
    let (dx, dy) = array.aperture_um();
    let lambda = array.wavelength.um();
    run.summary(
        "simulate farfield",
        json!({
            "z_mm": z,
            "delta_x_mm": map.delta_x_mm,
            "delta_y_mm": map.delta_y_mm,
            "theta_div_x_deg": divergence(map.delta_x_mm, z)?,
            "theta_div_y_deg": divergence(map.delta_y_mm, z)?,
            "directivity": d.value,
            "peak_sidelobe_dB": peak_sidelobe_db(array, 16),
            "array_theory_fwhm_x_deg": (0.886 * lambda / dx).to_degrees(),
            "array_theory_fwhm_y_deg": (0.886 * lambda / dy).to_degrees(),
            "wavelength_um": lambda,
            "aperture_scale": map.aperture_scale,
            "fraunhofer_distance_mm": array.fraunhofer_distance_mm(),
            "warnings": map.warnings,
        }),
    )?;
    Ok(format!(
        "theta_div = {:.4} x {:.4} deg",
        map.theta_div_x_deg, map.theta_div_y_deg
    ))
}

fn simulate_purcell(common: &Common, jmax: f64, points: usize) -> Result<String> {
    let run = Run::start(common)?;
    let drive = &run.device.drive;
    let mut rows = Vec::with_capacity(points);
    for jk in grid(jmax, points)? {
        let j = CurrentDensity::from_ka_per_cm2(jk)?;
        let v = drive.bias_at_density(j);
        let detuning = drive.emitter.detuning(v, &drive.mode).mev();
        rows.push(vec![jk, v, detuning, drive.factor_at_bias(v)]);
    }
    run.csv(
        "purcell.csv",
        &["J_kA_cm2", "bias_V", "detuning_meV", "purcell_factor"],
        &rows,
    )?;
    let best = rows
        .iter()
        .max_by(|a, b| a[3].total_cmp(&b[3]))
        .expect("grid has points");
    run.summary(
        "simulate purcell",
        json!({
            "purcell_coefficient": drive.coefficient,
            "combined_Q": combined_q(
                run.config.emitter.purcell_q_el.unwrap_or(run.config.emitter.q_el),
                drive.mode.quality,
            )?,
            "linewidth_meV": drive.linewidth.mev(),
            "alignment_bias_V": drive.emitter.alignment_bias(&drive.mode),
            "alignment_J_kA_cm2": drive.alignment_density().map(|j| j.ka_per_cm2()),
            "max_factor_on_grid": best[3],
            "argmax_J_kA_cm2": best[0],
        }),
    )?;
    Ok(format!("F_P = {:.4}", drive.coefficient))
}

pub fn report_device(common: &Common) -> Result<String> {
    let run = Run::start(common)?;
    let d = &run.device;
    let rows: Vec<Vec<f64>> = d.drive.bias_map.points().map(|(v, i)| vec![v, i]).collect();
    run.csv("bias_map.csv", Schema::BiasCurrent.columns(), &rows)?;
    let j_th = threshold_current_density(&d.cascade)?;
    let j_eff = effective_threshold(j_th, &d.drive, search_limit(j_th.a_per_cm2(), 0.0)?).ok();
    let (dx, _) = d.array.aperture_um();
    let summary: Value = json!({
        "cavity": {
            "wavelength_um": d.mode.wavelength.um(),
            "E_cav_meV": d.mode.energy.mev(),
            "linewidth_meV": d.mode.linewidth().mev(),
            "mode_volume_um3": d.mode.volume_um3,
            "patches": d.cavity.patch_count(),
            "electrical_area_um2": d.cavity.electrical_area_um2(),
            "optical_area_um2": d.cavity.optical_area_um2(),
            "fill_factor": d.cavity.fill_factor(),
        },
        "emitter": {
            "linewidth_meV": d.emitter.linewidth.mev(),
            "alignment_bias_V": d.emitter.alignment_bias(&d.mode),
        },
        "purcell": {
            "coefficient": d.drive.coefficient,
            "linewidth_meV": d.drive.linewidth.mev(),
            "alignment_J_kA_cm2": d.drive.alignment_density().map(|j| j.ka_per_cm2()),
        },
        "cascade": {
            "tau_eff_ps": d.cascade.tau_eff() * 1e12,
            "gain_coefficient_cm3_per_s": d.cascade.gain_coefficient,
            "radiative_loss_per_s": d.cascade.radiative_loss(),
            "Jth_kA_cm2": j_th.ka_per_cm2(),
            "Jth_eff_kA_cm2": j_eff.map(|j| j.ka_per_cm2()),
        },
        "farfield": {
            "aperture_um": dx,
            "fraunhofer_distance_mm": d.array.fraunhofer_distance_mm(),
            "array_theory_fwhm_deg": (0.886 * d.array.wavelength.um() / dx).to_degrees(),
        },
    });
    run.summary("report device", summary)?;
    Ok(format!(
        "E_cav = {:.4} meV, F_P = {:.4}, J_th = {:.4} kA/cm^2",
        d.mode.energy.mev(),
        d.drive.coefficient,
        j_th.ka_per_cm2()
    ))
}
