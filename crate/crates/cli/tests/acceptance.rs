//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails other than the two whose targets are unattainable.

#![allow(clippy::approx_constant)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use patchlum::emitter::StarkEmitter;
use patchlum::farfield::{divergence, intensity_map, main_lobe_fwhm_deg, peak_sidelobe_db, ArrayGeometry, Axis};
use patchlum::fitting::{
    cavity_dip_model, first_order_optimality, fit_cavity_lorentzian, fit_threshold, least_squares,
    normalized_threshold_model,
};
use patchlum::profile::linspace;
use patchlum::purcell::{combined_q, lorentzian, purcell_coefficient};
use patchlum::quantities::Lifetime;
use patchlum::ratemodel::{
    effective_threshold, integrate_transient_sampled, max_step, photon_density_curve, quantum_efficiency,
    steady_state_photon_density, threshold_current_density, PurcellProfile, RateState,
};
use patchlum::spectra::{analysis_grid, filtered_spectrum, mesa_emission, narrowing_factor, spectrum_quality_factor};
use patchlum::table::OutputMeta;
use patchlum::{CurrentDensity, Device, DeviceConfig, ElementPattern, Energy, Wavelength};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn paper_device() -> Device {
    let config = DeviceConfig::from_path(fixtures().join("paper_device.json")).expect("fixture config");
    Device::from_config(&config).expect("fixture device")
}

fn ensure(ok: bool, message: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message.into())
    }
}

fn ka(j: f64) -> CurrentDensity {
    CurrentDensity::from_ka_per_cm2(j).unwrap()
}

fn purcell_coefficient_value() -> Outcome {
    let q = combined_q(9.0, 14.4).map_err(|e| e.to_string())?;
    ensure((q - 5.538).abs() < 1e-3, format!("harmonic Q = {q}"))?;
    let fp = purcell_coefficient(q, Wavelength::new(2.8 * 3.5).unwrap(), 3.5, 1.47).map_err(|e| e.to_string())?;
    let hand = 3.0 * q * 2.8f64.powi(3) / (4.0 * std::f64::consts::PI.powi(2) * 1.47);
    ensure((fp - hand).abs() < 1e-12, format!("F_P = {fp}, hand = {hand}"))?;
    let agreement = (fp - 7.0).abs() / 7.0;
    ensure(agreement < 0.15, format!("F_P = {fp} differs from 7 by {agreement}"))?;
    ensure(
        (fp - 6.28).abs() < 1e-3,
        format!("F_P = {fp:.5} (hand value {hand:.5}) is outside 6.28 ± 1e-3; within 15% of 7"),
    )?;
    Ok(format!("F_P = {fp:.4}, {:.1}% from the quoted 7", agreement * 100.0))
}

fn divergence_arithmetic() -> Outcome {
    let x = divergence(0.59, 50.0).map_err(|e| e.to_string())?;
    let y = divergence(0.68, 50.0).map_err(|e| e.to_string())?;
    ensure((x - 0.676).abs() < 0.005, format!("theta_x = {x}"))?;
    ensure((y - 0.779).abs() < 0.005, format!("theta_y = {y}"))?;
    Ok(format!("theta_x = {x:.4} deg, theta_y = {y:.4} deg"))
}

fn quantum_efficiency_value() -> Outcome {
    let eta = quantum_efficiency(2.9e-6, Energy::photon(130.0).unwrap(), 0.08).map_err(|e| e.to_string())?;
    // hand evaluation: (2.9e-6 / (0.130 · 1.602176634e-19)) / (0.08 / 1.602176634e-19)
    let hand = 2.9e-6 / 0.130 / 0.08;
    ensure((eta - hand).abs() < 1e-12, format!("eta = {eta}, hand = {hand}"))?;
    ensure(
        (eta - 2.79e-4).abs() < 1e-7,
        format!(
            "eta = {eta:.5e} matches the hand value but is {:.2e} from 2.79e-4",
            (eta - 2.79e-4).abs()
        ),
    )?;
    Ok(format!("eta_QE = {eta:.4e} (quoted 2.25e-4 not asserted)"))
}

fn ode_matches_analytic() -> Outcome {
    let d = paper_device();
    let j_th = threshold_current_density(&d.cascade).map_err(|e| e.to_string())?;
    let limit = CurrentDensity::new(10.0 * j_th.a_per_cm2()).unwrap();
    let j_eff = effective_threshold(j_th, &d.drive, limit).map_err(|e| e.to_string())?;
    let dt = max_step(&d.cascade);
    let t_end = 400e-12;
    let mut worst = 0.0f64;
    for frac in linspace(0.01, 0.8, 20) {
        let j = CurrentDensity::new(frac * j_eff.a_per_cm2()).unwrap();
        let fp = d.drive.factor_at(j);
        let analytic = steady_state_photon_density(&d.cascade, fp, j)
            .photon_density(j)
            .map_err(|e| e.to_string())?;
        let start = RateState {
            n3: 0.0,
            n2: 0.0,
            s: 0.0,
        };
        let traj =
            integrate_transient_sampled(start, &d.cascade, fp, j, t_end, dt, usize::MAX).map_err(|e| e.to_string())?;
        let s = traj.final_state().s;
        let rel = (s - analytic).abs() / analytic;
        worst = worst.max(rel);
        ensure(
            rel < 1e-3,
            format!("J = {:.3} J'_th: ODE {s:e} vs analytic {analytic:e} ({rel:e})", frac),
        )?;
    }
    Ok(format!(
        "J'_th = {:.2} kA/cm^2, worst relative gap {worst:.2e}",
        j_eff.ka_per_cm2()
    ))
}

fn threshold_identity() -> Outcome {
    let d = paper_device();
    let j_th = threshold_current_density(&d.cascade).map_err(|e| e.to_string())?;
    let limit = CurrentDensity::new(10.0 * j_th.a_per_cm2()).unwrap();
    let j_eff = effective_threshold(j_th, &d.drive, limit).map_err(|e| e.to_string())?;
    let grid: Vec<CurrentDensity> = linspace(0.0, 0.999 * j_eff.a_per_cm2(), 500)
        .into_iter()
        .map(|j| CurrentDensity::new(j).unwrap())
        .collect();
    let curve = photon_density_curve(&d.cascade, &d.drive, &grid).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (j, s) in grid.iter().zip(&curve) {
        let ss = steady_state_photon_density(&d.cascade, d.drive.factor_at(*j), *j)
            .photon_density(*j)
            .map_err(|e| e.to_string())?;
        let rel = if ss == 0.0 { s.abs() } else { (s - ss).abs() / ss };
        worst = worst.max(rel);
    }
    ensure(worst < 1e-12, format!("worst relative difference {worst:e}"))?;
    Ok(format!("500 points, worst relative difference {worst:.1e}"))
}

fn threshold_fit_round_trip() -> Outcome {
    let d = paper_device();
    let js: Vec<CurrentDensity> = linspace(20.0 / 60.0, 20.0, 60).into_iter().map(ka).collect();
    let clean = photon_density_curve(&d.cascade, &d.drive, &js).map_err(|e| e.to_string())?;
    let noise = Normal::new(0.0, 0.02).unwrap();
    let mut hits = 0;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let noisy: Vec<f64> = clean.iter().map(|s| s * (1.0 + noise.sample(&mut rng))).collect();
        let max = noisy.iter().cloned().fold(f64::MIN, f64::max);
        let flux: Vec<f64> = noisy.iter().map(|s| s / max).collect();
        let fit = fit_threshold(&js, &flux, &d.cascade, &d.drive).map_err(|e| e.to_string())?;
        let err = (fit.params[0] / 25_000.0 - 1.0).abs();
        worst = worst.max(err);
        if err < 0.05 {
            hits += 1;
        }
    }
    ensure(hits >= 19, format!("{hits}/20 trials within 5%"))?;
    Ok(format!("{hits}/20 trials within 5%, worst {:.2}%", worst * 100.0))
}

fn spectral_narrowing() -> Outcome {
    let d = paper_device();
    let bias = d.emitter.alignment_bias(&d.mode).ok_or("no alignment bias")?;
    let energies = analysis_grid(&d.emitter, bias, &d.mode, 40_001);
    let mesa = mesa_emission(&d.emitter, bias, &energies).map_err(|e| e.to_string())?;
    let filtered = filtered_spectrum(&d.emitter, bias, &d.mode, &energies).map_err(|e| e.to_string())?;
    // product of two coincident Lorentzians: (1 + u/a²)(1 + u/b²) = 2 with u = FWHM²
    let (a, b) = (d.emitter.linewidth.mev(), d.mode.linewidth().mev());
    let (qa, qb) = (1.0 / (a * a * b * b), 1.0 / (a * a) + 1.0 / (b * b));
    let u = (-qb + (qb * qb + 4.0 * qa).sqrt()) / (2.0 * qa);
    let oracle = u.sqrt();
    let step = energies[1] - energies[0];
    ensure(
        (filtered.fwhm_mev - oracle).abs() < 2.0 * step,
        format!("FWHM {} vs oracle {oracle}", filtered.fwhm_mev),
    )?;
    ensure(
        (filtered.fwhm_mev - 7.05).abs() < 0.05,
        format!("FWHM = {}", filtered.fwhm_mev),
    )?;
    ensure(
        (mesa.fwhm_mev - 14.44).abs() < 0.01,
        format!("mesa FWHM = {}", mesa.fwhm_mev),
    )?;
    let narrowing = narrowing_factor(&mesa, &filtered);
    ensure((narrowing - 2.04).abs() < 0.01, format!("narrowing = {narrowing}"))?;
    let q = spectrum_quality_factor(&filtered).map_err(|e| e.to_string())?;
    ensure((q - 18.4).abs() < 0.3, format!("Q = {q}"))?;
    Ok(format!(
        "FWHM = {:.4} meV (oracle {oracle:.4}), narrowing {narrowing:.3}, Q = {q:.2}",
        filtered.fwhm_mev
    ))
}

fn farfield_properties() -> Outcome {
    let lambda = Wavelength::new(10.0).unwrap();
    let g20 = ArrayGeometry::new(20, 20, 7.0, lambda, ElementPattern::Cosine).map_err(|e| e.to_string())?;
    let g10 = ArrayGeometry::new(10, 10, 7.0, lambda, ElementPattern::Cosine).map_err(|e| e.to_string())?;
    let theory = (0.886 * 10.0 / 140.0f64).to_degrees();
    let w20 = main_lobe_fwhm_deg(&g20, Axis::X, 15.0, 60_001).map_err(|e| e.to_string())?;
    let w20y = main_lobe_fwhm_deg(&g20, Axis::Y, 15.0, 60_001).map_err(|e| e.to_string())?;
    ensure((w20 / theory - 1.0).abs() < 0.05, format!("(a) FWHM {w20} vs {theory}"))?;
    ensure(
        (w20y / theory - 1.0).abs() < 0.05,
        format!("(a) FWHM_y {w20y} vs {theory}"),
    )?;
    let w10 = main_lobe_fwhm_deg(&g10, Axis::X, 30.0, 60_001).map_err(|e| e.to_string())?;
    let ratio = w10 / w20;
    ensure((ratio - 2.0).abs() < 0.1, format!("(b) ratio {ratio}"))?;
    let sll = peak_sidelobe_db(&g20, 16);
    ensure(sll < -10.0, format!("(c) peak sidelobe {sll} dB"))?;
    let mut thetas = Vec::new();
    for z in [30.0, 50.0, 100.0] {
        let map = intensity_map(&g20, z, [0.12 * z, 0.12 * z], 0.0005 * z).map_err(|e| e.to_string())?;
        thetas.push(divergence(map.delta_x_mm, z).map_err(|e| e.to_string())?);
    }
    let (lo, hi) = thetas
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &t| (a.min(t), b.max(t)));
    ensure(hi / lo - 1.0 < 0.02, format!("(d) divergences {thetas:?}"))?;
    Ok(format!(
        "FWHM {w20:.3} deg (theory {theory:.3}), ratio {ratio:.3}, sidelobe {sll:.1} dB, theta(z) spread {:.2}%",
        (hi / lo - 1.0) * 100.0
    ))
}

fn detuning_suite() -> Outcome {
    let width = 23.47;
    ensure(lorentzian(0.0, width) == 1.0, "L(0) != 1")?;
    for s in [-1.0, 1.0] {
        let v = lorentzian(s * width / 2.0, width);
        ensure((v - 0.5).abs() < 1e-12, format!("L(±dE/2) = {v}"))?;
    }
    for d in linspace(0.0, 200.0, 2001) {
        ensure(
            (lorentzian(d, width) - lorentzian(-d, width)).abs() < 1e-12,
            format!("asymmetric at {d}"),
        )?;
    }
    let dev = paper_device();
    let aligned = dev.drive.alignment_density().ok_or("no alignment current")?;
    let grid = linspace(0.0, 30.0, 300_001);
    let step = grid[1] - grid[0];
    let (best, _) = grid
        .iter()
        .map(|&j| (j, dev.drive.factor_at(ka(j))))
        .fold((0.0, f64::MIN), |acc, (j, f)| if f > acc.1 { (j, f) } else { acc });
    ensure(
        (best - aligned.ka_per_cm2()).abs() <= step,
        format!("argmax {best} vs alignment {}", aligned.ka_per_cm2()),
    )?;
    // a flat Stark law keeps the factor constant
    let flat = StarkEmitter::from_quality(
        Energy::photon(130.0).unwrap(),
        4.5,
        0.0,
        9.0,
        Lifetime::from_ns(50.0).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    ensure(
        flat.detuning(3.0, &dev.mode) == flat.detuning(9.0, &dev.mode),
        "kappa = 0 detuning varies",
    )?;
    Ok(format!(
        "argmax at {best:.4} kA/cm^2, alignment at {:.4} kA/cm^2",
        aligned.ka_per_cm2()
    ))
}

fn fit_determinism() -> Outcome {
    let energies = linspace(90.0, 170.0, 161);
    let clean = cavity_dip_model(&energies, &[130.0, 14.0, 0.6]).map_err(|e| e.to_string())?;
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = clean.iter().map(|r| r + noise.sample(&mut rng)).collect();
        let a = fit_cavity_lorentzian(&energies, &data).map_err(|e| e.to_string())?;
        let b = fit_cavity_lorentzian(&energies, &data).map_err(|e| e.to_string())?;
        ensure(a.to_json() == b.to_json(), "Lorentzian fit JSON differs between runs")?;
        let opt = first_order_optimality(|p| cavity_dip_model(&energies, p), &data, &a.params, None)
            .map_err(|e| e.to_string())?;
        worst = worst.max(opt);
    }
    let xs = linspace(0.0, 4.0, 30);
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| 3.0 * (-0.7 * x).exp() + 0.05 * (7.0 * x).sin())
        .collect();
    let model = |p: &[f64]| Ok(xs.iter().map(|x| p[0] * (-p[1] * x).exp()).collect());
    let a = least_squares(model, &ys, &[1.0, 1.0], None).map_err(|e| e.to_string())?;
    let b = least_squares(model, &ys, &[1.0, 1.0], None).map_err(|e| e.to_string())?;
    ensure(a.to_json() == b.to_json(), "exponential fit JSON differs between runs")?;
    worst = worst.max(first_order_optimality(model, &ys, &a.params, None).map_err(|e| e.to_string())?);

    let d = paper_device();
    let js: Vec<CurrentDensity> = linspace(0.5, 20.0, 40).into_iter().map(ka).collect();
    let clean = photon_density_curve(&d.cascade, &d.drive, &js).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let flux: Vec<f64> = clean
        .iter()
        .map(|s| s * (1.0 + 0.02 * noise.sample(&mut rng) / 0.01))
        .collect();
    let a = fit_threshold(&js, &flux, &d.cascade, &d.drive).map_err(|e| e.to_string())?;
    let b = fit_threshold(&js, &flux, &d.cascade, &d.drive).map_err(|e| e.to_string())?;
    ensure(a.to_json() == b.to_json(), "threshold fit JSON differs between runs")?;
    let max = flux.iter().cloned().fold(f64::MIN, f64::max);
    let norm: Vec<f64> = flux.iter().map(|f| f / max).collect();
    let threshold_model = |p: &[f64]| normalized_threshold_model(&d.cascade, &d.drive, &js, p[0]);
    worst = worst.max(first_order_optimality(threshold_model, &norm, &a.params, None).map_err(|e| e.to_string())?);
    ensure(worst < 1e-6, format!("residual-Jacobian cosine {worst:e}"))?;
    Ok(format!(
        "byte-identical JSON; worst residual-Jacobian cosine {worst:.1e}"
    ))
}

fn csv_header(text: &str) -> Option<&str> {
    text.lines().find(|l| !l.starts_with('#'))
}

fn end_to_end_cli() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_patchlum");
    let config = fixtures().join("paper_device.json");
    let digest: String = Sha256::digest(std::fs::read(&config).unwrap())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let flux = fixtures().join("flux.csv");
    let runs: [(&[&str], &str, &str); 3] = [
        (
            &["simulate", "li", "--jmax", "20"],
            "li_curve.csv",
            "J_kA_cm2,S_cm3,P_W",
        ),
        (
            &["simulate", "farfield", "--z", "50"],
            "farfield_map.csv",
            "x_mm,y_mm,intensity",
        ),
        (
            &["fit", "threshold", "--data", flux.to_str().unwrap()],
            "threshold_fit.csv",
            "J_kA_cm2,flux_norm",
        ),
    ];
    let mut notes = Vec::new();
    for (args, csv, header) in runs {
        let out = tmp.path().join(args[1]);
        let result = Command::new(bin)
            .args(args)
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(
            result.status.code() == Some(0),
            format!(
                "{args:?} exited {:?}: {}",
                result.status.code(),
                String::from_utf8_lossy(&result.stderr)
            ),
        )?;
        let text = std::fs::read_to_string(out.join(csv)).map_err(|e| e.to_string())?;
        ensure(
            csv_header(&text) == Some(header),
            format!("{csv} header {:?}", csv_header(&text)),
        )?;
        ensure(
            OutputMeta::digest_of(&text) == Some(digest.as_str()),
            format!("{csv} digest mismatch"),
        )?;
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        ensure(summary["config_digest"] == digest.as_str(), "summary digest mismatch")?;
        if args[1] == "threshold" {
            let j = summary["results"]["Jth_kA_cm2"].as_f64().ok_or("no Jth in summary")?;
            ensure((j / 25.0 - 1.0).abs() < 0.05, format!("fitted J_th {j}"))?;
            notes.push(format!("J_th = {j:.2} kA/cm^2"));
        }
    }
    Ok(format!(
        "3 subcommands exit 0, headers and digests match; {}",
        notes.join(", ")
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("Purcell coefficient", purcell_coefficient_value, Duration::from_secs(1)),
        ("divergence arithmetic", divergence_arithmetic, Duration::from_secs(1)),
        ("quantum efficiency", quantum_efficiency_value, Duration::from_secs(1)),
        (
            "ODE-analytic equivalence",
            ode_matches_analytic,
            Duration::from_secs(10),
        ),
        ("threshold-form identity", threshold_identity, Duration::from_secs(1)),
        (
            "threshold fit round trip",
            threshold_fit_round_trip,
            Duration::from_secs(30),
        ),
        ("spectral narrowing", spectral_narrowing, Duration::from_secs(1)),
        ("far-field properties", farfield_properties, Duration::from_secs(60)),
        ("Purcell detuning suite", detuning_suite, Duration::from_secs(1)),
        (
            "fit determinism and optimality",
            fit_determinism,
            Duration::from_secs(10),
        ),
        ("end-to-end CLI", end_to_end_cli, Duration::from_secs(30)),
    ];
    // 6.2851 and 2.7885e-4 are what the stated inputs give; the quoted
    // tolerances are tighter than the rounding in the quoted targets.
    let documented = [1, 3];
    let mut failed = 0;
    let mut unexpected = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) if documented.contains(&(k + 1)) => {
                failed += 1;
                (
                    "FAIL",
                    format!("{d} [documented, target unattainable from its own inputs]"),
                )
            }
            Err(d) => {
                failed += 1;
                unexpected += 1;
                ("FAIL", d)
            }
        };
        let slow = if elapsed > *budget {
            format!(" (over {budget:?} budget)")
        } else {
            String::new()
        };
        println!("{status} {:>2} {name}: {detail} [{:.2?}{slow}]", k + 1, elapsed);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
