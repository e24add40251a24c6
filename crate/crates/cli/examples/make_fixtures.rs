//! Regenerates the synthetic data tables in `fixtures/`.
//!
//! cargo run -p patchlum-cli --example make_fixtures

use std::path::Path;

use patchlum::fitting::cavity_dip_model;
use patchlum::profile::linspace;
use patchlum::quantities::ELEMENTARY_CHARGE;
use patchlum::ratemodel::photon_density_curve;
use patchlum::table::format_f64;
use patchlum::{CurrentDensity, Device, DeviceConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn write(dir: &Path, name: &str, comment: &str, header: &str, rows: &[(f64, f64)]) {
    let mut text = format!("# {comment}\n{header}\n");
    for (a, b) in rows {
        text.push_str(&format!("{},{}\n", format_f64(*a), format_f64(*b)));
    }
    std::fs::write(dir.join(name), text).unwrap();
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let config = DeviceConfig::from_path(dir.join("paper_device.json")).unwrap();
    let device = Device::from_config(&config).unwrap();

    // threshold-style flux: 60 points to 20 kA/cm², 2% multiplicative noise
    let j_ka = linspace(20.0 / 60.0, 20.0, 60);
    let js: Vec<CurrentDensity> = j_ka
        .iter()
        .map(|&j| CurrentDensity::from_ka_per_cm2(j).unwrap())
        .collect();
    let s = photon_density_curve(&device.cascade, &device.drive, &js).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let noisy: Vec<f64> = s.iter().map(|v| v * (1.0 + noise.sample(&mut rng))).collect();
    let max = noisy.iter().cloned().fold(f64::MIN, f64::max);
    let rows: Vec<(f64, f64)> = j_ka.iter().zip(&noisy).map(|(&j, &f)| (j, f / max)).collect();
    write(
        &dir,
        "flux.csv",
        "synthetic: J_th = 25 kA/cm^2, 2% multiplicative noise, seed 2024",
        "J_kA_cm2,flux_norm",
        &rows,
    );

    let energies = linspace(90.0, 170.0, 161);
    let dip = cavity_dip_model(&energies, &[130.0, 14.0, 0.6]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.005).unwrap();
    let rows: Vec<(f64, f64)> = energies
        .iter()
        .zip(&dip)
        .map(|(&e, &r)| (e, r * (1.0 + noise.sample(&mut rng))))
        .collect();
    write(
        &dir,
        "reflectivity.csv",
        "synthetic: E_cav = 130 meV, Q_cav = 14, depth 0.6, 0.5% multiplicative noise, seed 7",
        "energy_meV,reflectivity",
        &rows,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let rows: Vec<(f64, f64)> = linspace(3.0, 8.0, 11)
        .into_iter()
        .map(|v| (v, 130.0 + 15.0 * (v - 4.5) + noise.sample(&mut rng)))
        .collect();
    write(
        &dir,
        "stark.csv",
        "synthetic: E0 = 130 meV at 4.5 V, kappa = 15 meV/V, 0.3 meV noise, seed 11",
        "bias_V,peak_meV",
        &rows,
    );

    let photon_j = 130.0e-3 * ELEMENTARY_CHARGE;
    let eta = 2.79e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let rows: Vec<(f64, f64)> = linspace(10.0, 80.0, 8)
        .into_iter()
        .map(|ma| {
            let watts = eta * photon_j * (ma * 1e-3) / ELEMENTARY_CHARGE;
            (ma, watts * 1e6 * (1.0 + noise.sample(&mut rng)))
        })
        .collect();
    write(
        &dir,
        "li.csv",
        "synthetic: eta_QE = 2.79e-4 at 130 meV, 1% multiplicative noise, seed 5",
        "current_mA,power_uW",
        &rows,
    );
}
