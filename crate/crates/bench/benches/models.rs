use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use patchlum::farfield::{directivity, intensity_map, ArrayGeometry};
use patchlum::fitting::{cavity_dip_model, fit_cavity_lorentzian, fit_threshold};
use patchlum::profile::linspace;
use patchlum::ratemodel::{integrate_transient_sampled, max_step, photon_density_curve, PurcellProfile, RateState};
use patchlum::{CurrentDensity, Device, DeviceConfig, ElementPattern, Wavelength};

fn device() -> Device {
    Device::from_config(&DeviceConfig::from_bytes(b"").unwrap()).unwrap()
}

fn farfield(c: &mut Criterion) {
    let g = ArrayGeometry::new(20, 20, 7.0, Wavelength::new(10.0).unwrap(), ElementPattern::Cosine).unwrap();
    c.bench_function("intensity_map 20x20 401^2", |b| {
        b.iter(|| intensity_map(black_box(&g), 50.0, [10.0, 10.0], 0.05).unwrap())
    });
    c.bench_function("directivity 20x20", |b| {
        b.iter(|| directivity(black_box(&g), 1e-3).unwrap())
    });
}

fn transient(c: &mut Criterion) {
    let d = device();
    let j = CurrentDensity::from_ka_per_cm2(10.0).unwrap();
    let fp = d.drive.factor_at(j);
    let dt = max_step(&d.cascade);
    let start = RateState {
        n3: 0.0,
        n2: 0.0,
        s: 0.0,
    };
    c.bench_function("transient 100 ps", |b| {
        b.iter(|| integrate_transient_sampled(start, &d.cascade, fp, j, 100e-12, dt, usize::MAX).unwrap())
    });
}

fn fits(c: &mut Criterion) {
    let d = device();
    let js: Vec<CurrentDensity> = linspace(0.5, 20.0, 60)
        .into_iter()
        .map(|j| CurrentDensity::from_ka_per_cm2(j).unwrap())
        .collect();
    let flux = photon_density_curve(&d.cascade, &d.drive, &js).unwrap();
    c.bench_function("fit_threshold 60 points", |b| {
        b.iter(|| fit_threshold(black_box(&js), &flux, &d.cascade, &d.drive).unwrap())
    });
    let energies = linspace(90.0, 170.0, 161);
    let refl = cavity_dip_model(&energies, &[130.0, 14.0, 0.6]).unwrap();
    c.bench_function("fit_cavity_lorentzian 161 points", |b| {
        b.iter(|| fit_cavity_lorentzian(black_box(&energies), &refl).unwrap())
    });
}

criterion_group!(benches, farfield, transient, fits);
criterion_main!(benches);
