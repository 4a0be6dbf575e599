//! Criterion benchmarks for the simulation and analysis hot paths.

use std::hint::black_box;

use criterion::Criterion;
use pedbrake_core::*;

pub fn benchmarks(c: &mut Criterion) {
    let brake = ScenarioConfig::default();
    c.bench_function("braking_run_noise_free", |b| {
        b.iter(|| run_braking_scenario(black_box(&brake)).unwrap())
    });

    let noisy = ScenarioConfig {
        noise: Some(DetectionNoiseModel::default()),
        seed: 7,
        ..Default::default()
    };
    c.bench_function("braking_run_noisy", |b| {
        b.iter(|| run_braking_scenario(black_box(&noisy)).unwrap())
    });

    let sweep_base = ScenarioConfig {
        initial_ped_distance: 40.0,
        ..Default::default()
    };
    c.bench_function("kp_sweep_3", |b| {
        b.iter(|| run_kp_sweep(black_box(&sweep_base), &[0.4, 0.6, 0.8]).unwrap())
    });

    let lateral = LateralScenarioConfig::default();
    c.bench_function("lateral_step_30s", |b| {
        b.iter(|| run_lateral_scenario(black_box(&lateral)).unwrap())
    });

    let gains = PdGains::braking_default();
    c.bench_function("stability_report", |b| {
        b.iter(|| stability_report(black_box(&gains), black_box(1725.0)).unwrap())
    });
}
