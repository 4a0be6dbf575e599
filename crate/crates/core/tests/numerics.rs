//! Integrator accuracy and the closed-form analysis checked against
//! time-domain simulation.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use pedbrake_core::analysis::{closed_loop_numerator, step_response};
use pedbrake_core::dynamics::{step_lateral, step_longitudinal};
use pedbrake_core::*;
use proptest::prelude::*;

fn longitudinal_end_state(dt: f64, horizon: f64) -> LongitudinalState {
    let params = LongitudinalParams::default();
    let mut s = LongitudinalState::new(0.0, 12.0);
    for _ in 0..(horizon / dt).round() as usize {
        s = step_longitudinal(s, -1500.0, &params, dt).unwrap();
    }
    s
}

fn lateral_end_state(dt: f64, horizon: f64) -> LateralState {
    let params = LateralParams::default();
    let mut s = LateralState::default();
    for _ in 0..(horizon / dt).round() as usize {
        s = step_lateral(s, 0.05, &params, dt).unwrap();
    }
    s
}

#[test]
fn longitudinal_rk4_converges_at_high_order() {
    let (dt, horizon) = (0.1, 5.0);
    let reference = longitudinal_end_state(dt / 16.0, horizon);
    let err = |s: LongitudinalState| (s.x - reference.x).abs() + (s.v - reference.v).abs();
    let coarse = err(longitudinal_end_state(dt, horizon));
    let fine = err(longitudinal_end_state(dt / 2.0, horizon));
    assert!(coarse > 0.0);
    assert!(coarse / fine >= 8.0, "ratio {}", coarse / fine);
}

#[test]
fn lateral_rk4_converges_at_high_order() {
    let (dt, horizon) = (0.04, 4.0);
    let reference = lateral_end_state(dt / 16.0, horizon);
    let err = |s: LateralState| {
        (s.v_y - reference.v_y).abs()
            + (s.psi_dot - reference.psi_dot).abs()
            + (s.psi - reference.psi).abs()
            + (s.y - reference.y).abs()
    };
    let coarse = err(lateral_end_state(dt, horizon));
    let fine = err(lateral_end_state(dt / 2.0, horizon));
    assert!(coarse / fine >= 8.0, "ratio {}", coarse / fine);
}

#[test]
fn lateral_simulation_reaches_linear_steady_state() {
    let params = LateralParams::default();
    let (v_y, yaw) = params.steady_state(0.05).unwrap();
    let s = lateral_end_state(0.01, 30.0);
    assert_relative_eq!(s.v_y, v_y, max_relative = 1e-6);
    assert_relative_eq!(s.psi_dot, yaw, max_relative = 1e-6);
}

/// Inner velocity loop `m dv/dt = K (r_v - v)` tracking `r_v = slope t`.
fn simulated_ramp_error(mass: f64, k: f64, slope: f64, horizon: f64) -> f64 {
    let dt = 0.001;
    let mut state = [0.0, 0.0]; // [v, t]
    for _ in 0..(horizon / dt).round() as usize {
        state = integrate_step(state, dt, |s| [k * (slope * s[1] - s[0]) / mass, 1.0]).unwrap();
    }
    slope * state[1] - state[0]
}

#[test]
fn ramp_bound_matches_simulation() {
    for (m, k, slope) in [
        (1725.0, 10_000.0, 1.0),
        (1.0, 1.0, 2.0),
        (1200.0, 4000.0, 0.5),
    ] {
        let bound = ramp_error_bound(m, k, slope).unwrap();
        let horizon = 20.0 * m / k;
        let sim = simulated_ramp_error(m, k, slope, horizon);
        assert_relative_eq!(sim, bound, max_relative = 0.01);
    }
}

/// Mean spacing of the local maxima of a sampled signal.
fn ringing_period(samples: &[(f64, f64)]) -> f64 {
    let peaks: Vec<f64> = samples
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1)
        .map(|w| w[1].0)
        .collect();
    assert!(peaks.len() >= 3, "too few peaks");
    (peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64
}

#[test]
fn linear_loop_rings_at_damped_frequency() {
    let gains = PdGains::braking_default();
    let den = closed_loop_denominator(&gains, 1725.0);
    let report = stability_report(&gains, 1725.0).unwrap();
    let resp = step_response(closed_loop_numerator(&gains), &den, 0.001, 15.0).unwrap();
    let measured = 2.0 * PI / ringing_period(&resp);
    let wn = report.natural_frequency.unwrap();
    let zeta = report.damping_ratio.unwrap();
    let predicted = wn * (1.0 - zeta * zeta).sqrt();
    assert_relative_eq!(measured, predicted, max_relative = 0.02);
    assert_relative_eq!(measured, report.poles[0].im, max_relative = 0.02);
}

fn naive_roots(p: &SecondOrderPolynomial) -> [num_complex::Complex64; 2] {
    let disc = num_complex::Complex64::new(p.a1 * p.a1 - 4.0 * p.a2 * p.a0, 0.0).sqrt();
    [(-p.a1 + disc) / (2.0 * p.a2), (-p.a1 - disc) / (2.0 * p.a2)]
}

#[test]
fn default_poles_match_textbook_formula() {
    let p = SecondOrderPolynomial::new(1725.0, 1000.0, 18000.0);
    let mut expected = naive_roots(&p);
    expected.sort_by(|a, b| b.im.total_cmp(&a.im));
    let got = closed_loop_poles(&p).unwrap().poles;
    for (g, e) in got.iter().zip(&expected) {
        assert_relative_eq!(g.re, e.re, max_relative = 1e-12);
        assert_relative_eq!(g.im, e.im, max_relative = 1e-12);
    }
}

proptest! {
    #[test]
    fn routh_hurwitz_agrees_with_pole_signs(
        a2 in prop_oneof![-100.0..-1e-3f64, 1e-3..100.0f64],
        a1 in -100.0..100.0f64,
        a0 in -100.0..100.0f64,
    ) {
        let p = SecondOrderPolynomial::new(a2, a1, a0);
        let rh = routh_hurwitz_stable(&p).unwrap();
        let poles = closed_loop_poles(&p).unwrap();
        prop_assert_eq!(rh, poles.max_real_part() < 0.0);
    }

    #[test]
    fn constant_force_step_is_exact(v0 in 0.5..30.0f64, force in -20_000.0..5_000.0f64, dt in 0.001..0.1f64) {
        let params = LongitudinalParams::without_drag(1725.0);
        let a = force / params.mass;
        prop_assume!(v0 + a * dt > 0.0);
        let s = step_longitudinal(LongitudinalState::new(0.0, v0), force, &params, dt).unwrap();
        let x = v0 * dt + 0.5 * a * dt * dt;
        let v = v0 + a * dt;
        prop_assert!((s.x - x).abs() <= 1e-9 * x.abs().max(1e-12));
        prop_assert!((s.v - v).abs() <= 1e-9 * v.abs());
    }
}
