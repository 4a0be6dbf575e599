//! Closed-form analysis of the drag-free longitudinal loop.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::controllers::PdGains;
use crate::error::{Error, Result};

/// `a2 s^2 + a1 s + a0`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderPolynomial {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl SecondOrderPolynomial {
    pub const fn new(a2: f64, a1: f64, a0: f64) -> Self {
        Self { a2, a1, a0 }
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        (s * self.a2 + self.a1) * s + self.a0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSet {
    pub poles: [Complex64; 2],
    /// `sqrt(a0 / a2)`; `None` when `a0 / a2 <= 0`.
    pub natural_frequency: Option<f64>,
    /// `a1 / (2 sqrt(a0 a2))`; `None` when `a0 / a2 <= 0`.
    pub damping_ratio: Option<f64>,
}

impl PoleSet {
    pub fn max_real_part(&self) -> f64 {
        self.poles[0].re.max(self.poles[1].re)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub coefficients: SecondOrderPolynomial,
    pub stable: bool,
    pub poles: [Complex64; 2],
    pub natural_frequency: Option<f64>,
    pub damping_ratio: Option<f64>,
}

/// Denominator of the reference-to-position transfer function,
/// `m s^2 + K K_d s + K (1 + K_p)`.
pub fn closed_loop_denominator(gains: &PdGains, mass: f64) -> SecondOrderPolynomial {
    let k = gains.k_inner;
    SecondOrderPolynomial::new(mass, k * gains.k_d, k + k * gains.k_p)
}

/// Numerator of the same transfer function, `K K_d s + K K_p`, as `(s, 1)`
/// coefficients.
pub fn closed_loop_numerator(gains: &PdGains) -> (f64, f64) {
    (gains.k_inner * gains.k_d, gains.k_inner * gains.k_p)
}

/// Second-order Routh-Hurwitz test with strict inequalities: marginal
/// polynomials are reported unstable.
pub fn routh_hurwitz_stable(p: &SecondOrderPolynomial) -> Result<bool> {
    if p.a2 == 0.0 {
        return Err(Error::DegenerateSystem);
    }
    let sign = p.a2.signum();
    Ok(sign * p.a1 > 0.0 && sign * p.a0 > 0.0)
}

/// Roots of the polynomial with natural frequency and damping ratio.
pub fn closed_loop_poles(p: &SecondOrderPolynomial) -> Result<PoleSet> {
    if p.a2 == 0.0 {
        return Err(Error::DegenerateSystem);
    }
    let SecondOrderPolynomial { a2, a1, a0 } = *p;
    let disc = a1 * a1 - 4.0 * a2 * a0;
    let poles = if disc >= 0.0 {
        // Avoids cancellation between -a1 and sqrt(disc).
        let q = -0.5 * (a1 + a1.signum() * disc.sqrt());
        if q == 0.0 {
            [Complex64::new(0.0, 0.0); 2]
        } else {
            let (r1, r2) = (q / a2, a0 / q);
            [
                Complex64::new(r1.max(r2), 0.0),
                Complex64::new(r1.min(r2), 0.0),
            ]
        }
    } else {
        let re = -a1 / (2.0 * a2);
        let im = (-disc).sqrt() / (2.0 * a2.abs());
        [Complex64::new(re, im), Complex64::new(re, -im)]
    };
    let ratio = a0 / a2;
    let (natural_frequency, damping_ratio) = if ratio > 0.0 {
        (
            Some(ratio.sqrt()),
            Some(a1 / (2.0 * (a0 * a2).abs().sqrt() * a2.signum())),
        )
    } else {
        (None, None)
    };
    Ok(PoleSet {
        poles,
        natural_frequency,
        damping_ratio,
    })
}

/// Stability report for the longitudinal loop with the given gains and mass.
pub fn stability_report(gains: &PdGains, mass: f64) -> Result<StabilityReport> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mass must be positive, got {mass}"
        )));
    }
    let coefficients = closed_loop_denominator(gains, mass);
    let stable = routh_hurwitz_stable(&coefficients)?;
    let poles = closed_loop_poles(&coefficients)?;
    debug_assert_eq!(stable, poles.max_real_part() < 0.0);
    Ok(StabilityReport {
        coefficients,
        stable,
        poles: poles.poles,
        natural_frequency: poles.natural_frequency,
        damping_ratio: poles.damping_ratio,
    })
}

/// Steady-state velocity error of the inner loop `m s / (m s + K)` under a
/// ramp reference of the given slope (final value theorem).
pub fn ramp_error_bound(mass: f64, k_inner: f64, ramp_slope: f64) -> Result<f64> {
    if !(mass > 0.0 && k_inner > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need mass > 0 and k_inner > 0, got {mass} and {k_inner}"
        )));
    }
    Ok(ramp_slope * mass / k_inner)
}

/// Unit step response of `(b1 s + b0) / (a2 s^2 + a1 s + a0)` sampled every
/// `dt` up to `horizon`, integrated with RK4 in controllable canonical form.
pub fn step_response(
    numerator: (f64, f64),
    denominator: &SecondOrderPolynomial,
    dt: f64,
    horizon: f64,
) -> Result<Vec<(f64, f64)>> {
    if denominator.a2 == 0.0 {
        return Err(Error::DegenerateSystem);
    }
    let (b1, b0) = numerator;
    let SecondOrderPolynomial { a2, a1, a0 } = *denominator;
    let steps = (horizon / dt).round() as usize;
    let mut z = [0.0f64; 2];
    let rhs = |z: &[f64; 2]| [z[1], (1.0 - a1 * z[1] - a0 * z[0]) / a2];
    let mut out = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        out.push((k as f64 * dt, b0 * z[0] + b1 * z[1]));
        z = crate::dynamics::integrate_step(z, dt, rhs)?;
    }
    Ok(out)
}
