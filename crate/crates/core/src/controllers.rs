//! Cascaded PD controllers.
//!
//! Both controllers share one structure: an outer PD law on position error
//! produces a rate reference (speed for braking, yaw rate for steering), and
//! an inner proportional law turns the rate error into an actuator command.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Gains of a cascaded PD loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    /// Outer proportional gain.
    pub k_p: f64,
    /// Outer derivative gain, s.
    pub k_d: f64,
    /// Inner proportional gain.
    pub k_inner: f64,
}

impl PdGains {
    pub const fn new(k_p: f64, k_d: f64, k_inner: f64) -> Self {
        Self { k_p, k_d, k_inner }
    }

    /// Longitudinal gains used in the vehicle experiments.
    pub const fn braking_default() -> Self {
        Self::new(0.8, 0.1, 10_000.0)
    }

    pub const fn lateral_default() -> Self {
        Self::new(0.15, 0.25, 0.6)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("k_p", self.k_p)?;
        ensure_finite("k_d", self.k_d)?;
        ensure_finite("k_inner", self.k_inner)?;
        if self.k_p <= 0.0 || self.k_d < 0.0 || self.k_inner <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gains need k_p > 0, k_d >= 0, k_inner > 0; got ({}, {}, {})",
                self.k_p, self.k_d, self.k_inner
            )));
        }
        Ok(())
    }
}

impl Default for PdGains {
    fn default() -> Self {
        Self::braking_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongitudinalConfig {
    pub gains: PdGains,
    /// Distance kept between the stop point and the pedestrian, m.
    pub safe_offset: f64,
    /// Braking force produced by a full brake command, N.
    pub f_brake_max: f64,
    pub dt: f64,
    pub mass: f64,
}

impl Default for LongitudinalConfig {
    fn default() -> Self {
        Self {
            gains: PdGains::braking_default(),
            safe_offset: 5.0,
            f_brake_max: 8000.0,
            dt: 0.01,
            mass: 1725.0,
        }
    }
}

impl LongitudinalConfig {
    pub fn validate(&self) -> Result<()> {
        self.gains.validate()?;
        for (name, value) in [
            ("safe_offset", self.safe_offset),
            ("f_brake_max", self.f_brake_max),
            ("dt", self.dt),
            ("mass", self.mass),
        ] {
            ensure_finite(name, value)?;
            if value <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Every signal of the braking loop for one control step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerStepRecord {
    /// Stop point, m ahead of the vehicle.
    pub r: f64,
    /// Position error, m.
    pub e1: f64,
    /// Reference speed, m/s.
    pub r_v: f64,
    /// Speed error, m/s.
    pub e2: f64,
    /// Commanded force, N.
    pub u: f64,
    /// Normalized brake command in [0, 1].
    pub brake_cmd: f64,
}

/// Outer loop: PD on the position error, floored at zero so the controller
/// never asks for reverse.
pub fn reference_velocity(e1: f64, e1_dot: f64, gains: &PdGains) -> f64 {
    (gains.k_p * e1 + gains.k_d * e1_dot).max(0.0)
}

/// Inner loop: proportional force on the speed error. Negative decelerates.
pub fn braking_force(e2: f64, k_inner: f64) -> f64 {
    k_inner * e2
}

/// Maps a force to a brake command. Positive force would need throttle and
/// maps to zero.
pub fn force_to_brake_command(u: f64, f_brake_max: f64) -> f64 {
    (-u / f_brake_max).clamp(0.0, 1.0)
}

/// One step of the braking controller.
///
/// The derivative of the position error is taken as `-v` from the speed
/// sensor rather than by differencing the (noisy) range signal, which is
/// exact for a stationary pedestrian. A negative range means the vehicle is
/// already past the pedestrian plane and is treated as range zero.
pub fn longitudinal_step(
    measured_ped_distance: f64,
    v: f64,
    config: &LongitudinalConfig,
) -> Result<ControllerStepRecord> {
    ensure_finite("measured_ped_distance", measured_ped_distance)?;
    ensure_finite("v", v)?;
    if v < 0.0 {
        return Err(Error::InvalidInput(format!(
            "speed must be non-negative, got {v}"
        )));
    }
    let distance = measured_ped_distance.max(0.0);
    let e1 = distance - config.safe_offset;
    let r_v = reference_velocity(e1, -v, &config.gains);
    let e2 = r_v - v;
    let u = braking_force(e2, config.gains.k_inner);
    Ok(ControllerStepRecord {
        r: e1,
        e1,
        r_v,
        e2,
        u,
        brake_cmd: force_to_brake_command(u, config.f_brake_max),
    })
}

/// Range at which a noise-free approach at speed `v` starts braking.
pub fn braking_onset_error(v: f64, gains: &PdGains) -> f64 {
    (1.0 + gains.k_d) * v / gains.k_p
}

/// One step of the steering controller. Returns the front wheel angle, rad,
/// saturated to `max_steer`.
pub fn lateral_step(
    lateral_offset_error: f64,
    psi_dot: f64,
    gains: &PdGains,
    prev_error: f64,
    dt: f64,
    max_steer: f64,
) -> Result<f64> {
    Ok(lateral_step_record(
        lateral_offset_error,
        psi_dot,
        gains,
        prev_error,
        dt,
        max_steer,
    )?
    .1)
}

/// As [`lateral_step`], also returning the yaw rate reference.
pub(crate) fn lateral_step_record(
    error: f64,
    psi_dot: f64,
    gains: &PdGains,
    prev_error: f64,
    dt: f64,
    max_steer: f64,
) -> Result<(f64, f64)> {
    for (name, value) in [
        ("lateral error", error),
        ("psi_dot", psi_dot),
        ("previous lateral error", prev_error),
    ] {
        ensure_finite(name, value)?;
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let yaw_rate_ref = gains.k_p * error + gains.k_d * (error - prev_error) / dt;
    let delta = (gains.k_inner * (yaw_rate_ref - psi_dot)).clamp(-max_steer, max_steer);
    Ok((yaw_rate_ref, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn defaults() -> LongitudinalConfig {
        LongitudinalConfig::default()
    }

    #[test]
    fn reference_velocity_examples() {
        let g = PdGains::braking_default();
        assert_relative_eq!(reference_velocity(20.0, -8.13, &g), 15.187, epsilon = 1e-12);
        assert_eq!(reference_velocity(0.0, 0.0, &g), 0.0);
        assert_eq!(reference_velocity(-2.0, 0.0, &g), 0.0);
    }

    #[test]
    fn braking_force_examples() {
        assert_eq!(braking_force(-0.5, 10_000.0), -5000.0);
        assert_eq!(braking_force(0.0, 10_000.0), 0.0);
        assert_eq!(braking_force(-2.0, 10_000.0), -20_000.0);
    }

    #[test]
    fn brake_command_examples() {
        assert_eq!(force_to_brake_command(-5000.0, 8000.0), 0.625);
        assert_eq!(force_to_brake_command(3000.0, 8000.0), 0.0);
        assert_eq!(force_to_brake_command(-20_000.0, 8000.0), 1.0);
    }

    #[test]
    fn idle_while_far_away() {
        let rec = longitudinal_step(25.0, 8.13, &defaults()).unwrap();
        assert_eq!(rec.e1, 20.0);
        assert_relative_eq!(rec.r_v, 15.187, epsilon = 1e-12);
        assert_relative_eq!(rec.e2, 7.057, epsilon = 1e-12);
        assert_eq!(rec.brake_cmd, 0.0);
    }

    #[test]
    fn at_rest_at_stop_point() {
        let rec = longitudinal_step(5.0, 0.0, &defaults()).unwrap();
        assert_eq!(
            (rec.e1, rec.r_v, rec.e2, rec.brake_cmd),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn onset_threshold() {
        let g = PdGains::braking_default();
        let onset = braking_onset_error(8.13, &g);
        assert_relative_eq!(onset, 11.17875, epsilon = 1e-12);
        let cfg = defaults();
        let just_outside = longitudinal_step(5.0 + onset + 1e-6, 8.13, &cfg).unwrap();
        let just_inside = longitudinal_step(5.0 + onset - 1e-6, 8.13, &cfg).unwrap();
        assert_eq!(just_outside.brake_cmd, 0.0);
        assert!(just_inside.brake_cmd > 0.0);
    }

    #[test]
    fn negative_range_commands_full_stop() {
        let rec = longitudinal_step(-3.0, 2.0, &defaults()).unwrap();
        assert_eq!(rec.e1, -5.0);
        assert_eq!(rec.r_v, 0.0);
        assert_eq!(rec.brake_cmd, 1.0);
    }

    #[test]
    fn rejects_reverse_speed() {
        assert!(longitudinal_step(10.0, -1.0, &defaults()).is_err());
        assert!(longitudinal_step(f64::NAN, 1.0, &defaults()).is_err());
    }

    #[test]
    fn lateral_examples() {
        let g = PdGains::new(0.15, 0.05, 0.6);
        assert_eq!(lateral_step(0.0, 0.0, &g, 0.0, 0.01, 0.5).unwrap(), 0.0);
        let (r, d) = lateral_step_record(1.0, 0.0, &g, 1.0, 0.01, 0.5).unwrap();
        assert_relative_eq!(r, 0.15, epsilon = 1e-15);
        assert_relative_eq!(d, 0.09, epsilon = 1e-15);
        assert_relative_eq!(
            lateral_step(0.0, 0.2, &g, 0.0, 0.01, 0.5).unwrap(),
            -0.12,
            epsilon = 1e-15
        );
    }

    #[test]
    fn gain_validation() {
        assert!(PdGains::braking_default().validate().is_ok());
        assert!(PdGains::new(0.0, 0.1, 1.0).validate().is_err());
        assert!(PdGains::new(0.8, -0.1, 1.0).validate().is_err());
        assert!(PdGains::new(0.8, 0.1, 0.0).validate().is_err());
    }

    proptest! {
        #[test]
        fn brake_command_is_bounded(d in -100.0..200.0f64, v in 0.0..50.0f64) {
            let rec = longitudinal_step(d, v, &defaults()).unwrap();
            prop_assert!((0.0..=1.0).contains(&rec.brake_cmd));
        }

        #[test]
        fn closer_never_brakes_less(d in 0.0..100.0f64, gap in 0.0..20.0f64, v in 0.0..30.0f64) {
            let far = longitudinal_step(d + gap, v, &defaults()).unwrap();
            let near = longitudinal_step(d, v, &defaults()).unwrap();
            prop_assert!(near.brake_cmd >= far.brake_cmd);
        }

        #[test]
        fn doubling_inner_gain_doubles_force(e2 in -50.0..50.0f64, k in 1.0..1e5f64) {
            prop_assert_eq!(braking_force(e2, 2.0 * k), 2.0 * braking_force(e2, k));
        }

        #[test]
        fn onset_identity(d in 5.0..60.0f64, v in 0.0..20.0f64) {
            let cfg = defaults();
            let rec = longitudinal_step(d, v, &cfg).unwrap();
            let e1 = d - cfg.safe_offset;
            let g = cfg.gains;
            prop_assert_eq!(rec.brake_cmd > 0.0, g.k_p * e1 - g.k_d * v < v);
        }

        #[test]
        fn steering_is_saturated(
            e in -50.0..50.0f64,
            prev in -50.0..50.0f64,
            yaw in -2.0..2.0f64,
            limit in 0.05..1.0f64,
        ) {
            let d = lateral_step(e, yaw, &PdGains::lateral_default(), prev, 0.01, limit).unwrap();
            prop_assert!(d.abs() <= limit);
        }
    }
}
