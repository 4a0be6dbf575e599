use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fmt_float, fmt_opt, step_count};
use crate::controllers::{longitudinal_step, LongitudinalConfig, PdGains};
use crate::dynamics::{step_longitudinal, LongitudinalParams, LongitudinalState, MAX_STEP};
use crate::error::{ensure_finite, Error, Result};
use crate::sensing::{DetectionNoiseModel, DetectionSensor, ExpSmoother};

pub const TRAJECTORY_HEADER: [&str; 11] = [
    "t",
    "x",
    "v",
    "ped_true",
    "ped_meas",
    "r",
    "e1",
    "r_v",
    "e2",
    "u",
    "brake_cmd",
];

/// A straight-line approach towards a stationary pedestrian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub label: String,
    /// Seeds the range sensor. Overrides the noise model's own seed.
    pub seed: u64,
    /// m/s
    pub initial_speed: f64,
    /// m
    pub initial_ped_distance: f64,
    /// m
    pub safe_offset: f64,
    pub dt: f64,
    pub horizon: f64,
    /// N at full brake command.
    pub f_brake_max: f64,
    /// Below this speed a braking vehicle is held at rest, m/s.
    pub standstill_speed: f64,
    /// One range sample every this many control steps.
    pub detection_decimation: u32,
    /// Exponential smoothing of the range signal; raw when absent.
    pub smoothing_alpha: Option<f64>,
    pub gains: PdGains,
    pub plant: LongitudinalParams,
    /// Range noise; measurements are exact when absent.
    pub noise: Option<DetectionNoiseModel>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            label: "brake".into(),
            seed: 0,
            initial_speed: 8.13,
            initial_ped_distance: 25.0,
            safe_offset: 5.0,
            dt: 0.01,
            horizon: 60.0,
            f_brake_max: 8000.0,
            standstill_speed: 0.005,
            detection_decimation: 1,
            smoothing_alpha: None,
            gains: PdGains::braking_default(),
            plant: LongitudinalParams::default(),
            noise: None,
        }
    }
}

impl ScenarioConfig {
    pub fn controller(&self) -> LongitudinalConfig {
        LongitudinalConfig {
            gains: self.gains,
            safe_offset: self.safe_offset,
            f_brake_max: self.f_brake_max,
            dt: self.dt,
            mass: self.plant.mass,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("initial_speed", self.initial_speed),
            ("initial_ped_distance", self.initial_ped_distance),
            ("horizon", self.horizon),
            ("standstill_speed", self.standstill_speed),
        ] {
            ensure_finite(name, value)?;
        }
        if self.horizon <= 0.0 {
            return Err(Error::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_STEP) {
            return Err(Error::Config(format!(
                "dt must lie in (0, {MAX_STEP}] s, got {}",
                self.dt
            )));
        }
        if self.initial_speed < 0.0 || self.standstill_speed < 0.0 {
            return Err(Error::Config(
                "initial_speed and standstill_speed must be non-negative".into(),
            ));
        }
        if self.initial_ped_distance <= self.safe_offset {
            return Err(Error::Config(format!(
                "initial_ped_distance ({}) must exceed safe_offset ({})",
                self.initial_ped_distance, self.safe_offset
            )));
        }
        if self.detection_decimation == 0 {
            return Err(Error::Config(
                "detection_decimation must be at least 1".into(),
            ));
        }
        if let Some(alpha) = self.smoothing_alpha {
            ExpSmoother::new(alpha)?;
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        self.plant.validate()?;
        self.controller().validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub ped_true: f64,
    /// Raw range measurement taken this step, if any.
    pub ped_meas: Option<f64>,
    /// Stop point in the world frame, m.
    pub r: f64,
    pub e1: f64,
    pub r_v: f64,
    pub e2: f64,
    pub u: f64,
    pub brake_cmd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub label: String,
    pub seed: u64,
    pub converged: bool,
    /// Distance between the vehicle and the pedestrian at the last row, m.
    pub final_gap: f64,
    pub final_speed: f64,
    /// Largest step-to-step speed drop divided by dt, m/s^2.
    pub peak_decel: f64,
    /// Time the vehicle came to rest; absent for non-converged runs.
    pub stop_time: Option<f64>,
}

impl TrajectorySummary {
    pub fn from_rows(
        rows: &[TrajectoryRow],
        label: &str,
        seed: u64,
        converged: bool,
    ) -> Result<Self> {
        let last = rows
            .last()
            .ok_or_else(|| Error::InvalidInput("empty trajectory".into()))?;
        let peak_decel = rows
            .windows(2)
            .map(|w| (w[0].v - w[1].v) / (w[1].t - w[0].t))
            .fold(0.0, f64::max);
        Ok(Self {
            label: label.to_owned(),
            seed,
            converged,
            final_gap: last.ped_true,
            final_speed: last.v,
            peak_decel,
            stop_time: converged.then_some(last.t),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<TrajectoryRow>,
    pub summary: TrajectorySummary,
}

impl TrajectoryLog {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(TRAJECTORY_HEADER)?;
        for row in &self.rows {
            csv.write_record([
                fmt_float(row.t),
                fmt_float(row.x),
                fmt_float(row.v),
                fmt_float(row.ped_true),
                fmt_opt(row.ped_meas),
                fmt_float(row.r),
                fmt_float(row.e1),
                fmt_float(row.r_v),
                fmt_float(row.e2),
                fmt_float(row.u),
                fmt_float(row.brake_cmd),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Index of the first row with a positive brake command.
    pub fn braking_onset(&self) -> Option<usize> {
        self.rows.iter().position(|r| r.brake_cmd > 0.0)
    }
}

/// Range estimate used by the controller: the latest detection, advanced by
/// the distance driven since it was taken.
struct RangeTracker {
    range: f64,
    taken_at: f64,
}

impl RangeTracker {
    fn observe(&mut self, range: f64, x: f64) {
        self.range = range;
        self.taken_at = x;
    }

    fn estimate(&self, x: f64) -> f64 {
        self.range - (x - self.taken_at)
    }
}

/// Simulates the approach from `x = 0` until the vehicle rests with the
/// brake released, or the horizon is reached. Runs that hit the horizon
/// while moving come back with `converged = false`.
///
/// The controller starts out with the true initial range, i.e. the
/// pedestrian is already detected when the run begins.
pub fn run_braking_scenario(config: &ScenarioConfig) -> Result<TrajectoryLog> {
    config.validate()?;
    let controller = config.controller();
    let mut sensor = config
        .noise
        .map(|m| DetectionSensor::new(m.with_seed(config.seed)))
        .transpose()?;
    let mut smoother = config.smoothing_alpha.map(ExpSmoother::new).transpose()?;
    let pedestrian_x = config.initial_ped_distance;

    let mut state = LongitudinalState::new(0.0, config.initial_speed);
    let mut tracker = RangeTracker {
        range: pedestrian_x,
        taken_at: 0.0,
    };
    if let Some(filter) = smoother.as_mut() {
        *filter = filter.with_initial(pedestrian_x);
    }

    let steps = step_count(config.horizon, config.dt);
    let mut rows = Vec::with_capacity(steps.min(1 << 16) + 1);
    let mut converged = false;
    for k in 0..=steps {
        let t = k as f64 * config.dt;
        let ped_true = pedestrian_x - state.x;
        let ped_meas = if k % config.detection_decimation as usize != 0 {
            None
        } else {
            match sensor.as_mut() {
                Some(s) if ped_true > 0.0 => s.sample(ped_true, t)?.value,
                Some(_) => None,
                None => Some(ped_true),
            }
        };
        if let Some(range) = ped_meas {
            let range = match smoother.as_mut() {
                Some(filter) => filter.update(Some(range)).unwrap_or(range),
                None => range,
            };
            tracker.observe(range, state.x);
        }

        let rec = longitudinal_step(tracker.estimate(state.x), state.v, &controller)?;
        rows.push(TrajectoryRow {
            t,
            x: state.x,
            v: state.v,
            ped_true,
            ped_meas,
            r: state.x + rec.r,
            e1: rec.e1,
            r_v: rec.r_v,
            e2: rec.e2,
            u: rec.u,
            brake_cmd: rec.brake_cmd,
        });

        if state.v == 0.0 && rec.brake_cmd == 0.0 {
            converged = true;
            break;
        }
        if k == steps {
            break;
        }
        let force = -rec.brake_cmd * config.f_brake_max;
        let mut next = step_longitudinal(state, force, &config.plant, config.dt)?;
        if rec.brake_cmd > 0.0 && next.v < config.standstill_speed {
            next.v = 0.0;
        }
        state = next;
    }

    let summary = TrajectorySummary::from_rows(&rows, &config.label, config.seed, converged)?;
    Ok(TrajectoryLog { rows, summary })
}

/// One noise-free run per outer proportional gain, everything else fixed.
pub fn run_kp_sweep(base: &ScenarioConfig, kp_values: &[f64]) -> Result<Vec<TrajectoryLog>> {
    if let Some(bad) = kp_values.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "k_p values must be positive, got {bad}"
        )));
    }
    let configs: Vec<ScenarioConfig> = kp_values
        .iter()
        .map(|&k_p| ScenarioConfig {
            label: format!("kp_{k_p}"),
            gains: PdGains { k_p, ..base.gains },
            noise: None,
            ..base.clone()
        })
        .collect();
    configs.par_iter().map(run_braking_scenario).collect()
}

/// Runs `base` once per seed. Order of the output follows `seeds`.
pub fn run_seed_batch(base: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<TrajectoryLog>> {
    seeds
        .par_iter()
        .map(|&seed| {
            run_braking_scenario(&ScenarioConfig {
                seed,
                label: format!("{}_seed{seed}", base.label),
                ..base.clone()
            })
        })
        .collect()
}
