use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{fmt_float, step_count};
use crate::controllers::{lateral_step_record, PdGains};
use crate::dynamics::{step_lateral, LateralParams, LateralState, MAX_STEP};
use crate::error::{Error, Result};

pub const LATERAL_HEADER: [&str; 8] = [
    "t", "y", "psi", "psi_dot", "v_y", "r_psidot", "delta_f", "y_ref",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LateralScenarioConfig {
    pub label: String,
    /// Lateral position at t = 0, m.
    pub initial_offset: f64,
    /// Piecewise-constant reference as `[start_time, y_ref]` pairs sorted by
    /// time. The reference is zero before the first entry.
    pub reference: Vec<[f64; 2]>,
    pub dt: f64,
    pub horizon: f64,
    /// Settling band as a fraction of the final step size.
    pub settle_band: f64,
    /// Runs are aborted once `|y|` exceeds this, m.
    pub divergence_limit: f64,
    pub gains: PdGains,
    pub params: LateralParams,
}

impl Default for LateralScenarioConfig {
    fn default() -> Self {
        Self {
            label: "lateral".into(),
            initial_offset: 0.0,
            reference: vec![[0.0, 1.0]],
            dt: 0.01,
            horizon: 30.0,
            settle_band: 0.02,
            divergence_limit: 100.0,
            gains: PdGains::lateral_default(),
            params: LateralParams::default(),
        }
    }
}

impl LateralScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.gains.validate()?;
        if !(self.dt > 0.0 && self.dt <= MAX_STEP) {
            return Err(Error::Config(format!(
                "lateral dt must lie in (0, {MAX_STEP}] s, got {}",
                self.dt
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config("lateral horizon must be positive".into()));
        }
        if !(self.settle_band > 0.0 && self.divergence_limit > 0.0) {
            return Err(Error::Config(
                "settle_band and divergence_limit must be positive".into(),
            ));
        }
        if !self.initial_offset.is_finite()
            || self.reference.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::Config("lateral reference must be finite".into()));
        }
        if self.reference.windows(2).any(|w| w[1][0] < w[0][0]) {
            return Err(Error::Config(
                "lateral reference times must be sorted".into(),
            ));
        }
        Ok(())
    }

    pub fn reference_at(&self, t: f64) -> f64 {
        self.reference
            .iter()
            .take_while(|entry| entry[0] <= t)
            .last()
            .map_or(0.0, |entry| entry[1])
    }

    fn last_change_before(&self, t: f64) -> f64 {
        self.reference
            .iter()
            .take_while(|entry| entry[0] <= t)
            .last()
            .map_or(0.0, |entry| entry[0].max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LateralRow {
    pub t: f64,
    pub y: f64,
    pub psi: f64,
    pub psi_dot: f64,
    pub v_y: f64,
    pub r_psidot: f64,
    pub delta_f: f64,
    pub y_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateralSummary {
    pub label: String,
    pub diverged: bool,
    /// Settled inside the band by the end of the run without diverging.
    pub converged: bool,
    /// Peak excursion past the final reference, as a fraction of the step.
    pub overshoot: f64,
    /// Time from the last reference change until `y` stays inside the band.
    pub settling_time: Option<f64>,
    pub final_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LateralLog {
    pub rows: Vec<LateralRow>,
    pub summary: LateralSummary,
}

impl LateralLog {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(LATERAL_HEADER)?;
        for r in &self.rows {
            csv.write_record(
                [
                    r.t, r.y, r.psi, r.psi_dot, r.v_y, r.r_psidot, r.delta_f, r.y_ref,
                ]
                .map(fmt_float),
            )?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Closed-loop lane-offset tracking at constant forward speed.
///
/// The derivative term is primed with the initial error, so a reference
/// step at t = 0 does not produce a derivative kick.
pub fn run_lateral_scenario(config: &LateralScenarioConfig) -> Result<LateralLog> {
    config.validate()?;
    let dt = config.dt;
    let steps = step_count(config.horizon, dt);
    let mut state = LateralState {
        y: config.initial_offset,
        ..Default::default()
    };
    let mut prev_error = config.reference_at(0.0) - state.y;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut diverged = false;

    for k in 0..=steps {
        let t = k as f64 * dt;
        let y_ref = config.reference_at(t);
        let error = y_ref - state.y;
        let (r_psidot, delta_f) = lateral_step_record(
            error,
            state.psi_dot,
            &config.gains,
            prev_error,
            dt,
            config.params.max_steer,
        )?;
        prev_error = error;
        rows.push(LateralRow {
            t,
            y: state.y,
            psi: state.psi,
            psi_dot: state.psi_dot,
            v_y: state.v_y,
            r_psidot,
            delta_f,
            y_ref,
        });
        if state.y.is_nan() || state.y.abs() > config.divergence_limit {
            diverged = true;
            break;
        }
        if k == steps {
            break;
        }
        state = step_lateral(state, delta_f, &config.params, dt)?;
    }

    let summary = summarize(config, &rows, diverged);
    Ok(LateralLog { rows, summary })
}

fn summarize(
    config: &LateralScenarioConfig,
    rows: &[LateralRow],
    diverged: bool,
) -> LateralSummary {
    let last = rows.last().expect("at least one row");
    let target = last.y_ref;
    let change = config.last_change_before(last.t);
    let tail: Vec<&LateralRow> = rows.iter().filter(|r| r.t >= change).collect();
    let start = tail.first().map_or(last.y, |r| r.y);
    let step = target - start;
    let band = if step == 0.0 {
        config.settle_band
    } else {
        config.settle_band * step.abs()
    };

    let overshoot = if step == 0.0 {
        0.0
    } else {
        tail.iter()
            .map(|r| (r.y - target) * step.signum() / step.abs())
            .fold(0.0, f64::max)
    };
    let final_error = target - last.y;
    let settled = !diverged && final_error.abs() <= band;
    let settling_time = settled.then(|| {
        tail.iter()
            .rposition(|r| (r.y - target).abs() > band)
            .map_or(0.0, |i| tail[i].t + config.dt - change)
    });

    LateralSummary {
        label: config.label.clone(),
        diverged,
        converged: settled,
        overshoot,
        settling_time,
        final_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_stays_put() {
        let cfg = LateralScenarioConfig {
            reference: vec![],
            ..Default::default()
        };
        let log = run_lateral_scenario(&cfg).unwrap();
        assert!(log.rows.iter().all(|r| r.y == 0.0 && r.delta_f == 0.0));
        assert!(log.summary.converged);
        assert_eq!(log.summary.overshoot, 0.0);
    }

    #[test]
    fn unit_step_converges_with_small_overshoot() {
        let log = run_lateral_scenario(&LateralScenarioConfig::default()).unwrap();
        let s = &log.summary;
        assert!(s.converged && !s.diverged);
        assert!(
            s.overshoot > 0.0 && s.overshoot < 0.2,
            "overshoot {}",
            s.overshoot
        );
        assert!(s.settling_time.unwrap() < 30.0);
        assert!(log.rows.iter().all(|r| r.delta_f.abs() <= 0.5));
    }

    #[test]
    fn stiffer_tires_still_converge() {
        let cfg = LateralScenarioConfig {
            params: LateralParams {
                c_f: 160_000.0,
                c_r: 160_000.0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(run_lateral_scenario(&cfg).unwrap().summary.converged);
    }

    #[test]
    fn piecewise_reference() {
        let cfg = LateralScenarioConfig {
            reference: vec![[0.0, 1.0], [15.0, -0.5]],
            horizon: 40.0,
            ..Default::default()
        };
        assert_eq!(cfg.reference_at(-1.0), 0.0);
        assert_eq!(cfg.reference_at(14.99), 1.0);
        assert_eq!(cfg.reference_at(15.0), -0.5);
        let log = run_lateral_scenario(&cfg).unwrap();
        assert!(log.summary.converged);
        assert!(log.summary.final_error.abs() < 0.01);
    }

    #[test]
    fn divergence_aborts_run() {
        let cfg = LateralScenarioConfig {
            divergence_limit: 0.5,
            ..Default::default()
        };
        let log = run_lateral_scenario(&cfg).unwrap();
        assert!(log.summary.diverged);
        assert!(!log.summary.converged);
        assert!(log.rows.last().unwrap().y > 0.5);
        assert!(log.rows.len() < 3001);
    }

    #[test]
    fn rejects_unsorted_reference() {
        let cfg = LateralScenarioConfig {
            reference: vec![[5.0, 1.0], [1.0, 0.0]],
            ..Default::default()
        };
        assert!(run_lateral_scenario(&cfg).is_err());
    }
}
