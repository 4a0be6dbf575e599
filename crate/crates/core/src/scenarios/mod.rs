//! Closed-loop experiments: plant, controller and sensor wired together,
//! with full per-step logs.

mod braking;
mod characterization;
mod lateral;

pub use braking::{
    run_braking_scenario, run_kp_sweep, run_seed_batch, ScenarioConfig, TrajectoryLog,
    TrajectoryRow, TrajectorySummary, TRAJECTORY_HEADER,
};
pub use characterization::{
    run_detection_characterization, CharacterizationConfig, CharacterizationLog,
    CharacterizationSample, RangeStats, CHARACTERIZATION_HEADER,
};
pub use lateral::{
    run_lateral_scenario, LateralLog, LateralRow, LateralScenarioConfig, LateralSummary,
    LATERAL_HEADER,
};

/// CSV float rendering: ten significant digits in scientific notation.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.9e}")
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub(crate) fn step_count(horizon: f64, dt: f64) -> usize {
    (horizon / dt).round() as usize
}
