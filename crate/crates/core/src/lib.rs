//! Simulation and analysis toolkit for a cascaded PD pedestrian emergency
//! braking controller and its companion lateral (yaw-rate) controller.
//!
//! The crate is split along the signal path:
//!
//! * [`dynamics`] holds the longitudinal point-mass plant, the linear
//!   single-track lateral model and a fixed-step RK4 integrator.
//! * [`controllers`] implements the outer position PD loop feeding an inner
//!   proportional loop, for both braking and steering.
//! * [`analysis`] gives closed-form stability and tracking results for the
//!   drag-free longitudinal loop.
//! * [`sensing`] models noisy monocular range measurements.
//! * [`scenarios`] wires everything into closed-loop experiments and logs.
//! * [`config`] is the on-disk run configuration.

pub mod analysis;
pub mod config;
pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod scenarios;
pub mod sensing;

pub use analysis::{
    closed_loop_denominator, closed_loop_poles, ramp_error_bound, routh_hurwitz_stable,
    stability_report, PoleSet, SecondOrderPolynomial, StabilityReport,
};
pub use controllers::{
    braking_force, force_to_brake_command, lateral_step, longitudinal_step, reference_velocity,
    ControllerStepRecord, LongitudinalConfig, PdGains,
};
pub use dynamics::{
    integrate_step, lateral_derivative, longitudinal_derivative, LateralParams, LateralState,
    LongitudinalParams, LongitudinalState,
};
pub use error::{Error, Result};
pub use scenarios::{
    run_braking_scenario, run_detection_characterization, run_kp_sweep, run_lateral_scenario,
    run_seed_batch, CharacterizationConfig, CharacterizationLog, LateralLog, LateralScenarioConfig,
    ScenarioConfig, TrajectoryLog,
};
pub use sensing::{sample_detection, smooth, DetectionNoiseModel, DetectionSensor, Measurement};
