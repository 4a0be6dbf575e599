use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use pedbrake_core::config::RunConfig;
use pedbrake_core::PdGains;

/// Pedestrian emergency braking simulator.
///
/// Values are resolved in order of precedence: command-line flags, then the
/// `--config` file, then built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "pedbrake", version, about)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory for this run [default: runs/<subcommand>].
    #[arg(long, global = true, value_name = "PATH")]
    pub out_dir: Option<PathBuf>,

    /// Seed for the random streams of this run.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Use the built-in defaults and ignore any configuration file.
    #[arg(long, global = true, conflicts_with = "config")]
    pub defaults: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-loop braking towards a stationary pedestrian.
    Brake(ScenarioArgs),
    /// Noise-free braking runs over a list of outer proportional gains.
    SweepKp(SweepArgs),
    /// Lateral offset step response.
    Lateral(LateralArgs),
    /// Synthetic range characterization at fixed pedestrian distances.
    Characterize(CharacterizeArgs),
    /// Stability report for the longitudinal loop.
    Analyze(AnalyzeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Brake(_) => "brake",
            Command::SweepKp(_) => "sweep-kp",
            Command::Lateral(_) => "lateral",
            Command::Characterize(_) => "characterize",
            Command::Analyze(_) => "analyze",
        }
    }
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Initial speed, m/s.
    #[arg(long)]
    pub initial_speed: Option<f64>,
    /// Initial distance to the pedestrian, m.
    #[arg(long)]
    pub initial_distance: Option<f64>,
    /// Distance to keep from the pedestrian, m.
    #[arg(long)]
    pub safe_offset: Option<f64>,
    /// Simulation and control step, s.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulation horizon, s.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Gains as K_p,K_d,K.
    #[arg(long, value_delimiter = ',', value_name = "KP,KD,K")]
    pub gains: Option<Vec<f64>>,
    /// Vehicle mass, kg.
    #[arg(long)]
    pub mass: Option<f64>,
    /// Braking force at full brake command, N.
    #[arg(long)]
    pub f_brake_max: Option<f64>,
    /// Disable aerodynamic drag.
    #[arg(long)]
    pub no_drag: bool,
    /// Enable range noise (default model unless the config file sets one).
    #[arg(long)]
    pub noise: bool,
    /// Exponential smoothing factor for the range signal, in (0, 1].
    #[arg(long)]
    pub smoothing: Option<f64>,
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated K_p values.
    #[arg(long, value_delimiter = ',', value_name = "KP,...")]
    pub kp: Option<Vec<f64>>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct LateralArgs {
    /// Initial lateral offset, m.
    #[arg(long)]
    pub initial_offset: Option<f64>,
    /// Reference lateral position applied at t = 0, m.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Gains as K_p,K_d,K.
    #[arg(long, value_delimiter = ',', value_name = "KP,KD,K")]
    pub gains: Option<Vec<f64>>,
    /// Forward speed, m/s.
    #[arg(long)]
    pub vx: Option<f64>,
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    /// Comma-separated pedestrian distances, m.
    #[arg(long, value_delimiter = ',')]
    pub ranges: Option<Vec<f64>>,
    /// Seconds spent at each distance.
    #[arg(long)]
    pub dwell: Option<f64>,
    /// Seconds between detections.
    #[arg(long)]
    pub sample_period: Option<f64>,
    /// Use a noiseless sensor.
    #[arg(long)]
    pub zero_noise: bool,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub sigma_slope: Option<f64>,
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Gains as K_p,K_d,K.
    #[arg(long, value_delimiter = ',', value_name = "KP,KD,K")]
    pub gains: Option<Vec<f64>>,
    /// Vehicle mass, kg.
    #[arg(long)]
    pub mass: Option<f64>,
    /// Reference ramp slope for the velocity error bound, m/s^2.
    #[arg(long)]
    pub ramp_slope: Option<f64>,
}

fn parse_gains(values: &[f64]) -> Result<PdGains> {
    match values {
        [k_p, k_d, k_inner] => Ok(PdGains::new(*k_p, *k_d, *k_inner)),
        _ => bail!(
            "--gains takes exactly three values K_p,K_d,K, got {}",
            values.len()
        ),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl ScenarioArgs {
    pub fn apply(&self, cfg: &mut RunConfig, seed: Option<u64>) -> Result<()> {
        let brake = &mut cfg.brake;
        set(&mut brake.initial_speed, self.initial_speed);
        set(&mut brake.initial_ped_distance, self.initial_distance);
        set(&mut brake.safe_offset, self.safe_offset);
        set(&mut brake.dt, self.dt);
        set(&mut brake.horizon, self.horizon);
        set(&mut brake.plant.mass, self.mass);
        set(&mut brake.f_brake_max, self.f_brake_max);
        set(&mut brake.seed, seed);
        set(&mut brake.label, self.label.clone());
        if let Some(g) = &self.gains {
            brake.gains = parse_gains(g)?;
        }
        if self.no_drag {
            brake.plant.drag_enabled = false;
        }
        if self.noise && brake.noise.is_none() {
            brake.noise = Some(Default::default());
        }
        if self.smoothing.is_some() {
            brake.smoothing_alpha = self.smoothing;
        }
        Ok(())
    }
}

impl SweepArgs {
    pub fn apply(&self, cfg: &mut RunConfig, seed: Option<u64>) -> Result<()> {
        let distance = self.scenario.initial_distance;
        self.scenario.apply(cfg, seed)?;
        set(&mut cfg.sweep.initial_ped_distance, distance);
        set(&mut cfg.sweep.kp_values, self.kp.clone());
        Ok(())
    }
}

impl LateralArgs {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let lat = &mut cfg.lateral;
        set(&mut lat.initial_offset, self.initial_offset);
        set(&mut lat.dt, self.dt);
        set(&mut lat.horizon, self.horizon);
        set(&mut lat.params.v_x, self.vx);
        set(&mut lat.label, self.label.clone());
        if let Some(step) = self.step {
            lat.reference = vec![[0.0, step]];
        }
        if let Some(g) = &self.gains {
            lat.gains = parse_gains(g)?;
        }
        Ok(())
    }
}

impl CharacterizeArgs {
    pub fn apply(&self, cfg: &mut RunConfig, seed: Option<u64>) -> Result<()> {
        let ch = &mut cfg.characterize;
        set(&mut ch.ranges, self.ranges.clone());
        set(&mut ch.dwell, self.dwell);
        set(&mut ch.sample_period, self.sample_period);
        set(&mut ch.label, self.label.clone());
        if self.zero_noise {
            ch.noise = pedbrake_core::DetectionNoiseModel::noiseless().with_seed(ch.noise.seed);
        }
        set(&mut ch.noise.sigma0, self.sigma0);
        set(&mut ch.noise.sigma_slope, self.sigma_slope);
        set(&mut ch.noise.seed, seed);
        Ok(())
    }
}

impl AnalyzeArgs {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let an = &mut cfg.analyze;
        set(&mut an.mass, self.mass);
        set(&mut an.ramp_slope, self.ramp_slope);
        if let Some(g) = &self.gains {
            an.gains = parse_gains(g)?;
        }
        Ok(())
    }
}
