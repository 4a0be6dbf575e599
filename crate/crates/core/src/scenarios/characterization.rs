use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{fmt_float, fmt_opt};
use crate::error::{Error, Result};
use crate::sensing::{DetectionNoiseModel, DetectionSensor};

pub const CHARACTERIZATION_HEADER: [&str; 3] = ["t", "ped_true", "ped_meas"];

/// Stationary vehicle, pedestrian standing at each range in turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizationConfig {
    pub label: String,
    /// m
    pub ranges: Vec<f64>,
    /// Time spent at each range, s.
    pub dwell: f64,
    /// Time between detections, s.
    pub sample_period: f64,
    pub noise: DetectionNoiseModel,
}

impl Default for CharacterizationConfig {
    fn default() -> Self {
        Self {
            label: "characterize".into(),
            ranges: vec![5.0, 10.0, 15.0, 20.0, 25.0],
            dwell: 5.0,
            sample_period: 0.01,
            noise: DetectionNoiseModel::default(),
        }
    }
}

impl CharacterizationConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.ranges.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::Config(format!("ranges must be positive, got {r}")));
        }
        if !(self.dwell > 0.0 && self.sample_period > 0.0) {
            return Err(Error::Config(
                "dwell and sample_period must be positive".into(),
            ));
        }
        self.noise.validate()
    }

    pub fn samples_per_range(&self) -> usize {
        (self.dwell / self.sample_period).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationSample {
    pub t: f64,
    pub ped_true: f64,
    pub ped_meas: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeStats {
    pub range: f64,
    pub samples: usize,
    pub dropouts: usize,
    pub mean: f64,
    /// Sample standard deviation of the present measurements.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationLog {
    pub samples: Vec<CharacterizationSample>,
    pub summary: Vec<RangeStats>,
}

impl CharacterizationLog {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(CHARACTERIZATION_HEADER)?;
        for s in &self.samples {
            csv.write_record([fmt_float(s.t), fmt_float(s.ped_true), fmt_opt(s.ped_meas)])?;
        }
        csv.flush()?;
        Ok(())
    }
}

fn range_stats(range: f64, samples: &[CharacterizationSample]) -> RangeStats {
    let present: Vec<f64> = samples.iter().filter_map(|s| s.ped_meas).collect();
    let n = present.len();
    let mean = if n == 0 {
        f64::NAN
    } else {
        present.iter().sum::<f64>() / n as f64
    };
    let std = if n < 2 {
        0.0
    } else {
        (present.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    RangeStats {
        range,
        samples: samples.len(),
        dropouts: samples.len() - n,
        mean,
        std,
    }
}

/// Synthetic range-characterization run: one seeded sensor stream, sampled
/// for `dwell` seconds at each range in order.
pub fn run_detection_characterization(
    config: &CharacterizationConfig,
) -> Result<CharacterizationLog> {
    config.validate()?;
    let mut sensor = DetectionSensor::new(config.noise)?;
    let per_range = config.samples_per_range();
    let mut samples = Vec::with_capacity(per_range * config.ranges.len());
    let mut summary = Vec::with_capacity(config.ranges.len());
    for &range in &config.ranges {
        let first = samples.len();
        for _ in 0..per_range {
            let t = samples.len() as f64 * config.sample_period;
            let m = sensor.sample(range, t)?;
            samples.push(CharacterizationSample {
                t,
                ped_true: range,
                ped_meas: m.value,
            });
        }
        summary.push(range_stats(range, &samples[first..]));
    }
    Ok(CharacterizationLog { samples, summary })
}
