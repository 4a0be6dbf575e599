//! Noisy pedestrian range measurements.
//!
//! A sample is a dropout with probability `dropout_prob`, a wide outlier
//! with probability `outlier_prob`, and otherwise Gaussian around the true
//! range with a standard deviation that grows linearly with range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Smallest range a detection can report, m.
pub const MIN_RANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionNoiseModel {
    /// Standard deviation at zero range, m.
    pub sigma0: f64,
    /// Growth of the standard deviation per meter of range.
    pub sigma_slope: f64,
    pub outlier_prob: f64,
    /// Standard deviation of outliers, m.
    pub outlier_sigma: f64,
    pub dropout_prob: f64,
    pub seed: u64,
}

impl Default for DetectionNoiseModel {
    fn default() -> Self {
        Self {
            sigma0: 0.1,
            sigma_slope: 0.04,
            outlier_prob: 0.01,
            outlier_sigma: 3.0,
            dropout_prob: 0.02,
            seed: 0,
        }
    }
}

impl DetectionNoiseModel {
    /// A model that returns the true range every time.
    pub fn noiseless() -> Self {
        Self {
            sigma0: 0.0,
            sigma_slope: 0.0,
            outlier_prob: 0.0,
            outlier_sigma: 0.0,
            dropout_prob: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Nominal (non-outlier) standard deviation at `range`.
    pub fn sigma_at(&self, range: f64) -> f64 {
        self.sigma0 + self.sigma_slope * range
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("noise.sigma0", self.sigma0),
            ("noise.sigma_slope", self.sigma_slope),
            ("noise.outlier_sigma", self.outlier_sigma),
        ] {
            ensure_finite(name, value)?;
            if value < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {value}"
                )));
            }
        }
        for (name, p) in [
            ("noise.outlier_prob", self.outlier_prob),
            ("noise.dropout_prob", self.dropout_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.outlier_prob + self.dropout_prob > 1.0 {
            return Err(Error::InvalidParameter(
                "noise.outlier_prob + noise.dropout_prob exceeds 1".into(),
            ));
        }
        Ok(())
    }

    pub fn sensor(&self) -> Result<DetectionSensor> {
        DetectionSensor::new(*self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub timestamp: f64,
    /// Measured range, m. `None` on a dropout.
    pub value: Option<f64>,
}

/// Draws one range measurement.
///
/// Every call consumes one uniform draw, plus one standard normal draw when
/// a value is produced, so streams are reproducible for a given call
/// sequence.
pub fn sample_detection<R: Rng + ?Sized>(
    true_distance: f64,
    timestamp: f64,
    model: &DetectionNoiseModel,
    rng: &mut R,
) -> Result<Measurement> {
    ensure_finite("true_distance", true_distance)?;
    if true_distance <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "true distance must be positive, got {true_distance}"
        )));
    }
    let pick: f64 = rng.random();
    if pick < model.dropout_prob {
        return Ok(Measurement {
            timestamp,
            value: None,
        });
    }
    let sigma = if pick < model.dropout_prob + model.outlier_prob {
        model.outlier_sigma
    } else {
        model.sigma_at(true_distance)
    };
    let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
    Ok(Measurement {
        timestamp,
        value: Some((true_distance + sigma * z).max(MIN_RANGE)),
    })
}

/// A noise model bound to its own seeded random stream.
#[derive(Debug, Clone)]
pub struct DetectionSensor {
    model: DetectionNoiseModel,
    rng: ChaCha8Rng,
}

impl DetectionSensor {
    pub fn new(model: DetectionNoiseModel) -> Result<Self> {
        model.validate()?;
        Ok(Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.seed),
        })
    }

    pub fn model(&self) -> &DetectionNoiseModel {
        &self.model
    }

    pub fn sample(&mut self, true_distance: f64, timestamp: f64) -> Result<Measurement> {
        sample_detection(true_distance, timestamp, &self.model, &mut self.rng)
    }
}

/// Streaming first-order exponential filter. Dropouts hold the last output.
#[derive(Debug, Clone, Copy)]
pub struct ExpSmoother {
    alpha: f64,
    state: Option<f64>,
}

impl ExpSmoother {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothing factor must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(Self { alpha, state: None })
    }

    /// Seeds the filter output, as if `y0` had already been emitted.
    pub fn with_initial(mut self, y0: f64) -> Self {
        self.state = Some(y0);
        self
    }

    pub fn update(&mut self, x: Option<f64>) -> Option<f64> {
        if let Some(x) = x {
            self.state = Some(match self.state {
                Some(y) => self.alpha * x + (1.0 - self.alpha) * y,
                None => x,
            });
        }
        self.state
    }
}

/// Exponentially smooths a measurement stream, starting from its first
/// present value. Timestamps are preserved.
pub fn smooth(stream: &[Measurement], alpha: f64) -> Result<Vec<Measurement>> {
    let mut filter = ExpSmoother::new(alpha)?;
    Ok(stream
        .iter()
        .map(|m| Measurement {
            timestamp: m.timestamp,
            value: filter.update(m.value),
        })
        .collect())
}
