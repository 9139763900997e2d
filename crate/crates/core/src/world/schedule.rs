use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{stream_rng, WorldError, SCHEDULE_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Every gap equals `t_min`.
    Periodic,
    /// Gaps drawn uniformly in `[t_min, t_max]`.
    Jittered,
}

/// Arrival-time model for the intermittent measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSchedule {
    /// Smallest gap between arrivals (s).
    pub t_min: f64,
    /// Largest gap between arrivals (s).
    pub t_max: f64,
    pub mode: SamplingMode,
    #[serde(default)]
    pub seed: u64,
}

impl SamplingSchedule {
    pub fn periodic(period: f64) -> Self {
        Self { t_min: period, t_max: period, mode: SamplingMode::Periodic, seed: 0 }
    }

    pub fn jittered(t_min: f64, t_max: f64, seed: u64) -> Self {
        Self { t_min, t_max, mode: SamplingMode::Jittered, seed }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.t_min > 0.0 && self.t_min <= self.t_max && self.t_max.is_finite()) {
            return Err(WorldError::InvalidBounds { t_min: self.t_min, t_max: self.t_max });
        }
        Ok(())
    }

    /// Arrival times `t_1 < t_2 < …` up to and including `t_end`.
    ///
    /// The first arrival is one gap after time zero, so `t_1 ≤ t_max`.
    pub fn generate(&self, t_end: f64) -> Result<Vec<f64>, WorldError> {
        self.validate()?;
        let slack = 1e-9 * t_end.abs().max(1.0);
        let mut times = Vec::new();
        match self.mode {
            SamplingMode::Periodic => {
                let mut k = 1u64;
                loop {
                    let t = k as f64 * self.t_min;
                    if t > t_end + slack {
                        break;
                    }
                    times.push(t);
                    k += 1;
                }
            }
            SamplingMode::Jittered => {
                let mut rng = stream_rng(self.seed, SCHEDULE_STREAM);
                let mut t = 0.0;
                loop {
                    t += if self.t_max > self.t_min { rng.random_range(self.t_min..=self.t_max) } else { self.t_min };
                    if t > t_end + slack {
                        break;
                    }
                    times.push(t);
                }
            }
        }
        Ok(times)
    }
}
