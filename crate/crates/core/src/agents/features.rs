//! Network input encoding.

use crate::error::{Error, Result};

/// Maps raw channel gains and battery levels to network inputs: gains go to
/// dB and are scaled affinely from `[gain_db_min, gain_db_max]` onto
/// `[-1, 1]` (clamped); batteries are divided by the capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScaler {
    pub capacity: u32,
    pub gain_db_min: f64,
    pub gain_db_max: f64,
}

impl FeatureScaler {
    pub fn new(capacity: u32, gain_db_min: f64, gain_db_max: f64) -> Result<Self> {
        if capacity == 0 || !(gain_db_min < gain_db_max) {
            return Err(Error::Config(format!(
                "feature scaling needs C > 0 and gain_db_min < gain_db_max, got C={capacity}, [{gain_db_min}, {gain_db_max}]"
            )));
        }
        Ok(Self {
            capacity,
            gain_db_min,
            gain_db_max,
        })
    }

    pub fn gain(&self, gain: f64) -> f64 {
        let db = 10.0 * gain.log10();
        let x = 2.0 * (db - self.gain_db_min) / (self.gain_db_max - self.gain_db_min) - 1.0;
        x.clamp(-1.0, 1.0)
    }

    pub fn battery(&self, level: f64) -> f64 {
        level / self.capacity as f64
    }

    pub fn gains(&self, gains: &[f64]) -> Vec<f64> {
        gains.iter().map(|&g| self.gain(g)).collect()
    }

    /// Access-control observation: scaled gains followed by scaled batteries.
    pub fn access_state(&self, gains: &[f64], batteries: &[u32]) -> Vec<f64> {
        let mut v = self.gains(gains);
        v.extend(batteries.iter().map(|&b| self.battery(b as f64)));
        v
    }
}
