use crate::error::{Error, Result};

/// How harvested energy arrives at each UE.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalModel {
    /// Independent Poisson arrivals with the per-UE rate.
    Poisson,
    /// Zero-variance arrivals: each UE accumulates its rate every slot and
    /// releases whole units as they complete.
    Deterministic,
    /// Scripted periodic pattern, `cycle[t % len][ue]` units per slot.
    Cyclic(Vec<Vec<u32>>),
}

impl ArrivalModel {
    pub fn name(&self) -> &'static str {
        match self {
            ArrivalModel::Poisson => "poisson",
            ArrivalModel::Deterministic => "deterministic",
            ArrivalModel::Cyclic(_) => "cyclic",
        }
    }
}

/// Physical scenario: cell geometry, link budget, battery and energy model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_ues: usize,
    pub k_channels: usize,
    pub battery_capacity: u32,
    pub tx_power: u32,
    pub unit_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm_per_hz: f64,
    pub cell_size_m: f64,
    pub ue_speed_mps: f64,
    /// Range the per-UE arrival rates are drawn from when `energy_rates` is unset.
    pub energy_rate_min: f64,
    pub energy_rate_max: f64,
    pub energy_rates: Option<Vec<f64>>,
    pub arrivals: ArrivalModel,
    pub fading_enabled: bool,
    /// Replaces distance-based pathloss with fixed per-UE gains (dB).
    pub fixed_gains_db: Option<Vec<f64>>,
    pub rate_unit_divisor: f64,
    pub initial_battery: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_ues: 30,
            k_channels: 2,
            battery_capacity: 5,
            tx_power: 2,
            unit_power_dbm: 5.0,
            bandwidth_hz: 5e6,
            noise_dbm_per_hz: -174.0,
            cell_size_m: 500.0,
            ue_speed_mps: 1.0,
            energy_rate_min: 0.8,
            energy_rate_max: 1.2,
            energy_rates: None,
            arrivals: ArrivalModel::Poisson,
            fading_enabled: true,
            fixed_gains_db: None,
            rate_unit_divisor: 1e6,
            initial_battery: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k_channels < 1 || self.k_channels > self.n_ues {
            return bad(format!(
                "k_channels must satisfy 1 <= K <= N (K={}, N={})",
                self.k_channels, self.n_ues
            ));
        }
        if self.tx_power < 1 || self.tx_power > self.battery_capacity {
            return bad(format!(
                "tx_power must satisfy 1 <= P <= C (P={}, C={})",
                self.tx_power, self.battery_capacity
            ));
        }
        if self.initial_battery > self.battery_capacity {
            return bad(format!(
                "initial_battery {} exceeds battery_capacity {}",
                self.initial_battery, self.battery_capacity
            ));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return bad(format!("bandwidth_hz must be positive, got {}", self.bandwidth_hz));
        }
        if !(self.rate_unit_divisor > 0.0 && self.rate_unit_divisor.is_finite()) {
            return bad(format!(
                "rate_unit_divisor must be positive, got {}",
                self.rate_unit_divisor
            ));
        }
        if !(self.cell_size_m > 0.0) {
            return bad(format!("cell_size_m must be positive, got {}", self.cell_size_m));
        }
        if !(self.ue_speed_mps >= 0.0 && self.ue_speed_mps.is_finite()) {
            return bad(format!("ue_speed_mps must be >= 0, got {}", self.ue_speed_mps));
        }
        if !self.unit_power_dbm.is_finite() || !self.noise_dbm_per_hz.is_finite() {
            return bad("unit_power_dbm and noise_dbm_per_hz must be finite".into());
        }
        if !(self.energy_rate_min >= 0.0 && self.energy_rate_min <= self.energy_rate_max)
            || !self.energy_rate_max.is_finite()
        {
            return bad(format!(
                "energy rate range must satisfy 0 <= min <= max, got [{}, {}]",
                self.energy_rate_min, self.energy_rate_max
            ));
        }
        if let Some(rates) = &self.energy_rates {
            if rates.len() != self.n_ues {
                return bad(format!("energy_rates has {} entries, expected {}", rates.len(), self.n_ues));
            }
            if rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
                return bad("energy_rates must be finite and >= 0".into());
            }
        }
        if let Some(g) = &self.fixed_gains_db {
            if g.len() != self.n_ues {
                return bad(format!("fixed_gains_db has {} entries, expected {}", g.len(), self.n_ues));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return bad("fixed_gains_db must be finite".into());
            }
        }
        if let ArrivalModel::Cyclic(cycle) = &self.arrivals {
            if cycle.is_empty() {
                return bad("arrival_cycle must not be empty".into());
            }
            if cycle.iter().any(|row| row.len() != self.n_ues) {
                return bad(format!("arrival_cycle rows must have {} entries", self.n_ues));
            }
        }
        Ok(())
    }

    pub fn link_budget(&self) -> LinkBudget {
        LinkBudget::from_scenario(self)
    }
}

/// Link-level constants for the Shannon rate of one uplink transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_mw: f64,
    pub noise_mw: f64,
    pub bandwidth_hz: f64,
    pub rate_unit_divisor: f64,
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

impl LinkBudget {
    /// One battery unit is the energy of a `unit_power_dbm` transmission over
    /// one slot, so `P` units per slot is `P * unit_power` of radiated power.
    pub fn from_scenario(cfg: &ScenarioConfig) -> Self {
        let noise_dbm = cfg.noise_dbm_per_hz + 10.0 * cfg.bandwidth_hz.log10();
        Self {
            tx_power_mw: cfg.tx_power as f64 * dbm_to_mw(cfg.unit_power_dbm),
            noise_mw: dbm_to_mw(noise_dbm),
            bandwidth_hz: cfg.bandwidth_hz,
            rate_unit_divisor: cfg.rate_unit_divisor,
        }
    }

    pub fn snr(&self, gain: f64) -> f64 {
        self.tx_power_mw * gain / self.noise_mw
    }

    /// Rate of a successful transmission over a channel with power gain `gain`,
    /// already divided by `rate_unit_divisor`.
    pub fn rate(&self, gain: f64) -> f64 {
        self.bandwidth_hz * (1.0 + self.snr(gain)).log2() / self.rate_unit_divisor
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn two_units_is_about_8_dbm() {
        let b = LinkBudget::from_scenario(&ScenarioConfig::default());
        let dbm = 10.0 * b.tx_power_mw.log10();
        assert!((dbm - 8.0103).abs() < 1e-3, "{dbm}");
        // -174 dBm/Hz over 5 MHz
        let noise_dbm = 10.0 * b.noise_mw.log10();
        assert!((noise_dbm - (-174.0 + 66.9897)).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_ranges() {
        let mut c = ScenarioConfig::default();
        c.k_channels = 0;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::default();
        c.tx_power = 6;
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::default();
        c.energy_rates = Some(vec![-1.0; 30]);
        assert!(c.validate().is_err());
        let mut c = ScenarioConfig::default();
        c.rate_unit_divisor = 0.0;
        assert!(c.validate().is_err());
    }
}
