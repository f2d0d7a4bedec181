//! Lossy battery storage with power and state-of-charge limits.
//!
//! Energy crossing the battery terminals is measured on the AC bus side.
//! Charging stores `e_bus * eta_c`; delivering `e_bus` drains `e_bus / eta_d`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BatteryError {
    #[error("energy request must be nonnegative, got {0}")]
    NegativeEnergy(f64),
    #[error("invalid battery spec: {0}")]
    InvalidSpec(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    /// Usable nameplate energy, kWh.
    pub capacity: f64,
    /// kW
    pub max_charge_power: f64,
    /// kW
    pub max_discharge_power: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub soc_min_frac: f64,
    pub soc_max_frac: f64,
    pub initial_soc_frac: f64,
}

impl Default for BatterySpec {
    /// Home-storage-wall class unit: 13.5 kWh, 5 kW, 95 % one-way efficiency.
    fn default() -> Self {
        Self {
            capacity: 13.5,
            max_charge_power: 5.0,
            max_discharge_power: 5.0,
            eta_c: 0.95,
            eta_d: 0.95,
            soc_min_frac: 0.1,
            soc_max_frac: 1.0,
            initial_soc_frac: 0.5,
        }
    }
}

impl BatterySpec {
    pub fn validate(&self) -> Result<(), BatteryError> {
        let fin = |x: f64| x.is_finite();
        if !(fin(self.capacity) && self.capacity > 0.0) {
            return Err(BatteryError::InvalidSpec("capacity must be positive"));
        }
        if !(fin(self.max_charge_power)
            && self.max_charge_power > 0.0
            && fin(self.max_discharge_power)
            && self.max_discharge_power > 0.0)
        {
            return Err(BatteryError::InvalidSpec("power limits must be positive"));
        }
        if !(self.eta_c > 0.0 && self.eta_c <= 1.0 && self.eta_d > 0.0 && self.eta_d <= 1.0) {
            return Err(BatteryError::InvalidSpec("efficiencies must be in (0, 1]"));
        }
        if !(0.0 <= self.soc_min_frac && self.soc_min_frac < self.soc_max_frac && self.soc_max_frac <= 1.0) {
            return Err(BatteryError::InvalidSpec("need 0 <= soc_min_frac < soc_max_frac <= 1"));
        }
        if !(self.soc_min_frac..=self.soc_max_frac).contains(&self.initial_soc_frac) {
            return Err(BatteryError::InvalidSpec("initial SoC outside the SoC window"));
        }
        Ok(())
    }

    pub fn soc_min(&self) -> f64 {
        self.soc_min_frac * self.capacity
    }

    pub fn soc_max(&self) -> f64 {
        self.soc_max_frac * self.capacity
    }

    pub fn initial_state(&self) -> BatteryState {
        BatteryState {
            soc: self.initial_soc_frac * self.capacity,
        }
    }
}

/// Stored energy in kWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc: f64,
}

impl BatteryState {
    pub fn soc_frac(&self, spec: &BatterySpec) -> f64 {
        (self.soc / spec.capacity).clamp(0.0, 1.0)
    }
}

/// Largest bus-side energy the battery can absorb within `dt` hours.
pub fn max_accept(state: &BatteryState, spec: &BatterySpec, dt: f64) -> f64 {
    let headroom = (spec.soc_max() - state.soc).max(0.0);
    (spec.max_charge_power * dt).min(headroom / spec.eta_c)
}

/// Largest bus-side energy the battery can deliver within `dt` hours.
pub fn max_deliver(state: &BatteryState, spec: &BatterySpec, dt: f64) -> f64 {
    let margin = (state.soc - spec.soc_min()).max(0.0);
    (spec.max_discharge_power * dt).min(margin * spec.eta_d)
}

/// Charges with up to `e_bus` kWh; returns the new state and the accepted amount.
pub fn apply_charge(
    state: &BatteryState,
    spec: &BatterySpec,
    e_bus: f64,
    dt: f64,
) -> Result<(BatteryState, f64), BatteryError> {
    if e_bus.is_nan() || e_bus < 0.0 {
        return Err(BatteryError::NegativeEnergy(e_bus));
    }
    if e_bus == 0.0 {
        return Ok((*state, 0.0));
    }
    let power_limit = spec.max_charge_power * dt;
    let headroom_limit = (spec.soc_max() - state.soc).max(0.0) / spec.eta_c;
    let accepted = e_bus.min(power_limit).min(headroom_limit);
    let soc = if accepted == headroom_limit {
        spec.soc_max().max(state.soc)
    } else {
        (state.soc + accepted * spec.eta_c).min(spec.soc_max())
    };
    Ok((BatteryState { soc }, accepted))
}

/// Discharges up to `e_bus_requested` kWh; returns the new state and the delivered amount.
pub fn apply_discharge(
    state: &BatteryState,
    spec: &BatterySpec,
    e_bus_requested: f64,
    dt: f64,
) -> Result<(BatteryState, f64), BatteryError> {
    if e_bus_requested.is_nan() || e_bus_requested < 0.0 {
        return Err(BatteryError::NegativeEnergy(e_bus_requested));
    }
    if e_bus_requested == 0.0 {
        return Ok((*state, 0.0));
    }
    let power_limit = spec.max_discharge_power * dt;
    let energy_limit = (state.soc - spec.soc_min()).max(0.0) * spec.eta_d;
    let delivered = e_bus_requested.min(power_limit).min(energy_limit);
    let soc = if delivered == energy_limit {
        spec.soc_min().min(state.soc)
    } else {
        (state.soc - delivered / spec.eta_d).max(spec.soc_min())
    };
    Ok((BatteryState { soc }, delivered))
}

/// A battery spec paired with its current state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub spec: BatterySpec,
    pub state: BatteryState,
}

impl Battery {
    pub fn new(spec: BatterySpec) -> Self {
        Self {
            state: spec.initial_state(),
            spec,
        }
    }

    pub fn max_accept(&self, dt: f64) -> f64 {
        max_accept(&self.state, &self.spec, dt)
    }

    pub fn max_deliver(&self, dt: f64) -> f64 {
        max_deliver(&self.state, &self.spec, dt)
    }

    pub fn soc_frac(&self) -> f64 {
        self.state.soc_frac(&self.spec)
    }

    pub fn charge(&mut self, e_bus: f64, dt: f64) -> Result<f64, BatteryError> {
        let (state, accepted) = apply_charge(&self.state, &self.spec, e_bus, dt)?;
        self.state = state;
        Ok(accepted)
    }

    pub fn discharge(&mut self, e_bus: f64, dt: f64) -> Result<f64, BatteryError> {
        let (state, delivered) = apply_discharge(&self.state, &self.spec, e_bus, dt)?;
        self.state = state;
        Ok(delivered)
    }
}
