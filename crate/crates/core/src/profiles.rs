//! Hourly energy series for farm load, PV and wind, plus synthetic generators.
//!
//! The generators are deterministic functions of their parameters and a
//! 64-bit seed. They stand in for measured data; real series can be loaded
//! through the CSV reader in the companion crate.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{seeded, SimRng};
use crate::FarmId;

/// Hours in a non-leap year.
pub const HOURS_PER_YEAR: usize = 8760;
pub const HOURS_PER_DAY: usize = 24;

/// Milking hours that carry the twice-daily load peaks.
pub const MORNING_MILKING: [usize; 3] = [5, 6, 7];
pub const EVENING_MILKING: [usize; 3] = [16, 17, 18];

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ProfileError {
    #[error("profile has {found} values, expected {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("negative value {value} at hour {index}")]
    NegativeValue { index: usize, value: f64 },
    #[error("non-finite value at hour {index}")]
    NonFinite { index: usize },
    #[error("annual energy must be positive, got {0}")]
    NonPositiveTotal(f64),
    #[error("capacity must be positive, got {0}")]
    NonPositiveCapacity(f64),
    #[error("profiles of farm {farm} do not share one horizon")]
    HorizonMismatch { farm: FarmId },
}

/// A validated series of hourly energy quantities in kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HourlyProfile {
    values: Vec<f64>,
}

impl HourlyProfile {
    /// Validates `values` against the nonnegative, finite invariant.
    pub fn new(values: Vec<f64>) -> Result<Self, ProfileError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(ProfileError::NonFinite { index });
            }
            if value < 0.0 {
                return Err(ProfileError::NegativeValue { index, value });
            }
        }
        Ok(Self { values })
    }

    pub fn with_horizon(values: Vec<f64>, horizon_hours: usize) -> Result<Self, ProfileError> {
        if values.len() != horizon_hours {
            return Err(ProfileError::WrongLength {
                expected: horizon_hours,
                found: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn zeros(horizon_hours: usize) -> Self {
        Self {
            values: alloc::vec![0.0; horizon_hours],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon_hours(&self) -> usize {
        self.values.len()
    }

    pub fn at(&self, hour: usize) -> f64 {
        self.values[hour]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Returns the profile with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ProfileError> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }
}

impl TryFrom<Vec<f64>> for HourlyProfile {
    type Error = ProfileError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<HourlyProfile> for Vec<f64> {
    fn from(profile: HourlyProfile) -> Self {
        profile.values
    }
}

/// Load and renewable series of one farm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmDataset {
    pub farm_id: FarmId,
    pub load: HourlyProfile,
    pub pv: HourlyProfile,
    pub wind: HourlyProfile,
    /// Installed PV capacity in kW.
    pub pv_capacity: f64,
    /// Installed wind capacity in kW.
    pub wind_capacity: f64,
}

impl FarmDataset {
    pub fn new(
        farm_id: FarmId,
        load: HourlyProfile,
        pv: HourlyProfile,
        wind: HourlyProfile,
        pv_capacity: f64,
        wind_capacity: f64,
    ) -> Result<Self, ProfileError> {
        let horizon = load.horizon_hours();
        if pv.horizon_hours() != horizon || wind.horizon_hours() != horizon {
            return Err(ProfileError::HorizonMismatch { farm: farm_id });
        }
        for capacity in [pv_capacity, wind_capacity] {
            if !capacity.is_finite() || capacity < 0.0 {
                return Err(ProfileError::NonPositiveCapacity(capacity));
            }
        }
        Ok(Self {
            farm_id,
            load,
            pv,
            wind,
            pv_capacity,
            wind_capacity,
        })
    }

    pub fn horizon_hours(&self) -> usize {
        self.load.horizon_hours()
    }

    /// Combined PV and wind output for `hour`.
    pub fn generation(&self, hour: usize) -> f64 {
        self.pv.at(hour) + self.wind.at(hour)
    }
}

/// Standard normal draw by the Box-Muller transform.
fn standard_normal(rng: &mut SimRng) -> f64 {
    // gen::<f64>() is in [0, 1); shift to (0, 1] so ln is finite.
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
}

/// Relative weight of each hour of the day in dairy farm consumption.
///
/// Milking (vacuum pumps, milk cooling, water heating) dominates; a lower
/// daytime plateau covers feeding and yard work.
const DAIRY_HOUR_WEIGHTS: [f64; HOURS_PER_DAY] = [
    0.55, 0.5, 0.5, 0.5, 0.6, // 00-04
    1.9, 2.2, 1.7, // 05-07 morning milking
    1.0, 0.95, 0.9, 0.9, 0.9, 0.9, 0.95, 1.0, // 08-15
    1.9, 2.2, 1.7, // 16-18 evening milking
    0.9, 0.8, 0.7, 0.65, 0.6, // 19-23
];

/// Synthesizes a year of hourly dairy farm load summing to `annual_kwh`.
///
/// Spring calving gives a seasonal swing peaking in late spring; each hour
/// carries up to ±10 % multiplicative noise.
pub fn synth_dairy_load(annual_kwh: f64, seed: u64) -> Result<HourlyProfile, ProfileError> {
    if !(annual_kwh.is_finite() && annual_kwh > 0.0) {
        return Err(ProfileError::NonPositiveTotal(annual_kwh));
    }
    let mut rng = seeded(seed);
    let mut raw = Vec::with_capacity(HOURS_PER_YEAR);
    for hour in 0..HOURS_PER_YEAR {
        let day = (hour / HOURS_PER_DAY) as f64;
        let season = 1.0 + 0.35 * libm::cos(2.0 * PI * (day - 135.0) / 365.0);
        let noise = 0.9 + 0.2 * rng.gen::<f64>();
        raw.push(DAIRY_HOUR_WEIGHTS[hour % HOURS_PER_DAY] * season * noise);
    }
    let scale = annual_kwh / raw.iter().sum::<f64>();
    raw.iter_mut().for_each(|v| *v *= scale);
    HourlyProfile::new(raw)
}

/// Normalized PV output in [0, 1] per hour, independent of capacity.
fn unit_pv_shape(seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    let mut shape = Vec::with_capacity(HOURS_PER_YEAR);
    let mut clearness: f64 = 0.6;
    for day in 0..HOURS_PER_YEAR / HOURS_PER_DAY {
        // +1 at the June solstice, -1 at the December solstice.
        let season = libm::cos(2.0 * PI * (day as f64 - 172.0) / 365.0);
        let day_length = 12.5 + 4.5 * season;
        let sunrise = 12.5 - day_length / 2.0;
        let amplitude = 0.35 + 0.65 * (season + 1.0) / 2.0;
        clearness = (0.6 + 0.7 * (clearness - 0.6) + 0.25 * standard_normal(&mut rng)).clamp(0.15, 1.0);
        for hour in 0..HOURS_PER_DAY {
            let phase = (hour as f64 + 0.5 - sunrise) / day_length;
            let bell = if hour == 0 || hour == HOURS_PER_DAY - 1 || !(0.0..=1.0).contains(&phase) {
                0.0
            } else {
                libm::sin(PI * phase)
            };
            shape.push((0.85 * amplitude * clearness * bell).clamp(0.0, 1.0));
        }
    }
    shape
}

/// Synthesizes a year of hourly PV output for an array of `capacity` kW.
///
/// The output is `capacity` times a seed-determined unit shape, so it scales
/// linearly with capacity and never exceeds `capacity` kWh in any hour.
pub fn synth_pv_profile(capacity: f64, seed: u64) -> Result<HourlyProfile, ProfileError> {
    if !(capacity.is_finite() && capacity > 0.0) {
        return Err(ProfileError::NonPositiveCapacity(capacity));
    }
    HourlyProfile::new(unit_pv_shape(seed).into_iter().map(|u| capacity * u).collect())
}

const WIND_MEAN_SPEED: f64 = 7.0;
const WIND_PERSISTENCE: f64 = 0.95;
const WIND_INNOVATION: f64 = 1.2;
const CUT_IN: f64 = 3.0;
const RATED: f64 = 12.0;
const CUT_OUT: f64 = 25.0;

fn power_curve(speed: f64) -> f64 {
    if !(CUT_IN..CUT_OUT).contains(&speed) {
        0.0
    } else if speed >= RATED {
        1.0
    } else {
        let cube = |v: f64| v * v * v;
        (cube(speed) - cube(CUT_IN)) / (cube(RATED) - cube(CUT_IN))
    }
}

/// Synthesizes a year of hourly wind turbine output for `capacity` kW.
///
/// Hub-height speed follows an AR(1) process and is mapped through a cubic
/// power curve with cut-in, rated and cut-out speeds.
pub fn synth_wind_profile(capacity: f64, seed: u64) -> Result<HourlyProfile, ProfileError> {
    if !(capacity.is_finite() && capacity > 0.0) {
        return Err(ProfileError::NonPositiveCapacity(capacity));
    }
    let mut rng = seeded(seed);
    let stationary_sd = WIND_INNOVATION / libm::sqrt(1.0 - WIND_PERSISTENCE * WIND_PERSISTENCE);
    let mut speed = WIND_MEAN_SPEED + stationary_sd * standard_normal(&mut rng);
    let mut values = Vec::with_capacity(HOURS_PER_YEAR);
    for _ in 0..HOURS_PER_YEAR {
        speed = WIND_MEAN_SPEED
            + WIND_PERSISTENCE * (speed - WIND_MEAN_SPEED)
            + WIND_INNOVATION * standard_normal(&mut rng);
        speed = speed.max(0.0);
        values.push((capacity * power_curve(speed)).clamp(0.0, capacity));
    }
    HourlyProfile::new(values)
}
