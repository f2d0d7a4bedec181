//! The default ten-farm synthetic community: one Q-learning farm and nine
//! rule-based farms.
//!
//! Herd sizes are chosen so the grid-only annual bill under the default
//! tariff is close to €52k. By default every farm draws its own weather
//! year; with a single shared year all surpluses coincide and there is
//! almost nothing left for the local market to match.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::battery::BatterySpec;
use crate::pricing::{FeedInPrice, TimeOfUseTariff};
use crate::profiles::{
    synth_dairy_load, synth_pv_profile, synth_wind_profile, FarmDataset, ProfileError, HOURS_PER_YEAR,
};
use crate::rng::derive_seed;
use crate::simulator::{AgentKind, FarmConfig, ScenarioKind, SimulationConfig};
use crate::FarmId;

/// Electricity use per dairy cow per year, kWh.
pub const KWH_PER_COW: f64 = 350.0;

/// Generator parameters of one synthetic farm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFarm {
    pub farm_id: FarmId,
    pub annual_load_kwh: f64,
    pub pv_capacity_kw: f64,
    pub wind_capacity_kw: f64,
    pub battery: bool,
    pub agent: AgentKind,
}

const fn farm(id: u16, cows: u32, pv: f64, agent: AgentKind) -> SyntheticFarm {
    SyntheticFarm {
        farm_id: FarmId(id),
        annual_load_kwh: cows as f64 * KWH_PER_COW,
        pv_capacity_kw: pv,
        wind_capacity_kw: 10.0,
        battery: true,
        agent,
    }
}

const RULE: AgentKind = AgentKind::RuleBased;

pub const DEFAULT_COMMUNITY: [SyntheticFarm; 10] = [
    farm(0, 80, 15.0, AgentKind::QLearning),
    farm(1, 50, 10.0, RULE),
    farm(2, 110, 20.0, RULE),
    farm(3, 60, 12.0, RULE),
    farm(4, 100, 20.0, RULE),
    farm(5, 55, 10.0, RULE),
    farm(6, 90, 15.0, RULE),
    farm(7, 65, 18.0, RULE),
    farm(8, 95, 20.0, RULE),
    farm(9, 70, 12.0, RULE),
];

pub const DEFAULT_SEED: u64 = 42;

/// Stream labels for [`derive_seed`].
const PV_STREAM: u64 = 0x5056;
const WIND_STREAM: u64 = 0x5749_4E44;
const LOAD_STREAM: u64 = 0x4C4F_4144;

/// How synthetic PV and wind years are assigned to farms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeatherMode {
    /// Independent weather year per farm.
    #[default]
    PerFarm,
    /// One weather year for the whole community.
    Shared,
}

fn weather_seed(seed: u64, stream: u64, farm_id: FarmId, mode: WeatherMode) -> u64 {
    let base = derive_seed(seed, stream);
    match mode {
        WeatherMode::PerFarm => derive_seed(base, farm_id.0 as u64),
        WeatherMode::Shared => base,
    }
}

pub fn pv_seed(seed: u64, farm_id: FarmId, mode: WeatherMode) -> u64 {
    weather_seed(seed, PV_STREAM, farm_id, mode)
}

pub fn wind_seed(seed: u64, farm_id: FarmId, mode: WeatherMode) -> u64 {
    weather_seed(seed, WIND_STREAM, farm_id, mode)
}

/// Seed of one farm's load noise.
pub fn load_seed(seed: u64, farm_id: FarmId) -> u64 {
    derive_seed(derive_seed(seed, LOAD_STREAM), farm_id.0 as u64)
}

impl SyntheticFarm {
    /// Generates the farm's load, PV and wind years.
    pub fn dataset(&self, seed: u64, weather: WeatherMode) -> Result<FarmDataset, ProfileError> {
        FarmDataset::new(
            self.farm_id,
            synth_dairy_load(self.annual_load_kwh, load_seed(seed, self.farm_id))?,
            synth_pv_profile(self.pv_capacity_kw, pv_seed(seed, self.farm_id, weather))?,
            synth_wind_profile(self.wind_capacity_kw, wind_seed(seed, self.farm_id, weather))?,
            self.pv_capacity_kw,
            self.wind_capacity_kw,
        )
    }

    pub fn config(&self, seed: u64, weather: WeatherMode, battery: &BatterySpec) -> Result<FarmConfig, ProfileError> {
        Ok(FarmConfig {
            dataset: self.dataset(seed, weather)?,
            battery: self.battery.then_some(*battery),
            agent: self.agent,
        })
    }
}

/// The default community for `scenario` with default tariff, feed-in price
/// and battery.
pub fn default_community(seed: u64, scenario: ScenarioKind) -> SimulationConfig {
    let battery = BatterySpec::default();
    let farms: Vec<FarmConfig> = DEFAULT_COMMUNITY
        .iter()
        .map(|f| f.config(seed, WeatherMode::default(), &battery).expect("preset parameters are positive"))
        .collect();
    SimulationConfig {
        farms,
        tariff: TimeOfUseTariff::default(),
        feed_in: FeedInPrice::default(),
        scenario,
        seed,
        horizon_hours: HOURS_PER_YEAR,
    }
}
