//! TOML community configuration.
//!
//! Community-level keys (`seed`, `horizon_hours`, `weather`, `feed_in`) sit
//! at the top of the file next to optional `[tariff]`, `[battery]` and
//! `[training]` tables; each farm is a `[[farm]]` entry that either names
//! profile CSV files or gives parameters for the synthetic generators.
//! Relative CSV paths are resolved against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use mapdes_core::agents::Hyperparameters;
use mapdes_core::battery::BatterySpec;
use mapdes_core::presets::{load_seed, pv_seed, wind_seed, WeatherMode, DEFAULT_SEED};
use mapdes_core::pricing::{FeedInPrice, TimeOfUseTariff};
use mapdes_core::profiles::{
    synth_dairy_load, synth_pv_profile, synth_wind_profile, FarmDataset, HourlyProfile, ProfileError,
    HOURS_PER_YEAR,
};
use mapdes_core::simulator::{AgentKind, FarmConfig, ScenarioKind, SimError, SimulationConfig};
use mapdes_core::FarmId;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::profile_csv::{parse_profile_csv, ProfileCsvError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Syntax { path: PathBuf, source: toml::de::Error },
    #[error("farm {farm}: {path}: {source}")]
    ProfileFile {
        farm: FarmId,
        path: PathBuf,
        source: ProfileCsvError,
    },
    #[error("farm {farm}: {source}")]
    Profile { farm: FarmId, source: ProfileError },
    #[error("farm {farm}: {reason}")]
    Farm { farm: FarmId, reason: &'static str },
    #[error("invalid training parameters: {0}")]
    Training(&'static str),
    #[error(transparent)]
    Simulation(#[from] SimError),
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_horizon() -> usize {
    HOURS_PER_YEAR
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityFile {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon_hours: usize,
    #[serde(default)]
    pub weather: WeatherMode,
    #[serde(default)]
    pub feed_in: FeedInPrice,
    #[serde(default)]
    pub tariff: TimeOfUseTariff,
    /// Storage installed at every farm with `battery = true`.
    #[serde(default)]
    pub battery: BatterySpec,
    #[serde(default)]
    pub training: Hyperparameters,
    #[serde(rename = "farm", default)]
    pub farms: Vec<FarmEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarmEntry {
    pub id: u16,
    #[serde(default = "rule_based")]
    pub agent: AgentKind,
    pub annual_load_kwh: Option<f64>,
    pub load_csv: Option<PathBuf>,
    #[serde(default)]
    pub pv_capacity_kw: f64,
    pub pv_csv: Option<PathBuf>,
    #[serde(default)]
    pub wind_capacity_kw: f64,
    pub wind_csv: Option<PathBuf>,
    #[serde(default = "yes")]
    pub battery: bool,
}

fn rule_based() -> AgentKind {
    AgentKind::RuleBased
}

/// A loaded community with all profiles materialised for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Community {
    pub seed: u64,
    pub horizon_hours: usize,
    pub tariff: TimeOfUseTariff,
    pub feed_in: FeedInPrice,
    pub battery: BatterySpec,
    pub training: Hyperparameters,
    pub farms: Vec<FarmConfig>,
}

impl Community {
    pub fn simulation(&self, scenario: ScenarioKind) -> SimulationConfig {
        SimulationConfig {
            farms: self.farms.clone(),
            tariff: self.tariff,
            feed_in: self.feed_in,
            scenario,
            seed: self.seed,
            horizon_hours: self.horizon_hours,
        }
    }

    /// SHA-256 over everything that shapes a run except the scenario, so
    /// three scenario runs of one community share it.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let t = &self.tariff;
        put(&mut h, &[t.night_rate, t.day_rate, t.peak_rate, self.feed_in.0]);
        for w in [t.night_window, t.peak_window] {
            h.update([w.start, w.end]);
        }
        h.update(self.seed.to_le_bytes());
        h.update((self.horizon_hours as u64).to_le_bytes());
        for farm in &self.farms {
            let d = &farm.dataset;
            h.update(d.farm_id.0.to_le_bytes());
            h.update([farm.agent as u8]);
            for p in [&d.load, &d.pv, &d.wind] {
                put(&mut h, p.values());
            }
            match &farm.battery {
                None => h.update([0]),
                Some(b) => {
                    h.update([1]);
                    put(
                        &mut h,
                        &[
                            b.capacity,
                            b.max_charge_power,
                            b.max_discharge_power,
                            b.eta_c,
                            b.eta_d,
                            b.soc_min_frac,
                            b.soc_max_frac,
                            b.initial_soc_frac,
                        ],
                    );
                }
            }
        }
        hex(&h.finalize())
    }

    /// The farm trained by `train`: the first Q-learning farm, else the first.
    pub fn training_farm(&self) -> &FarmConfig {
        self.farms
            .iter()
            .find(|f| f.agent == AgentKind::QLearning)
            .unwrap_or(&self.farms[0])
    }
}

fn put(h: &mut Sha256, xs: &[f64]) {
    for x in xs {
        h.update(x.to_le_bytes());
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex(&Sha256::digest(fs::read(path)?)))
}

pub fn parse_community_file(text: &str, path: &Path) -> Result<CommunityFile, ConfigError> {
    toml::from_str(text).map_err(|source| ConfigError::Syntax {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads the config at `path`; `seed` overrides the file's seed.
pub fn load_community(path: &Path, seed: Option<u64>) -> Result<Community, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let file = parse_community_file(&text, path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve(&file, base, seed)
}

fn read_profile(base: &Path, rel: &Path, farm: FarmId, horizon: usize) -> Result<HourlyProfile, ConfigError> {
    let path = base.join(rel);
    let text = fs::read_to_string(&path).map_err(|source| ConfigError::Read {
        path: path.clone(),
        source,
    })?;
    parse_profile_csv(&text, horizon).map_err(|source| ConfigError::ProfileFile { farm, path, source })
}

fn synthetic(
    profile: Result<HourlyProfile, ProfileError>,
    farm: FarmId,
    horizon: usize,
) -> Result<HourlyProfile, ConfigError> {
    let p = profile.map_err(|source| ConfigError::Profile { farm, source })?;
    if p.horizon_hours() != horizon {
        return Err(ConfigError::Farm {
            farm,
            reason: "synthetic profiles cover one year; set horizon_hours = 8760 or supply CSV files",
        });
    }
    Ok(p)
}

pub fn resolve(file: &CommunityFile, base: &Path, seed: Option<u64>) -> Result<Community, ConfigError> {
    let seed = seed.unwrap_or(file.seed);
    let horizon = file.horizon_hours;
    file.training.validate().map_err(ConfigError::Training)?;
    let mut farms = Vec::with_capacity(file.farms.len());
    for e in &file.farms {
        let id = FarmId(e.id);
        let load = match (&e.load_csv, e.annual_load_kwh) {
            (Some(p), None) => read_profile(base, p, id, horizon)?,
            (None, Some(kwh)) => synthetic(synth_dairy_load(kwh, load_seed(seed, id)), id, horizon)?,
            _ => {
                return Err(ConfigError::Farm {
                    farm: id,
                    reason: "give exactly one of load_csv and annual_load_kwh",
                })
            }
        };
        let pv = match &e.pv_csv {
            Some(p) => read_profile(base, p, id, horizon)?,
            None if e.pv_capacity_kw == 0.0 => HourlyProfile::zeros(horizon),
            None => synthetic(synth_pv_profile(e.pv_capacity_kw, pv_seed(seed, id, file.weather)), id, horizon)?,
        };
        let wind = match &e.wind_csv {
            Some(p) => read_profile(base, p, id, horizon)?,
            None if e.wind_capacity_kw == 0.0 => HourlyProfile::zeros(horizon),
            None => synthetic(
                synth_wind_profile(e.wind_capacity_kw, wind_seed(seed, id, file.weather)),
                id,
                horizon,
            )?,
        };
        let dataset = FarmDataset::new(id, load, pv, wind, e.pv_capacity_kw, e.wind_capacity_kw)
            .map_err(|source| ConfigError::Profile { farm: id, source })?;
        farms.push(FarmConfig {
            dataset,
            battery: e.battery.then_some(file.battery),
            agent: e.agent,
        });
    }
    let community = Community {
        seed,
        horizon_hours: horizon,
        tariff: file.tariff,
        feed_in: file.feed_in,
        battery: file.battery,
        training: file.training,
        farms,
    };
    community.simulation(ScenarioKind::ReP2p).validate()?;
    Ok(community)
}
