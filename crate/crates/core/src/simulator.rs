//! Hourly community simulation for the three comparison scenarios.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{apply_action, rule_decide, Action, AgentObservation, QTable};
use crate::auction::{clear, AuctionError, Order};
use crate::battery::{Battery, BatteryError, BatterySpec};
use crate::pricing::{compute_sdr, FeedInPrice, PriceQuote, PricingError, TimeOfUseTariff};
use crate::profiles::{FarmDataset, HOURS_PER_DAY};
use crate::FarmId;

/// Tolerance of the per-farm energy balance check, kWh.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Grid supply only: no renewables, no batteries, no local market.
    #[serde(rename = "no-re-no-p2p")]
    NoReNoP2p,
    /// Renewables and batteries; surplus exported at the feed-in price.
    #[serde(rename = "re-no-p2p")]
    ReNoP2p,
    /// Renewables, batteries and the hourly double auction.
    #[serde(rename = "re-p2p")]
    ReP2p,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::NoReNoP2p, ScenarioKind::ReNoP2p, ScenarioKind::ReP2p];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::NoReNoP2p => "no-re-no-p2p",
            ScenarioKind::ReNoP2p => "re-no-p2p",
            ScenarioKind::ReP2p => "re-p2p",
        }
    }

    pub fn has_renewables(self) -> bool {
        self != ScenarioKind::NoReNoP2p
    }

    pub fn has_market(self) -> bool {
        self == ScenarioKind::ReP2p
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scenario {0:?}")]
pub struct UnknownScenario(pub alloc::string::String);

impl FromStr for ScenarioKind {
    type Err = UnknownScenario;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownScenario(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "rule-based")]
    RuleBased,
    #[serde(rename = "q-learning")]
    QLearning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmConfig {
    pub dataset: FarmDataset,
    /// `None` for a farm without storage.
    pub battery: Option<BatterySpec>,
    pub agent: AgentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub farms: Vec<FarmConfig>,
    pub tariff: TimeOfUseTariff,
    pub feed_in: FeedInPrice,
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub horizon_hours: usize,
}

impl SimulationConfig {
    /// Without renewables every farm simply buys its load, so the Q-table
    /// is only consulted in the two RE scenarios.
    pub fn needs_qtable(&self) -> bool {
        self.scenario.has_renewables() && self.farms.iter().any(|f| f.agent == AgentKind::QLearning)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.farms.is_empty() {
            return Err(SimError::NoFarms);
        }
        self.tariff.validate()?;
        self.feed_in.validate(&self.tariff)?;
        for w in self.farms.windows(2) {
            let (a, b) = (w[0].dataset.farm_id, w[1].dataset.farm_id);
            if a == b {
                return Err(SimError::DuplicateFarm(a));
            }
            if a > b {
                return Err(SimError::UnsortedFarms);
            }
        }
        for farm in &self.farms {
            if farm.dataset.horizon_hours() != self.horizon_hours {
                return Err(SimError::HorizonMismatch {
                    farm: farm.dataset.farm_id,
                    expected: self.horizon_hours,
                    found: farm.dataset.horizon_hours(),
                });
            }
            if let Some(spec) = &farm.battery {
                spec.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("a Q-learning agent is configured but no Q-table was supplied")]
    MissingQTable,
    #[error("farm {farm} has {found} hours of data, horizon is {expected}")]
    HorizonMismatch { farm: FarmId, expected: usize, found: usize },
    #[error("community has no farms")]
    NoFarms,
    #[error("farm id {0} appears twice")]
    DuplicateFarm(FarmId),
    #[error("farms must be listed in ascending id order")]
    UnsortedFarms,
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error(transparent)]
    Battery(#[from] BatteryError),
    #[error(transparent)]
    Auction(#[from] AuctionError),
}

/// One farm's flows in one hour (kWh unless noted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarmHour {
    pub farm_id: FarmId,
    pub load: f64,
    pub generation: f64,
    pub e_buy: f64,
    pub e_sell: f64,
    pub e_charge: f64,
    pub e_discharge: f64,
    pub forced_purchase: f64,
    pub curtailed: f64,
    /// € received; negative when paying.
    pub cash: f64,
    /// Stored energy after the hour; zero without a battery.
    pub soc: f64,
    pub action: Action,
    pub feasible: bool,
}

impl FarmHour {
    pub fn purchase(&self) -> f64 {
        self.e_buy + self.forced_purchase
    }

    pub fn imbalance(&self) -> f64 {
        (self.generation + self.e_buy + self.e_discharge + self.forced_purchase)
            - (self.load + self.e_sell + self.e_charge + self.curtailed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourRecord {
    pub hour: usize,
    /// In configuration order.
    pub farms: Vec<FarmHour>,
    /// Internal prices in the market scenario; otherwise feed-in (`isp`)
    /// and retail (`ibp`) prices of the hour.
    pub quote: PriceQuote,
    pub grid_import: f64,
    pub grid_export: f64,
    /// Retail price of grid energy this hour.
    pub lambda_buy: f64,
    pub lambda_sell: f64,
}

impl HourRecord {
    pub fn hour_of_day(&self) -> u8 {
        (self.hour % HOURS_PER_DAY) as u8
    }
}

/// Checks the per-farm energy balance of every farm in `rec`.
pub fn check_energy_balance(rec: &HourRecord) -> bool {
    rec.farms.iter().all(|f| f.imbalance().abs() <= BALANCE_TOLERANCE)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FarmTotals {
    pub farm_id: FarmId,
    /// €
    pub purchase_cost: f64,
    /// €
    pub sales_revenue: f64,
    pub bought_kwh: f64,
    pub sold_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: SimulationConfig,
    pub hours: Vec<HourRecord>,
    pub farm_totals: Vec<FarmTotals>,
    pub grid_import_kwh: f64,
    pub grid_export_kwh: f64,
}

impl ScenarioResult {
    pub fn scenario(&self) -> ScenarioKind {
        self.config.scenario
    }
}

/// Runs the community through every hour of the horizon.
///
/// Within an hour each agent first fixes its quantities; the market then
/// computes the SDR, prices and settlement from those quantities.
pub fn run_scenario(cfg: &SimulationConfig, qtable: Option<&QTable>) -> Result<ScenarioResult, SimError> {
    cfg.validate()?;
    if cfg.needs_qtable() && qtable.is_none() {
        return Err(SimError::MissingQTable);
    }
    let renewables = cfg.scenario.has_renewables();
    let mut batteries: Vec<Option<Battery>> = cfg
        .farms
        .iter()
        .map(|f| f.battery.filter(|_| renewables).map(Battery::new))
        .collect();
    let mut totals: Vec<FarmTotals> = cfg
        .farms
        .iter()
        .map(|f| FarmTotals {
            farm_id: f.dataset.farm_id,
            ..FarmTotals::default()
        })
        .collect();
    let lambda_sell = cfg.feed_in.0;
    let mut hours = Vec::with_capacity(cfg.horizon_hours);
    let mut grid_import_kwh = 0.0;
    let mut grid_export_kwh = 0.0;

    for hour in 0..cfg.horizon_hours {
        let hour_of_day = (hour % HOURS_PER_DAY) as u8;
        let lambda_buy = cfg.tariff.rate_at(hour_of_day);
        let mut farms = Vec::with_capacity(cfg.farms.len());

        for (farm, battery) in cfg.farms.iter().zip(batteries.iter_mut()) {
            let ds = &farm.dataset;
            let obs = AgentObservation {
                load: ds.load.at(hour),
                generation: if renewables { ds.generation(hour) } else { 0.0 },
                soc_frac: battery.map_or(0.0, |b| b.soc_frac()),
                hour_of_day,
            };
            let action = match (farm.agent, qtable) {
                (AgentKind::QLearning, Some(q)) if renewables => q.greedy_action(&obs),
                _ => rule_decide(&obs, battery.as_ref()),
            };
            let outcome = apply_action(&obs, action, *battery);
            *battery = outcome.battery;
            let f = outcome.flow;
            farms.push(FarmHour {
                farm_id: ds.farm_id,
                load: obs.load,
                generation: obs.generation,
                e_buy: f.e_buy,
                e_sell: f.e_sell,
                e_charge: f.e_charge_bus,
                e_discharge: f.e_discharge_bus,
                forced_purchase: f.forced_purchase,
                curtailed: f.e_curtailed,
                cash: 0.0,
                soc: battery.map_or(0.0, |b| b.state.soc),
                action,
                feasible: outcome.feasible,
            });
        }

        let (quote, grid_import, grid_export) = if cfg.scenario.has_market() {
            let orders: Vec<Order> = farms
                .iter()
                .filter_map(|fh| {
                    if fh.e_sell > 0.0 {
                        Some(Order::offer(fh.farm_id, fh.e_sell))
                    } else if fh.purchase() > 0.0 {
                        Some(Order::bid(fh.farm_id, fh.purchase()))
                    } else {
                        None
                    }
                })
                .collect();
            let result = clear(&orders, lambda_buy, lambda_sell)?;
            for fh in farms.iter_mut() {
                if let Some(s) = result.settlement(fh.farm_id) {
                    fh.cash = s.cash;
                }
            }
            (result.quote, result.grid_import, result.grid_export)
        } else {
            let mut offered = 0.0;
            let mut bid = 0.0;
            for fh in farms.iter_mut() {
                fh.cash = fh.e_sell * lambda_sell - fh.purchase() * lambda_buy;
                offered += fh.e_sell;
                bid += fh.purchase();
            }
            let quote = PriceQuote {
                isp: lambda_sell,
                ibp: lambda_buy,
                sdr: compute_sdr(offered, bid),
            };
            (quote, bid, offered)
        };

        for (t, fh) in totals.iter_mut().zip(&farms) {
            if fh.cash < 0.0 {
                t.purchase_cost -= fh.cash;
            } else {
                t.sales_revenue += fh.cash;
            }
            t.bought_kwh += fh.purchase();
            t.sold_kwh += fh.e_sell;
        }
        grid_import_kwh += grid_import;
        grid_export_kwh += grid_export;
        hours.push(HourRecord {
            hour,
            farms,
            quote,
            grid_import,
            grid_export,
            lambda_buy,
            lambda_sell,
        });
    }

    Ok(ScenarioResult {
        config: cfg.clone(),
        hours,
        farm_totals: totals,
        grid_import_kwh,
        grid_export_kwh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::HourlyProfile;
    use alloc::vec;

    fn constant_farm(id: u16, load: f64, generation: f64, hours: usize) -> FarmConfig {
        FarmConfig {
            dataset: FarmDataset::new(
                FarmId(id),
                HourlyProfile::new(vec![load; hours]).unwrap(),
                HourlyProfile::new(vec![generation; hours]).unwrap(),
                HourlyProfile::zeros(hours),
                10.0,
                10.0,
            )
            .unwrap(),
            battery: None,
            agent: AgentKind::RuleBased,
        }
    }

    fn config(farms: Vec<FarmConfig>, scenario: ScenarioKind, hours: usize) -> SimulationConfig {
        SimulationConfig {
            farms,
            tariff: TimeOfUseTariff::default(),
            feed_in: FeedInPrice::default(),
            scenario,
            seed: 0,
            horizon_hours: hours,
        }
    }

    #[test]
    fn null_community_costs_nothing() {
        for scenario in ScenarioKind::ALL {
            let r = run_scenario(&config(vec![constant_farm(0, 0.0, 0.0, 48)], scenario, 48), None).unwrap();
            assert_eq!(r.hours.len(), 48);
            assert_eq!(r.farm_totals[0].purchase_cost, 0.0);
            assert!(r.hours.iter().all(|h| h.farms[0].cash == 0.0 && check_energy_balance(h)));
        }
    }

    #[test]
    fn balanced_pair_trades_at_feed_in() {
        let hours = 8760;
        let cfg = config(
            vec![constant_farm(0, 1.0, 2.0, hours), constant_farm(1, 1.0, 0.0, hours)],
            ScenarioKind::ReP2p,
            hours,
        );
        let r = run_scenario(&cfg, None).unwrap();
        assert!(r.hours.iter().all(|h| h.quote.sdr == 1.0));
        let expected = 8760.0 * 0.09;
        assert!((r.farm_totals[0].sales_revenue - expected).abs() < 1e-6);
        assert!((r.farm_totals[1].purchase_cost - expected).abs() < 1e-6);
        assert_eq!(r.grid_import_kwh, 0.0);
    }

    #[test]
    fn missing_qtable_and_horizon_errors() {
        let mut farm = constant_farm(0, 1.0, 0.0, 24);
        farm.agent = AgentKind::QLearning;
        let cfg = config(vec![farm], ScenarioKind::ReP2p, 24);
        assert_eq!(run_scenario(&cfg, None), Err(SimError::MissingQTable));
        let baseline = SimulationConfig {
            scenario: ScenarioKind::NoReNoP2p,
            ..cfg
        };
        assert!(run_scenario(&baseline, None).is_ok());
        let cfg = config(vec![constant_farm(0, 1.0, 0.0, 24)], ScenarioKind::ReP2p, 48);
        assert!(matches!(run_scenario(&cfg, None), Err(SimError::HorizonMismatch { .. })));
        let cfg = config(vec![constant_farm(3, 1.0, 0.0, 24), constant_farm(3, 1.0, 0.0, 24)], ScenarioKind::ReP2p, 24);
        assert_eq!(run_scenario(&cfg, None), Err(SimError::DuplicateFarm(FarmId(3))));
    }

    #[test]
    fn balance_check_detects_perturbation() {
        let zero = HourRecord {
            hour: 0,
            farms: vec![FarmHour {
                farm_id: FarmId(0),
                load: 0.0,
                generation: 0.0,
                e_buy: 0.0,
                e_sell: 0.0,
                e_charge: 0.0,
                e_discharge: 0.0,
                forced_purchase: 0.0,
                curtailed: 0.0,
                cash: 0.0,
                soc: 0.0,
                action: Action::SelfConsumeOnly,
                feasible: true,
            }],
            quote: PriceQuote { isp: 0.09, ibp: 0.09, sdr: 0.0 },
            grid_import: 0.0,
            grid_export: 0.0,
            lambda_buy: 0.12,
            lambda_sell: 0.09,
        };
        assert!(check_energy_balance(&zero));
        let mut bad = zero.clone();
        bad.farms[0].e_buy += 1.0;
        assert!(!check_energy_balance(&bad));
    }

    #[test]
    fn scenario_names_round_trip() {
        for k in ScenarioKind::ALL {
            assert_eq!(k.as_str().parse::<ScenarioKind>().unwrap(), k);
        }
        assert!("p2p".parse::<ScenarioKind>().is_err());
    }
}
