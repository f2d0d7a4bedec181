use serde::{Deserialize, Serialize};

use crate::battery::Battery;
use crate::pricing::TimeOfUseTariff;

use super::{AgentObservation, Hyperparameters, STEP_HOURS};

pub const ACTION_COUNT: usize = 9;

/// The nine trading and storage actions available to a farm each hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    Buy = 0,
    Sell = 1,
    SelfConsumeOnly = 2,
    ChargeAndSell = 3,
    ChargeAndBuy = 4,
    DischargeAndSell = 5,
    DischargeAndBuy = 6,
    SelfUtilizeAndCharge = 7,
    SelfUtilizeAndDischarge = 8,
}

impl Action {
    pub const ALL: [Action; ACTION_COUNT] = [
        Action::Buy,
        Action::Sell,
        Action::SelfConsumeOnly,
        Action::ChargeAndSell,
        Action::ChargeAndBuy,
        Action::DischargeAndSell,
        Action::DischargeAndBuy,
        Action::SelfUtilizeAndCharge,
        Action::SelfUtilizeAndDischarge,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }
}

/// Energy flows (kWh, bus side) induced by one action in one hour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowDecision {
    pub e_buy: f64,
    pub e_sell: f64,
    pub e_charge_bus: f64,
    pub e_discharge_bus: f64,
    pub e_curtailed: f64,
    /// Deficit that had to be bought because the action did not cover it.
    pub forced_purchase: f64,
}

impl FlowDecision {
    /// Energy requested from the market or grid.
    pub fn purchase(&self) -> f64 {
        self.e_buy + self.forced_purchase
    }

    /// `sources - sinks` for the given load and generation; zero when balanced.
    pub fn imbalance(&self, load: f64, generation: f64) -> f64 {
        (generation + self.e_buy + self.e_discharge_bus + self.forced_purchase)
            - (load + self.e_sell + self.e_charge_bus + self.e_curtailed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionOutcome {
    pub flow: FlowDecision,
    pub battery: Option<Battery>,
    pub feasible: bool,
}

/// Fixed policy: store surplus then sell the rest; cover deficits from the
/// battery then buy the rest.
pub fn rule_decide(obs: &AgentObservation, battery: Option<&Battery>) -> Action {
    let can_accept = battery.is_some_and(|b| b.max_accept(STEP_HOURS) > 0.0);
    let can_deliver = battery.is_some_and(|b| b.max_deliver(STEP_HOURS) > 0.0);
    if obs.generation > obs.load {
        if can_accept {
            Action::ChargeAndSell
        } else {
            Action::Sell
        }
    } else if obs.generation < obs.load {
        if can_deliver {
            Action::DischargeAndBuy
        } else {
            Action::Buy
        }
    } else {
        Action::SelfConsumeOnly
    }
}

/// Resolves `action` into concrete flows and the battery's next state.
///
/// Infeasible actions are reported rather than rejected; their flows still
/// balance, with uncovered deficit bought as a forced purchase and unusable
/// surplus curtailed.
pub fn apply_action(obs: &AgentObservation, action: Action, battery: Option<Battery>) -> ActionOutcome {
    let surplus = (obs.generation - obs.load).max(0.0);
    let deficit = (obs.load - obs.generation).max(0.0);
    let mut battery = battery;
    let accept = battery.map_or(0.0, |b| b.max_accept(STEP_HOURS));
    let deliver = battery.map_or(0.0, |b| b.max_deliver(STEP_HOURS));

    // Arguments are clamped to the limits above, so the battery never errors.
    let mut charge = |e: f64| -> f64 {
        match battery.as_mut() {
            Some(b) if e > 0.0 => b.charge(e, STEP_HOURS).unwrap_or(0.0),
            _ => 0.0,
        }
    };

    let mut flow = FlowDecision::default();
    let mut feasible = true;
    match action {
        Action::Buy => {
            feasible = surplus == 0.0;
            flow.e_buy = deficit;
            flow.e_curtailed = surplus;
        }
        Action::Sell => {
            feasible = deficit == 0.0;
            flow.e_sell = surplus;
            flow.forced_purchase = deficit;
        }
        Action::SelfConsumeOnly => {
            flow.e_curtailed = surplus;
            flow.forced_purchase = deficit;
        }
        Action::ChargeAndSell => {
            feasible = surplus > 0.0;
            flow.e_charge_bus = charge(surplus.min(accept));
            flow.e_sell = surplus - flow.e_charge_bus;
            flow.forced_purchase = deficit;
        }
        Action::ChargeAndBuy => {
            flow.e_charge_bus = charge(accept);
            let need = deficit + flow.e_charge_bus - surplus;
            flow.e_buy = need.max(0.0);
            flow.e_curtailed = (-need).max(0.0);
        }
        Action::SelfUtilizeAndCharge => {
            flow.e_charge_bus = charge(surplus.min(accept));
            flow.e_curtailed = surplus - flow.e_charge_bus;
            flow.forced_purchase = deficit;
        }
        Action::DischargeAndSell | Action::DischargeAndBuy | Action::SelfUtilizeAndDischarge => {
            let request = match action {
                Action::DischargeAndSell => deliver,
                Action::DischargeAndBuy if deficit == 0.0 => 0.0,
                _ => deficit.min(deliver),
            };
            let delivered = match battery.as_mut() {
                Some(b) if request > 0.0 => b.discharge(request, STEP_HOURS).unwrap_or(0.0),
                _ => 0.0,
            };
            flow.e_discharge_bus = delivered;
            match action {
                Action::DischargeAndSell => {
                    feasible = deliver > 0.0;
                    let net = surplus + delivered - deficit;
                    flow.e_sell = net.max(0.0);
                    flow.forced_purchase = (-net).max(0.0);
                }
                Action::DischargeAndBuy => {
                    feasible = deficit > 0.0 && deliver > 0.0;
                    flow.e_buy = deficit - delivered;
                    flow.e_curtailed = surplus;
                }
                _ => {
                    flow.forced_purchase = deficit - delivered;
                    flow.e_curtailed = surplus;
                }
            }
        }
    }
    ActionOutcome {
        flow,
        battery,
        feasible,
    }
}

/// Reward for one step: sales income minus purchase cost, with an extra
/// charge on peak-hour purchases and a flat penalty for infeasible actions.
pub fn reward(
    flow: &FlowDecision,
    feasible: bool,
    hour_of_day: u8,
    sell_price: f64,
    buy_price: f64,
    tariff: &TimeOfUseTariff,
    hp: &Hyperparameters,
) -> f64 {
    if !feasible {
        return -hp.invalid_penalty;
    }
    let bought = flow.purchase();
    let peak = if tariff.is_peak(hour_of_day) {
        hp.peak_weight * bought
    } else {
        0.0
    };
    flow.e_sell * sell_price - bought * buy_price - peak
}
