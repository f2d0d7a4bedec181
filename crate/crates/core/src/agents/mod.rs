//! Farm decision policies: the rule-based controller, the nine-action
//! environment semantics and the tabular Q-learning agent.

use serde::{Deserialize, Serialize};

mod actions;
mod qlearning;
mod training;

pub use actions::{apply_action, reward, rule_decide, Action, ActionOutcome, FlowDecision, ACTION_COUNT};
pub use qlearning::{
    epsilon_at, greedy, learn, moving_average, q_update, select_action, ActionValues, Discretizer, Environment,
    Hyperparameters, QTable, QTableError, Step, EDGE_COUNT, GEN_BINS, HOURS, LOAD_BINS, SOC_BINS, STATE_COUNT,
};
pub use training::{train, FarmEnvironment, TrainError, TrainingOutcome};

/// Simulation and training step length in hours.
pub const STEP_HOURS: f64 = 1.0;

/// Window used to smooth learning curves.
pub const CURVE_WINDOW: usize = 200;

/// What a farm agent sees at the start of an hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentObservation {
    /// kWh
    pub load: f64,
    /// PV plus wind, kWh
    pub generation: f64,
    pub soc_frac: f64,
    pub hour_of_day: u8,
}
