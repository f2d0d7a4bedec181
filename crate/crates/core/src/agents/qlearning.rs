//! Tabular Q-learning: state discretization, epsilon-greedy selection,
//! the one-step update and a generic episodic training loop.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::actions::{Action, ACTION_COUNT};
use super::AgentObservation;
use crate::rng::SimRng;

pub const HOURS: usize = 24;
pub const SOC_BINS: usize = 10;
pub const LOAD_BINS: usize = 8;
pub const GEN_BINS: usize = 8;
pub const EDGE_COUNT: usize = LOAD_BINS - 1;
pub const STATE_COUNT: usize = HOURS * SOC_BINS * LOAD_BINS * GEN_BINS;

/// Expected returns of the nine actions in one state.
pub type ActionValues = [f64; ACTION_COUNT];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QTableError {
    #[error("bin edges must be finite and strictly increasing")]
    BadEdges,
    #[error("table has {found} rows, discretizer needs {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite Q value in state {state}")]
    NonFinite { state: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    /// Multiplicative decay applied after every episode.
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub episodes: u64,
    pub invalid_penalty: f64,
    /// Extra reward units charged per kWh bought in the peak window.
    pub peak_weight: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_decay: 0.99,
            epsilon_min: 0.01,
            episodes: 300_000,
            invalid_penalty: 5.0,
            peak_weight: 0.1,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err("alpha must be in (0, 1]");
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err("gamma must be in [0, 1)");
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err("epsilon_decay must be in (0, 1]");
        }
        if !((0.0..=1.0).contains(&self.epsilon_start) && (0.0..=1.0).contains(&self.epsilon_min)) {
            return Err("epsilon bounds must be probabilities");
        }
        if !(self.invalid_penalty.is_finite() && self.peak_weight.is_finite()) {
            return Err("reward constants must be finite");
        }
        Ok(())
    }
}

/// Maps continuous observations onto the 15,360 table states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    pub load_edges: [f64; EDGE_COUNT],
    pub gen_edges: [f64; EDGE_COUNT],
}

impl Default for Discretizer {
    fn default() -> Self {
        let edges = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0];
        Self {
            load_edges: edges,
            gen_edges: edges,
        }
    }
}

fn strictly_increasing(edges: &[f64]) -> bool {
    edges.iter().all(|e| e.is_finite()) && edges.windows(2).all(|w| w[0] < w[1])
}

/// Octile edges of the strictly positive samples, nudged apart so they are
/// strictly increasing. Zero always lands in the lowest bin.
fn octile_edges(samples: &[f64], fallback: [f64; EDGE_COUNT]) -> [f64; EDGE_COUNT] {
    let mut positive: Vec<f64> = samples.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.is_empty() {
        return fallback;
    }
    positive.sort_by(f64::total_cmp);
    let n = positive.len();
    let mut edges = [0.0; EDGE_COUNT];
    for (k, edge) in edges.iter_mut().enumerate() {
        let rank = ((k + 1) * n / LOAD_BINS).min(n - 1);
        *edge = positive[rank];
    }
    for k in 1..EDGE_COUNT {
        if edges[k] <= edges[k - 1] {
            edges[k] = edges[k - 1] + 1e-6 * edges[k - 1].max(1.0);
        }
    }
    edges
}

impl Discretizer {
    pub fn new(load_edges: [f64; EDGE_COUNT], gen_edges: [f64; EDGE_COUNT]) -> Result<Self, QTableError> {
        if !(strictly_increasing(&load_edges) && strictly_increasing(&gen_edges)) {
            return Err(QTableError::BadEdges);
        }
        Ok(Self { load_edges, gen_edges })
    }

    /// Quantile bins fitted to the training load and generation series.
    pub fn fit(load: &[f64], generation: &[f64]) -> Self {
        let fallback = Self::default();
        Self {
            load_edges: octile_edges(load, fallback.load_edges),
            gen_edges: octile_edges(generation, fallback.gen_edges),
        }
    }

    pub const fn state_count(&self) -> usize {
        STATE_COUNT
    }

    pub fn discretize(&self, obs: &AgentObservation) -> usize {
        let bin = |edges: &[f64; EDGE_COUNT], v: f64| edges.partition_point(|e| *e < v);
        let hour = (obs.hour_of_day as usize).min(HOURS - 1);
        let soc = ((obs.soc_frac * SOC_BINS as f64) as usize).min(SOC_BINS - 1);
        let load = bin(&self.load_edges, obs.load);
        let generation = bin(&self.gen_edges, obs.generation);
        ((hour * SOC_BINS + soc) * LOAD_BINS + load) * GEN_BINS + generation
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn greedy(row: &ActionValues) -> Action {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    Action::ALL[best]
}

/// Epsilon-greedy action choice.
pub fn select_action(row: &ActionValues, epsilon: f64, rng: &mut SimRng) -> Action {
    if rng.gen::<f64>() < epsilon {
        Action::ALL[rng.gen_range(0..ACTION_COUNT)]
    } else {
        greedy(row)
    }
}

/// `Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a'))`.
///
/// A terminal transition (`next == None`) bootstraps from zero.
pub fn q_update(
    table: &mut [ActionValues],
    state: usize,
    action: Action,
    reward: f64,
    next: Option<usize>,
    alpha: f64,
    gamma: f64,
) {
    let best_next = next.map_or(0.0, |s| table[s].iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let q = &mut table[state][action.index()];
    *q = (1.0 - alpha) * *q + alpha * (reward + gamma * best_next);
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub reward: f64,
    pub next_state: usize,
    pub done: bool,
}

/// An episodic environment with a finite state space and the nine actions.
pub trait Environment {
    fn state_count(&self) -> usize;
    /// Starts episode `episode` and returns its initial state.
    fn reset(&mut self, episode: u64) -> usize;
    fn step(&mut self, action: Action) -> Step;
}

/// Trains a zero-initialized table on `env`; returns it with the total
/// reward of each episode.
pub fn learn<E: Environment>(env: &mut E, hp: &Hyperparameters, rng: &mut SimRng) -> (Vec<ActionValues>, Vec<f64>) {
    let mut table = vec![[0.0; ACTION_COUNT]; env.state_count()];
    let mut curve = Vec::with_capacity(hp.episodes as usize);
    let mut epsilon = hp.epsilon_start;
    for episode in 0..hp.episodes {
        let mut state = env.reset(episode);
        let mut total = 0.0;
        loop {
            let action = select_action(&table[state], epsilon, rng);
            let step = env.step(action);
            let next = (!step.done).then_some(step.next_state);
            q_update(&mut table, state, action, step.reward, next, hp.alpha, hp.gamma);
            total += step.reward;
            if step.done {
                break;
            }
            state = step.next_state;
        }
        curve.push(total);
        epsilon = (epsilon * hp.epsilon_decay).max(hp.epsilon_min);
    }
    (table, curve)
}

/// Exploration rate in effect during `episode`.
pub fn epsilon_at(hp: &Hyperparameters, episode: u64) -> f64 {
    let mut epsilon = hp.epsilon_start;
    for _ in 0..episode {
        epsilon = (epsilon * hp.epsilon_decay).max(hp.epsilon_min);
        if epsilon == hp.epsilon_min {
            break;
        }
    }
    epsilon
}

/// Trailing moving average; the first `window - 1` entries average what is available.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// A trained action-value table with the discretizer and settings that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<ActionValues>,
    pub discretizer: Discretizer,
    pub hyperparameters: Hyperparameters,
}

impl QTable {
    pub fn zeros(discretizer: Discretizer, hyperparameters: Hyperparameters) -> Self {
        Self {
            values: vec![[0.0; ACTION_COUNT]; discretizer.state_count()],
            discretizer,
            hyperparameters,
        }
    }

    pub fn from_values(
        values: Vec<ActionValues>,
        discretizer: Discretizer,
        hyperparameters: Hyperparameters,
    ) -> Result<Self, QTableError> {
        if values.len() != discretizer.state_count() {
            return Err(QTableError::DimensionMismatch {
                expected: discretizer.state_count(),
                found: values.len(),
            });
        }
        if let Some(state) = values.iter().position(|row| row.iter().any(|v| !v.is_finite())) {
            return Err(QTableError::NonFinite { state });
        }
        Discretizer::new(discretizer.load_edges, discretizer.gen_edges)?;
        Ok(Self {
            values,
            discretizer,
            hyperparameters,
        })
    }

    pub fn values(&self) -> &[ActionValues] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [ActionValues] {
        &mut self.values
    }

    pub fn row(&self, state: usize) -> &ActionValues {
        &self.values[state]
    }

    pub fn greedy_action(&self, obs: &AgentObservation) -> Action {
        greedy(&self.values[self.discretizer.discretize(obs)])
    }

    pub fn greedy_policy(&self) -> Vec<Action> {
        self.values.iter().map(greedy).collect()
    }

    pub fn update(&mut self, state: usize, action: Action, reward: f64, next: Option<usize>) {
        let hp = self.hyperparameters;
        q_update(&mut self.values, state, action, reward, next, hp.alpha, hp.gamma);
    }
}
