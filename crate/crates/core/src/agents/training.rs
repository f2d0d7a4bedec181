use alloc::vec::Vec;

use thiserror::Error;

use super::actions::{apply_action, reward, Action};
use super::qlearning::{learn, Discretizer, Environment, Hyperparameters, QTable, Step};
use super::AgentObservation;
use crate::battery::{Battery, BatterySpec};
use crate::pricing::{FeedInPrice, TimeOfUseTariff};
use crate::profiles::{FarmDataset, HOURS_PER_DAY};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("training profiles cover less than one day")]
    EmptyProfile,
    #[error("invalid hyperparameters: {0}")]
    Hyperparameters(&'static str),
}

/// One farm trading alone against the grid tariff; each episode is one day
/// of its profiles, taken cyclically through the year, starting from the
/// battery's initial charge.
pub struct FarmEnvironment<'a> {
    load: &'a [f64],
    generation: Vec<f64>,
    days: usize,
    spec: BatterySpec,
    tariff: TimeOfUseTariff,
    feed_in: FeedInPrice,
    hp: Hyperparameters,
    discretizer: Discretizer,
    day: usize,
    hour: usize,
    battery: Battery,
}

impl<'a> FarmEnvironment<'a> {
    pub fn new(
        farm: &'a FarmDataset,
        spec: BatterySpec,
        tariff: TimeOfUseTariff,
        feed_in: FeedInPrice,
        hp: Hyperparameters,
    ) -> Result<Self, TrainError> {
        let days = farm.horizon_hours() / HOURS_PER_DAY;
        if days == 0 {
            return Err(TrainError::EmptyProfile);
        }
        let generation: Vec<f64> = (0..farm.horizon_hours()).map(|h| farm.generation(h)).collect();
        let discretizer = Discretizer::fit(farm.load.values(), &generation);
        Ok(Self {
            load: farm.load.values(),
            generation,
            days,
            spec,
            tariff,
            feed_in,
            hp,
            discretizer,
            day: 0,
            hour: 0,
            battery: Battery::new(spec),
        })
    }

    pub fn discretizer(&self) -> Discretizer {
        self.discretizer
    }

    fn observation(&self) -> AgentObservation {
        let t = self.day * HOURS_PER_DAY + self.hour;
        AgentObservation {
            load: self.load[t],
            generation: self.generation[t],
            soc_frac: self.battery.soc_frac(),
            hour_of_day: self.hour as u8,
        }
    }
}

impl Environment for FarmEnvironment<'_> {
    fn state_count(&self) -> usize {
        self.discretizer.state_count()
    }

    fn reset(&mut self, episode: u64) -> usize {
        self.day = (episode % self.days as u64) as usize;
        self.hour = 0;
        self.battery = Battery::new(self.spec);
        self.discretizer.discretize(&self.observation())
    }

    fn step(&mut self, action: Action) -> Step {
        let obs = self.observation();
        let outcome = apply_action(&obs, action, Some(self.battery));
        if let Some(b) = outcome.battery {
            self.battery = b;
        }
        let hour = obs.hour_of_day;
        let r = reward(
            &outcome.flow,
            outcome.feasible,
            hour,
            self.feed_in.0,
            self.tariff.rate_at(hour),
            &self.tariff,
            &self.hp,
        );
        self.hour += 1;
        let done = self.hour == HOURS_PER_DAY;
        let next_state = if done {
            0
        } else {
            self.discretizer.discretize(&self.observation())
        };
        Step {
            reward: r,
            next_state,
            done,
        }
    }
}

pub struct TrainingOutcome {
    pub table: QTable,
    /// Total reward of every episode.
    pub curve: Vec<f64>,
}

/// Trains the Q-learning agent for one farm.
pub fn train(
    farm: &FarmDataset,
    spec: &BatterySpec,
    tariff: &TimeOfUseTariff,
    feed_in: FeedInPrice,
    hp: &Hyperparameters,
    seed: u64,
) -> Result<TrainingOutcome, TrainError> {
    hp.validate().map_err(TrainError::Hyperparameters)?;
    let mut env = FarmEnvironment::new(farm, *spec, *tariff, feed_in, *hp)?;
    let mut rng = seeded(seed);
    let (values, curve) = learn(&mut env, hp, &mut rng);
    let table = QTable::from_values(values, env.discretizer(), *hp).expect("learned table matches discretizer");
    Ok(TrainingOutcome { table, curve })
}
