//! Core models of a multi-agent peer-to-peer energy trading simulator for
//! dairy farm communities.
//!
//! Each farm runs either a fixed rule-based battery policy or a greedy
//! policy read from a tabular Q-learning agent. Every hour the farms submit
//! buy or sell quantities to a double auction whose internal prices follow
//! the community's supply-demand ratio; the residual is traded with the
//! grid under a time-of-use tariff.
//!
//! The crate is `no_std` and needs only `alloc`. File formats and the
//! command-line driver live in the `mapdes` crate.

#![no_std]

extern crate alloc;

use core::fmt;

use serde::{Deserialize, Serialize};

pub mod agents;
pub mod auction;
pub mod battery;
pub mod metrics;
pub mod presets;
pub mod pricing;
pub mod profiles;
pub mod rng;
pub mod simulator;

/// Identifier of a farm in the community.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FarmId(pub u16);

impl fmt::Display for FarmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}
