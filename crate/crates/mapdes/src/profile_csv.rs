//! One-column hourly profile CSV: one kWh value per line, optionally under
//! a single `kwh` header line.

use std::fmt::Write as _;

use mapdes_core::profiles::{HourlyProfile, ProfileError};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileCsvError {
    #[error("line {line}: cannot parse {cell:?} as a number")]
    Malformed { line: usize, cell: String },
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

pub fn parse_profile_csv(text: &str, expected_horizon: usize) -> Result<HourlyProfile, ProfileCsvError> {
    let mut values = Vec::with_capacity(expected_horizon);
    for (i, raw) in text.lines().enumerate() {
        let cell = raw.trim();
        if cell.is_empty() {
            continue;
        }
        if i == 0 && cell.eq_ignore_ascii_case("kwh") {
            continue;
        }
        let value: f64 = cell.parse().map_err(|_| ProfileCsvError::Malformed {
            line: i + 1,
            cell: cell.to_string(),
        })?;
        values.push(value);
    }
    Ok(HourlyProfile::with_horizon(values, expected_horizon)?)
}

pub fn write_profile_csv(profile: &HourlyProfile) -> String {
    let mut out = String::from("kwh\n");
    for v in profile.values() {
        writeln!(out, "{v:?}").expect("writing to a String");
    }
    out
}
