//! Versioned text format for trained Q-tables.
//!
//! ```text
//! MAPDES-QTABLE v1
//! load_edges,<7 values>
//! gen_edges,<7 values>
//! soc_bins,10
//! hours,24
//! alpha,0.1
//! ... remaining hyperparameters ...
//! states,15360
//! state,buy,sell,...
//! 0,<9 values>
//! ...
//! end,15360
//! ```
//!
//! Floats are written in shortest round-trip form, so a save/load cycle is
//! bit-exact. A missing `end` trailer means the file was truncated and the
//! whole table is rejected.

use std::fmt::Write as _;
use std::path::Path;

use mapdes_core::agents::{
    ActionValues, Discretizer, Hyperparameters, QTable, QTableError, ACTION_COUNT, EDGE_COUNT, HOURS, SOC_BINS,
};
use thiserror::Error;

use crate::output::write_atomic;

pub const HEADER: &str = "MAPDES-QTABLE v1";

const ACTION_COLUMNS: &str = "state,buy,sell,self_consume_only,charge_and_sell,charge_and_buy,\
discharge_and_sell,discharge_and_buy,self_utilize_and_charge,self_utilize_and_discharge";

#[derive(Debug, Error)]
pub enum QTableFileError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("expected header {HEADER:?}, found {0:?}")]
    FormatVersionMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("file ends before the end-of-table marker")]
    Truncated,
}

impl From<QTableError> for QTableFileError {
    fn from(e: QTableError) -> Self {
        QTableFileError::DimensionMismatch(e.to_string())
    }
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v:?}").expect("writing to a String");
    }
    s
}

pub fn qtable_to_string(q: &QTable) -> String {
    let d = &q.discretizer;
    let hp = &q.hyperparameters;
    let mut out = String::with_capacity(q.values().len() * 120);
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(HEADER.to_string());
    line(format!("load_edges,{}", join(&d.load_edges)));
    line(format!("gen_edges,{}", join(&d.gen_edges)));
    line(format!("soc_bins,{SOC_BINS}"));
    line(format!("hours,{HOURS}"));
    line(format!("alpha,{:?}", hp.alpha));
    line(format!("gamma,{:?}", hp.gamma));
    line(format!("epsilon_start,{:?}", hp.epsilon_start));
    line(format!("epsilon_decay,{:?}", hp.epsilon_decay));
    line(format!("epsilon_min,{:?}", hp.epsilon_min));
    line(format!("episodes,{}", hp.episodes));
    line(format!("invalid_penalty,{:?}", hp.invalid_penalty));
    line(format!("peak_weight,{:?}", hp.peak_weight));
    line(format!("states,{}", q.values().len()));
    line(ACTION_COLUMNS.to_string());
    for (s, row) in q.values().iter().enumerate() {
        line(format!("{s},{}", join(row)));
    }
    line(format!("end,{}", q.values().len()));
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str), QTableFileError> {
        self.inner.next().map(|(i, l)| (i + 1, l)).ok_or(QTableFileError::Truncated)
    }

    fn field(&mut self, key: &str) -> Result<(usize, &'a str), QTableFileError> {
        let (n, l) = self.next_line()?;
        match l.split_once(',') {
            Some((k, rest)) if k == key => Ok((n, rest)),
            _ => Err(QTableFileError::Malformed {
                line: n,
                reason: format!("expected field {key:?}"),
            }),
        }
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, QTableFileError> {
        let (n, v) = self.field(key)?;
        parse(n, v)
    }
}

fn parse<T: std::str::FromStr>(line: usize, cell: &str) -> Result<T, QTableFileError> {
    cell.trim().parse().map_err(|_| QTableFileError::Malformed {
        line,
        reason: format!("cannot parse {cell:?}"),
    })
}

fn floats<const N: usize>(line: usize, cells: &str) -> Result<[f64; N], QTableFileError> {
    let parsed: Vec<f64> = cells.split(',').map(|c| parse(line, c)).collect::<Result<_, _>>()?;
    parsed.try_into().map_err(|v: Vec<f64>| {
        QTableFileError::DimensionMismatch(format!("line {line}: expected {N} values, found {}", v.len()))
    })
}

pub fn qtable_from_str(text: &str) -> Result<QTable, QTableFileError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, header) = lines
        .next_line()
        .map_err(|_| QTableFileError::FormatVersionMismatch(String::new()))?;
    if header != HEADER {
        return Err(QTableFileError::FormatVersionMismatch(header.to_string()));
    }
    let complete = text.trim_end().rsplit('\n').next().is_some_and(|l| l.starts_with("end,"));
    if !complete {
        return Err(QTableFileError::Truncated);
    }
    let (n, load) = lines.field("load_edges")?;
    let load_edges: [f64; EDGE_COUNT] = floats(n, load)?;
    let (n, generation) = lines.field("gen_edges")?;
    let gen_edges: [f64; EDGE_COUNT] = floats(n, generation)?;
    let soc_bins: usize = lines.number("soc_bins")?;
    let hours: usize = lines.number("hours")?;
    if soc_bins != SOC_BINS || hours != HOURS {
        return Err(QTableFileError::DimensionMismatch(format!(
            "table uses {soc_bins} SoC bins and {hours} hours, expected {SOC_BINS} and {HOURS}"
        )));
    }
    let hp = Hyperparameters {
        alpha: lines.number("alpha")?,
        gamma: lines.number("gamma")?,
        epsilon_start: lines.number("epsilon_start")?,
        epsilon_decay: lines.number("epsilon_decay")?,
        epsilon_min: lines.number("epsilon_min")?,
        episodes: lines.number("episodes")?,
        invalid_penalty: lines.number("invalid_penalty")?,
        peak_weight: lines.number("peak_weight")?,
    };
    let discretizer = Discretizer::new(load_edges, gen_edges)?;
    let states: usize = lines.number("states")?;
    if states != discretizer.state_count() {
        return Err(QTableFileError::DimensionMismatch(format!(
            "{states} states declared, discretizer has {}",
            discretizer.state_count()
        )));
    }
    let (n, columns) = lines.next_line()?;
    if columns != ACTION_COLUMNS {
        return Err(QTableFileError::Malformed {
            line: n,
            reason: "unexpected column header".into(),
        });
    }
    let mut values: Vec<ActionValues> = Vec::with_capacity(states);
    for expected in 0..states {
        let (n, row) = lines.next_line()?;
        let (index, rest) = row.split_once(',').ok_or(QTableFileError::Malformed {
            line: n,
            reason: "missing state index".into(),
        })?;
        if parse::<usize>(n, index)? != expected {
            return Err(QTableFileError::Malformed {
                line: n,
                reason: format!("expected state {expected}"),
            });
        }
        values.push(floats::<ACTION_COUNT>(n, rest)?);
    }
    let end: usize = lines.number("end")?;
    if end != states {
        return Err(QTableFileError::Truncated);
    }
    Ok(QTable::from_values(values, discretizer, hp)?)
}

pub fn save_qtable(q: &QTable, path: &Path) -> Result<(), QTableFileError> {
    write_atomic(path, qtable_to_string(q).as_bytes())?;
    Ok(())
}

pub fn load_qtable(path: &Path) -> Result<QTable, QTableFileError> {
    qtable_from_str(&std::fs::read_to_string(path)?)
}
