//! Run outputs: the ledger CSV, summary JSON, comparison table, figure data
//! and learning curves.

use std::fmt::Write as _;
use std::io::{Read, Write};

use mapdes_core::agents::{moving_average, CURVE_WINDOW};
use mapdes_core::metrics::{month_day, ComparisonRow, DailyAggregates, FigureKind, LedgerRow, MetricsSummary, Unit};
use mapdes_core::pricing::TimeOfUseTariff;
use mapdes_core::simulator::ScenarioKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn write_ledger_csv<W: Write>(rows: &[LedgerRow], sink: W) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ledger_csv<R: Read>(source: R) -> Result<Vec<LedgerRow>, ReportError> {
    let mut r = csv::Reader::from_reader(source);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// `summary.json` of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub scenario: ScenarioKind,
    pub seed: u64,
    /// Identifies the community the run was made from.
    pub community: String,
    pub tariff: TimeOfUseTariff,
    pub metrics: MetricsSummary,
}

pub fn write_summary_json<W: Write>(doc: &SummaryDocument, mut sink: W) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut sink, doc)?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn read_summary_json<R: Read>(source: R) -> Result<SummaryDocument, ReportError> {
    Ok(serde_json::from_reader(source)?)
}

pub fn write_comparison_json<W: Write>(rows: &[ComparisonRow], mut sink: W) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut sink, rows)?;
    sink.write_all(b"\n")?;
    Ok(())
}

fn unit_suffix(u: Unit) -> &'static str {
    match u {
        Unit::Eur => "EUR",
        Unit::Kwh => "kWh",
        Unit::Percent => "%",
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

/// Fixed-width text rendering of the comparison table.
pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0);
    let mut out = String::new();
    writeln!(out, "{:width$}  {:>12}  {:>4}  {:>12}  {:>12}", "metric", "value", "unit", "baseline", "treatment")
        .unwrap();
    for r in rows {
        let (b, t) = if r.unit == Unit::Percent {
            (cell(r.baseline), cell(r.treatment))
        } else {
            (String::new(), String::new())
        };
        writeln!(
            out,
            "{:width$}  {:>12}  {:>4}  {:>12}  {:>12}",
            r.label,
            cell(r.value),
            unit_suffix(r.unit),
            b,
            t
        )
        .unwrap();
    }
    out
}

/// Two-column `date,value` CSV of one daily series, dates as `MM-DD`.
pub fn figure_csv(daily: &DailyAggregates, kind: FigureKind) -> String {
    let mut out = String::from("date,value\n");
    for (day, v) in kind.series(daily).iter().enumerate() {
        let (m, d) = month_day(day);
        writeln!(out, "{m:02}-{d:02},{v:?}").unwrap();
    }
    out
}

pub fn figure_file_name(kind: FigureKind, scenario: ScenarioKind) -> String {
    format!("{}-{}.csv", kind.id(), scenario.as_str())
}

/// `episode,total_reward,moving_avg_200` with a trailing moving average.
pub fn curve_csv(curve: &[f64]) -> String {
    let avg = moving_average(curve, CURVE_WINDOW);
    let mut out = format!("episode,total_reward,moving_avg_{CURVE_WINDOW}\n");
    for (i, (r, a)) in curve.iter().zip(&avg).enumerate() {
        writeln!(out, "{i},{r:?},{a:?}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use mapdes_core::metrics::{comparison_rows, daily_aggregates, ComparisonInputs};
    use mapdes_core::FarmId;

    fn row(hour: usize, buy: f64, cash: f64) -> LedgerRow {
        LedgerRow {
            hour,
            farm_id: FarmId(1),
            load_kwh: buy,
            gen_kwh: 0.0,
            buy_kwh: buy,
            sell_kwh: 0.0,
            charge_kwh: 0.0,
            discharge_kwh: 0.0,
            forced_kwh: 0.0,
            curtailed_kwh: 0.0,
            cash_eur: cash,
            soc_kwh: 0.0,
            isp: 0.09,
            ibp: 0.3,
            scenario: ScenarioKind::ReNoP2p,
        }
    }

    #[test]
    fn ledger_header_matches_schema() {
        let mut buf = Vec::new();
        write_ledger_csv(&[row(0, 1.0, -0.12)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "hour,farm_id,load_kwh,gen_kwh,buy_kwh,sell_kwh,charge_kwh,discharge_kwh,forced_kwh,\
             curtailed_kwh,cash_eur,soc_kwh,isp,ibp,scenario"
        );
        assert!(text.ends_with(",re-no-p2p\n"));
    }

    #[test]
    fn ledger_round_trip() {
        let rows = vec![row(0, 0.1 + 0.2, -1.0 / 3.0), row(1, 1e-300, -7.25)];
        let mut buf = Vec::new();
        write_ledger_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_ledger_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn figure_dates() {
        let rows: Vec<_> = (0..48).map(|h| row(h, 1.0, -0.2)).collect();
        let daily = daily_aggregates(&rows, &TimeOfUseTariff::default()).unwrap();
        let csv = figure_csv(&daily, FigureKind::DailyCost);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("01-01,"));
        assert!(lines[2].starts_with("01-02,"));
    }

    #[test]
    fn comparison_text_has_header_and_twelve_rows() {
        let i = ComparisonInputs {
            cost_no_re: 10.0,
            cost_re_only: 5.0,
            cost_re_p2p: 4.0,
            revenue_no_p2p: 1.0,
            revenue_p2p: 2.0,
            peak_no_p2p: 0.0,
            peak_p2p: 0.0,
        };
        let text = comparison_text(&comparison_rows(&i));
        assert_eq!(text.lines().count(), 13);
        assert!(text.contains("n/a"));
    }

    #[test]
    fn curve_columns() {
        let csv = curve_csv(&[1.0, 3.0]);
        assert_eq!(csv, "episode,total_reward,moving_avg_200\n0,1.0,1.0\n1,3.0,2.0\n");
    }
}
