//! Cost, revenue and peak-import metrics, percentage deltas and the
//! three-scenario comparison table.
//!
//! Every total is the sum of daily subtotals, so daily figure data re-sums
//! to the annual figure exactly.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pricing::{compute_sdr, TimeOfUseTariff};
use crate::profiles::HOURS_PER_DAY;
use crate::simulator::{ScenarioKind, ScenarioResult};
use crate::FarmId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("percentage change against a zero baseline")]
    ZeroBaseline,
    #[error("ledger rows are not grouped by ascending hour (row {0})")]
    UnorderedLedger(usize),
    #[error("ledger mixes scenarios")]
    MixedScenarios,
}

/// One farm-hour of the run ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub hour: usize,
    pub farm_id: FarmId,
    pub load_kwh: f64,
    pub gen_kwh: f64,
    pub buy_kwh: f64,
    pub sell_kwh: f64,
    pub charge_kwh: f64,
    pub discharge_kwh: f64,
    pub forced_kwh: f64,
    pub curtailed_kwh: f64,
    pub cash_eur: f64,
    pub soc_kwh: f64,
    pub isp: f64,
    pub ibp: f64,
    pub scenario: ScenarioKind,
}

impl LedgerRow {
    pub fn purchase_kwh(&self) -> f64 {
        self.buy_kwh + self.forced_kwh
    }
}

impl ScenarioResult {
    /// Flattens the run into ledger rows, hour-major in farm order.
    pub fn ledger_rows(&self) -> Vec<LedgerRow> {
        let scenario = self.config.scenario;
        self.hours
            .iter()
            .flat_map(|h| {
                h.farms.iter().map(move |f| LedgerRow {
                    hour: h.hour,
                    farm_id: f.farm_id,
                    load_kwh: f.load,
                    gen_kwh: f.generation,
                    buy_kwh: f.e_buy,
                    sell_kwh: f.e_sell,
                    charge_kwh: f.e_charge,
                    discharge_kwh: f.e_discharge,
                    forced_kwh: f.forced_purchase,
                    curtailed_kwh: f.curtailed,
                    cash_eur: f.cash,
                    soc_kwh: f.soc,
                    isp: h.quote.isp,
                    ibp: h.quote.ibp,
                    scenario,
                })
            })
            .collect()
    }
}

/// Per-day subtotals over the horizon.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DailyAggregates {
    /// € spent on purchases.
    pub cost: Vec<f64>,
    /// € earned from sales.
    pub revenue: Vec<f64>,
    /// kWh drawn from the grid during peak hours.
    pub peak_import: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarmMetrics {
    pub farm_id: FarmId,
    pub purchase_cost: f64,
    pub sales_revenue: f64,
    pub bought_kwh: f64,
    pub sold_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub scenario: Option<ScenarioKind>,
    /// €
    pub total_purchase_cost: f64,
    /// €
    pub total_sales_revenue: f64,
    /// kWh imported from the grid in peak hours over the horizon. With hourly
    /// steps this equals the summed hourly peak demand in kW.
    pub peak_window_grid_import: f64,
    /// kWh imported from the grid over the horizon.
    pub total_grid_import: f64,
    pub farms: Vec<FarmMetrics>,
}

/// Community grid import of one hour from its ledger rows.
fn hour_grid_import(rows: &[LedgerRow], market: bool) -> f64 {
    let mut offered = 0.0;
    let mut bid = 0.0;
    for r in rows {
        if r.sell_kwh > 0.0 {
            offered += r.sell_kwh;
        } else if r.purchase_kwh() > 0.0 {
            bid += r.purchase_kwh();
        }
    }
    if !market {
        bid
    } else if compute_sdr(offered, bid) <= 1.0 {
        bid - offered
    } else {
        0.0
    }
}

fn group_by_hour(rows: &[LedgerRow]) -> Result<Vec<&[LedgerRow]>, MetricsError> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=rows.len() {
        if i == rows.len() || rows[i].hour != rows[start].hour {
            if i < rows.len() && rows[i].hour < rows[start].hour {
                return Err(MetricsError::UnorderedLedger(i));
            }
            groups.push(&rows[start..i]);
            start = i;
        }
    }
    Ok(groups)
}

/// Daily cost, revenue and peak-window import from ledger rows.
pub fn daily_aggregates(rows: &[LedgerRow], tariff: &TimeOfUseTariff) -> Result<DailyAggregates, MetricsError> {
    if rows.windows(2).any(|w| w[0].scenario != w[1].scenario) {
        return Err(MetricsError::MixedScenarios);
    }
    let market = rows.first().is_some_and(|r| r.scenario.has_market());
    let mut daily = DailyAggregates::default();
    for group in group_by_hour(rows)? {
        let hour = group[0].hour;
        let day = hour / HOURS_PER_DAY;
        while daily.cost.len() <= day {
            daily.cost.push(0.0);
            daily.revenue.push(0.0);
            daily.peak_import.push(0.0);
        }
        let mut cost = 0.0;
        let mut revenue = 0.0;
        for r in group {
            if r.cash_eur < 0.0 {
                cost -= r.cash_eur;
            } else {
                revenue += r.cash_eur;
            }
        }
        daily.cost[day] += cost;
        daily.revenue[day] += revenue;
        if tariff.is_peak((hour % HOURS_PER_DAY) as u8) {
            daily.peak_import[day] += hour_grid_import(group, market);
        }
    }
    Ok(daily)
}

/// Summarizes ledger rows; the same function serves live results and
/// re-parsed ledgers.
pub fn summarize_rows(rows: &[LedgerRow], tariff: &TimeOfUseTariff) -> Result<MetricsSummary, MetricsError> {
    let daily = daily_aggregates(rows, tariff)?;
    let market = rows.first().is_some_and(|r| r.scenario.has_market());
    let mut total_grid_import = 0.0;
    for group in group_by_hour(rows)? {
        total_grid_import += hour_grid_import(group, market);
    }
    let mut farms: Vec<FarmMetrics> = Vec::new();
    for r in rows {
        let idx = match farms.iter().position(|f| f.farm_id == r.farm_id) {
            Some(i) => i,
            None => {
                farms.push(FarmMetrics {
                    farm_id: r.farm_id,
                    purchase_cost: 0.0,
                    sales_revenue: 0.0,
                    bought_kwh: 0.0,
                    sold_kwh: 0.0,
                });
                farms.len() - 1
            }
        };
        let f = &mut farms[idx];
        if r.cash_eur < 0.0 {
            f.purchase_cost -= r.cash_eur;
        } else {
            f.sales_revenue += r.cash_eur;
        }
        f.bought_kwh += r.purchase_kwh();
        f.sold_kwh += r.sell_kwh;
    }
    Ok(MetricsSummary {
        scenario: rows.first().map(|r| r.scenario),
        total_purchase_cost: daily.cost.iter().sum(),
        total_sales_revenue: daily.revenue.iter().sum(),
        peak_window_grid_import: daily.peak_import.iter().sum(),
        total_grid_import,
        farms,
    })
}

pub fn summarize(result: &ScenarioResult, tariff: &TimeOfUseTariff) -> MetricsSummary {
    summarize_rows(&result.ledger_rows(), tariff).expect("simulator ledgers are hour-ordered and single-scenario")
}

/// `(baseline - treatment) / baseline * 100`.
pub fn percent_reduction(baseline: f64, treatment: f64) -> Result<f64, MetricsError> {
    if baseline == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok((baseline - treatment) / baseline * 100.0)
}

/// `(treatment - baseline) / baseline * 100`.
pub fn percent_increase(baseline: f64, treatment: f64) -> Result<f64, MetricsError> {
    if baseline == 0.0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok((treatment - baseline) / baseline * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Eur,
    Kwh,
    Percent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub unit: Unit,
    /// Absolute value, or the percentage for delta rows; `None` when the
    /// baseline is zero.
    pub value: Option<f64>,
    pub baseline: Option<f64>,
    pub treatment: Option<f64>,
}

/// The seven absolute quantities behind the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonInputs {
    pub cost_no_re: f64,
    pub cost_re_only: f64,
    pub cost_re_p2p: f64,
    pub revenue_no_p2p: f64,
    pub revenue_p2p: f64,
    pub peak_no_p2p: f64,
    pub peak_p2p: f64,
}

impl ComparisonInputs {
    pub fn from_summaries(base: &MetricsSummary, re_only: &MetricsSummary, p2p: &MetricsSummary) -> Self {
        Self {
            cost_no_re: base.total_purchase_cost,
            cost_re_only: re_only.total_purchase_cost,
            cost_re_p2p: p2p.total_purchase_cost,
            revenue_no_p2p: re_only.total_sales_revenue,
            revenue_p2p: p2p.total_sales_revenue,
            peak_no_p2p: re_only.peak_window_grid_import,
            peak_p2p: p2p.peak_window_grid_import,
        }
    }
}

pub const COST_NO_RE: &str = "Electricity cost with no RE";
pub const COST_RE_ONLY: &str = "Electricity cost with RE, no P2P";
pub const COST_RE_P2P: &str = "Electricity cost with P2P and RE";
pub const REDUCTION_RE_ONLY_VS_NO_RE: &str = "Cost reduction, RE without P2P vs no RE";
pub const REDUCTION_P2P_VS_NO_RE: &str = "Cost reduction, P2P and RE vs no RE";
pub const REDUCTION_P2P_VS_RE_ONLY: &str = "Cost reduction, P2P and RE vs RE only";
pub const REVENUE_NO_P2P: &str = "Electricity revenue without P2P";
pub const REVENUE_P2P: &str = "Electricity revenue with P2P";
pub const REVENUE_INCREASE: &str = "Revenue increase, P2P vs no P2P";
pub const PEAK_NO_P2P: &str = "Peak-window grid import without P2P";
pub const PEAK_P2P: &str = "Peak-window grid import with P2P";
pub const PEAK_REDUCTION: &str = "Peak-window import reduction, P2P vs no P2P";

fn absolute(label: &str, unit: Unit, value: f64) -> ComparisonRow {
    ComparisonRow {
        label: label.into(),
        unit,
        value: Some(value),
        baseline: None,
        treatment: None,
    }
}

fn delta(label: &str, baseline: f64, treatment: f64, f: fn(f64, f64) -> Result<f64, MetricsError>) -> ComparisonRow {
    ComparisonRow {
        label: label.into(),
        unit: Unit::Percent,
        value: f(baseline, treatment).ok(),
        baseline: Some(baseline),
        treatment: Some(treatment),
    }
}

/// Builds the twelve comparison rows.
///
/// Two reductions against the no-RE baseline are reported: the RE-only cost
/// and the P2P cost. The first is what reference results for this
/// comparison report under the "P2P and RE vs without RE" heading.
pub fn comparison_rows(i: &ComparisonInputs) -> Vec<ComparisonRow> {
    alloc::vec![
        absolute(COST_NO_RE, Unit::Eur, i.cost_no_re),
        absolute(COST_RE_ONLY, Unit::Eur, i.cost_re_only),
        absolute(COST_RE_P2P, Unit::Eur, i.cost_re_p2p),
        delta(REDUCTION_RE_ONLY_VS_NO_RE, i.cost_no_re, i.cost_re_only, percent_reduction),
        delta(REDUCTION_P2P_VS_NO_RE, i.cost_no_re, i.cost_re_p2p, percent_reduction),
        delta(REDUCTION_P2P_VS_RE_ONLY, i.cost_re_only, i.cost_re_p2p, percent_reduction),
        absolute(REVENUE_NO_P2P, Unit::Eur, i.revenue_no_p2p),
        absolute(REVENUE_P2P, Unit::Eur, i.revenue_p2p),
        delta(REVENUE_INCREASE, i.revenue_no_p2p, i.revenue_p2p, percent_increase),
        absolute(PEAK_NO_P2P, Unit::Kwh, i.peak_no_p2p),
        absolute(PEAK_P2P, Unit::Kwh, i.peak_p2p),
        delta(PEAK_REDUCTION, i.peak_no_p2p, i.peak_p2p, percent_reduction),
    ]
}

pub fn build_comparison(base: &MetricsSummary, re_only: &MetricsSummary, p2p: &MetricsSummary) -> Vec<ComparisonRow> {
    comparison_rows(&ComparisonInputs::from_summaries(base, re_only, p2p))
}

/// Daily series plotted by the report figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FigureKind {
    DailyCost,
    DailyRevenue,
    DailyPeakImport,
}

impl FigureKind {
    pub const ALL: [FigureKind; 3] = [FigureKind::DailyCost, FigureKind::DailyRevenue, FigureKind::DailyPeakImport];

    pub fn id(self) -> &'static str {
        match self {
            FigureKind::DailyCost => "daily-cost",
            FigureKind::DailyRevenue => "daily-revenue",
            FigureKind::DailyPeakImport => "daily-peak-import",
        }
    }

    pub fn series(self, daily: &DailyAggregates) -> &[f64] {
        match self {
            FigureKind::DailyCost => &daily.cost,
            FigureKind::DailyRevenue => &daily.revenue,
            FigureKind::DailyPeakImport => &daily.peak_import,
        }
    }
}

const MONTH_DAYS: [usize; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// Calendar (month, day) of zero-based `day_of_year` in a non-leap year;
/// wraps after 365 days.
pub fn month_day(day_of_year: usize) -> (u8, u8) {
    let mut d = day_of_year % 365;
    for (m, len) in MONTH_DAYS.iter().enumerate() {
        if d < *len {
            return (m as u8 + 1, d as u8 + 1);
        }
        d -= len;
    }
    unreachable!("day index reduced modulo 365")
}
