//! Grid tariff, feed-in price and Supply-Demand-Ratio internal prices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PricingError {
    #[error("feed-in price {lambda_sell} must be positive and below the retail price {lambda_buy}")]
    InvalidPriceOrder { lambda_sell: f64, lambda_buy: f64 },
    #[error("tariff rates must satisfy 0 < night <= day <= peak")]
    RateOrder,
    #[error("hour window [{start}, {end}) is out of range or empty")]
    BadWindow { start: u8, end: u8 },
    #[error("night and peak windows overlap")]
    OverlappingWindows,
    #[error("negative SDR {0}")]
    NegativeSdr(f64),
}

/// A half-open interval of hours of the day; wraps past midnight when
/// `start > end`, so `[23, 8)` covers 23:00 through 07:59.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourWindow {
    pub start: u8,
    pub end: u8,
}

impl HourWindow {
    pub const fn new(start: u8, end: u8) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, hour_of_day: u8) -> bool {
        if self.start <= self.end {
            (self.start..self.end).contains(&hour_of_day)
        } else {
            hour_of_day >= self.start || hour_of_day < self.end
        }
    }

    fn validate(&self) -> Result<(), PricingError> {
        if self.start > 23 || self.end > 24 || self.start == self.end {
            return Err(PricingError::BadWindow {
                start: self.start,
                end: self.end,
            });
        }
        Ok(())
    }
}

/// Three-tier time-of-use retail tariff in €/kWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeOfUseTariff {
    pub night_rate: f64,
    pub day_rate: f64,
    pub peak_rate: f64,
    pub night_window: HourWindow,
    pub peak_window: HourWindow,
}

impl Default for TimeOfUseTariff {
    fn default() -> Self {
        Self {
            night_rate: 0.12,
            day_rate: 0.21,
            peak_rate: 0.30,
            night_window: HourWindow::new(23, 8),
            peak_window: HourWindow::new(17, 19),
        }
    }
}

impl TimeOfUseTariff {
    pub fn validate(&self) -> Result<(), PricingError> {
        let rates_ok = self.night_rate > 0.0
            && self.night_rate <= self.day_rate
            && self.day_rate <= self.peak_rate
            && self.peak_rate.is_finite();
        if !rates_ok {
            return Err(PricingError::RateOrder);
        }
        self.night_window.validate()?;
        self.peak_window.validate()?;
        if (0..24).any(|h| self.night_window.contains(h) && self.peak_window.contains(h)) {
            return Err(PricingError::OverlappingWindows);
        }
        Ok(())
    }

    /// Retail price for `hour_of_day` (0-23).
    pub fn rate_at(&self, hour_of_day: u8) -> f64 {
        if self.peak_window.contains(hour_of_day) {
            self.peak_rate
        } else if self.night_window.contains(hour_of_day) {
            self.night_rate
        } else {
            self.day_rate
        }
    }

    pub fn is_peak(&self, hour_of_day: u8) -> bool {
        self.peak_window.contains(hour_of_day)
    }
}

/// Price the grid pays for exported energy, €/kWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeedInPrice(pub f64);

impl Default for FeedInPrice {
    fn default() -> Self {
        Self(0.09)
    }
}

impl FeedInPrice {
    /// Checks `0 < lambda_sell < night_rate` so feed-in is below every retail tier.
    pub fn validate(&self, tariff: &TimeOfUseTariff) -> Result<(), PricingError> {
        if !(self.0 > 0.0 && self.0 < tariff.night_rate) {
            return Err(PricingError::InvalidPriceOrder {
                lambda_sell: self.0,
                lambda_buy: tariff.night_rate,
            });
        }
        Ok(())
    }
}

/// SDR returned when nobody bids; any value above one selects the
/// surplus pricing branch.
pub const NO_DEMAND_SDR: f64 = f64::INFINITY;

/// Internal prices for one market hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceQuote {
    /// Internal selling price paid to sellers.
    pub isp: f64,
    /// Internal buying price charged to buyers.
    pub ibp: f64,
    pub sdr: f64,
}

/// Ratio of offered to demanded energy.
pub fn compute_sdr(total_offer: f64, total_bid: f64) -> f64 {
    if total_bid > 0.0 {
        total_offer / total_bid
    } else {
        NO_DEMAND_SDR
    }
}

/// Internal selling and buying prices for a given supply-demand ratio.
///
/// Below balance the selling price falls hyperbolically from `lambda_buy`
/// (no supply) to `lambda_sell` (balance), and the buying price is the
/// demand-weighted mix of the internal and retail prices, which keeps the
/// auctioneer's books balanced. At or above balance both equal `lambda_sell`.
pub fn internal_prices(sdr: f64, lambda_buy: f64, lambda_sell: f64) -> Result<PriceQuote, PricingError> {
    if !(lambda_sell > 0.0 && lambda_sell < lambda_buy && lambda_buy.is_finite()) {
        return Err(PricingError::InvalidPriceOrder {
            lambda_sell,
            lambda_buy,
        });
    }
    if sdr.is_nan() || sdr < 0.0 {
        return Err(PricingError::NegativeSdr(sdr));
    }
    if sdr > 1.0 {
        return Ok(PriceQuote {
            isp: lambda_sell,
            ibp: lambda_sell,
            sdr,
        });
    }
    let isp = (lambda_sell * lambda_buy) / ((lambda_buy - lambda_sell) * sdr + lambda_sell);
    let ibp = isp * sdr + lambda_buy * (1.0 - sdr);
    // Rounding can nudge the boundary values a hair outside the retail band.
    let isp = isp.clamp(lambda_sell, lambda_buy);
    let ibp = ibp.clamp(isp, lambda_buy);
    Ok(PriceQuote { isp, ibp, sdr })
}
