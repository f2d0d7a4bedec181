//! Hourly double-auction clearing with SDR pricing.
//!
//! Orders carry quantities only: every offer is priced at the ISP and every
//! bid at the IBP of the hour. The short side of the book is filled
//! completely and the long side is filled pro rata, with the residual
//! exchanged with the grid through the auctioneer.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pricing::{compute_sdr, internal_prices, PriceQuote, PricingError};
use crate::FarmId;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AuctionError {
    #[error("farm {0} submitted more than one order")]
    DuplicateOrder(FarmId),
    #[error("order from farm {farm} has invalid quantity {quantity}")]
    InvalidQuantity { farm: FarmId, quantity: f64 },
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error("brute-force clearing supports at most {max} orders, got {got}")]
    TooLarge { max: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Wants energy.
    Bid,
    /// Has energy.
    Offer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub farm_id: FarmId,
    pub side: Side,
    /// kWh
    pub quantity: f64,
}

impl Order {
    pub fn bid(farm_id: FarmId, quantity: f64) -> Self {
        Self {
            farm_id,
            side: Side::Bid,
            quantity,
        }
    }

    pub fn offer(farm_id: FarmId, quantity: f64) -> Self {
        Self {
            farm_id,
            side: Side::Offer,
            quantity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Farm(FarmId),
    Grid,
}

/// A reported bilateral flow. Internal trades are quoted at the ISP;
/// grid imports at the retail price and grid exports at the feed-in price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub buyer: Party,
    pub seller: Party,
    pub quantity: f64,
    pub unit_price: f64,
}

/// Per-farm outcome of one clearing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub farm_id: FarmId,
    pub side: Side,
    /// Quantity the order asked for.
    pub quantity: f64,
    /// Portion matched against other farms.
    pub internal: f64,
    /// Portion exchanged with the grid.
    pub grid: f64,
    /// Cash received, € (negative when paying).
    pub cash: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingResult {
    pub quote: PriceQuote,
    pub trades: Vec<Trade>,
    pub internal_matched: f64,
    pub grid_import: f64,
    pub grid_export: f64,
    /// Sorted by ascending farm id.
    pub settlements: Vec<Settlement>,
    pub lambda_buy: f64,
    pub lambda_sell: f64,
}

impl ClearingResult {
    pub fn settlement(&self, farm_id: FarmId) -> Option<&Settlement> {
        self.settlements
            .binary_search_by_key(&farm_id, |s| s.farm_id)
            .ok()
            .map(|i| &self.settlements[i])
    }

    /// Cash the auctioneer keeps: buyer payments minus seller receipts,
    /// grid bill, plus export revenue. Zero for a balanced clearing.
    pub fn auctioneer_net(&self) -> f64 {
        let farms: f64 = self.settlements.iter().map(|s| s.cash).sum();
        -farms - self.lambda_buy * self.grid_import + self.lambda_sell * self.grid_export
    }
}

fn sorted_book(orders: &[Order]) -> Result<Vec<Order>, AuctionError> {
    let mut book = orders.to_vec();
    book.sort_by_key(|o| o.farm_id);
    for pair in book.windows(2) {
        if pair[0].farm_id == pair[1].farm_id {
            return Err(AuctionError::DuplicateOrder(pair[0].farm_id));
        }
    }
    if let Some(o) = book.iter().find(|o| !(o.quantity >= 0.0 && o.quantity.is_finite())) {
        return Err(AuctionError::InvalidQuantity {
            farm: o.farm_id,
            quantity: o.quantity,
        });
    }
    Ok(book)
}

fn totals(book: &[Order]) -> (f64, f64) {
    let sum = |side| book.iter().filter(|o| o.side == side).map(|o| o.quantity).sum::<f64>();
    (sum(Side::Offer), sum(Side::Bid))
}

/// Clears one auction period.
/// Splits `quantity` into `(part, quantity - part)` so that the two pieces
/// add back to `quantity` exactly. The second subtraction is exact because
/// the remainder it starts from is at least half the quantity.
fn exact_split(quantity: f64, part: f64) -> (f64, f64) {
    let part = part.clamp(0.0, quantity);
    let rest = quantity - part;
    if rest >= part {
        (quantity - rest, rest)
    } else {
        (part, rest)
    }
}

pub fn clear(orders: &[Order], lambda_buy: f64, lambda_sell: f64) -> Result<ClearingResult, AuctionError> {
    let book = sorted_book(orders)?;
    let (total_offer, total_bid) = totals(&book);
    let sdr = compute_sdr(total_offer, total_bid);
    let quote = internal_prices(sdr, lambda_buy, lambda_sell)?;

    let supply_short = sdr <= 1.0;
    let (internal_matched, grid_import, grid_export) = if supply_short {
        (total_offer, total_bid - total_offer, 0.0)
    } else {
        (total_bid, 0.0, total_offer - total_bid)
    };

    let settlements: Vec<Settlement> = book
        .iter()
        .map(|o| {
            let (internal, grid, cash) = match (o.side, supply_short) {
                // Buyer shares the internal pool in proportion to its demand.
                (Side::Bid, true) => {
                    let (internal, grid) = exact_split(o.quantity, o.quantity * (total_offer / total_bid));
                    (internal, grid, -quote.ibp * o.quantity)
                }
                (Side::Bid, false) => (o.quantity, 0.0, -quote.ibp * o.quantity),
                (Side::Offer, true) => (o.quantity, 0.0, quote.isp * o.quantity),
                (Side::Offer, false) => {
                    // An all-zero book lands here with nothing offered.
                    let fill = if total_offer > 0.0 { total_bid / total_offer } else { 0.0 };
                    let (internal, grid) = exact_split(o.quantity, o.quantity * fill);
                    (internal, grid, quote.isp * o.quantity)
                }
            };
            Settlement {
                farm_id: o.farm_id,
                side: o.side,
                quantity: o.quantity,
                internal,
                grid,
                cash,
            }
        })
        .collect();

    let mut trades = Vec::new();
    if internal_matched > 0.0 {
        let long_total = if supply_short { total_bid } else { total_offer };
        for seller in book.iter().filter(|o| o.side == Side::Offer && o.quantity > 0.0) {
            for buyer in book.iter().filter(|o| o.side == Side::Bid && o.quantity > 0.0) {
                trades.push(Trade {
                    buyer: Party::Farm(buyer.farm_id),
                    seller: Party::Farm(seller.farm_id),
                    quantity: seller.quantity * buyer.quantity / long_total,
                    unit_price: quote.isp,
                });
            }
        }
    }
    for s in settlements.iter().filter(|s| s.grid > 0.0) {
        trades.push(match s.side {
            Side::Bid => Trade {
                buyer: Party::Farm(s.farm_id),
                seller: Party::Grid,
                quantity: s.grid,
                unit_price: lambda_buy,
            },
            Side::Offer => Trade {
                buyer: Party::Grid,
                seller: Party::Farm(s.farm_id),
                quantity: s.grid,
                unit_price: lambda_sell,
            },
        });
    }

    Ok(ClearingResult {
        quote,
        trades,
        internal_matched,
        grid_import,
        grid_export,
        settlements,
        lambda_buy,
        lambda_sell,
    })
}

pub const BRUTE_FORCE_MAX_ORDERS: usize = 6;

/// Reference clearing for small books, used as a test oracle.
///
/// Walks every (seller, buyer) pair in farm-id order and moves energy from
/// the seller's remaining supply into the buyer's remaining internal
/// entitlement, then routes leftovers to the grid and prices each farm from
/// its own tallies.
pub fn brute_force_clear(
    orders: &[Order],
    lambda_buy: f64,
    lambda_sell: f64,
) -> Result<ClearingResult, AuctionError> {
    if orders.len() > BRUTE_FORCE_MAX_ORDERS {
        return Err(AuctionError::TooLarge {
            max: BRUTE_FORCE_MAX_ORDERS,
            got: orders.len(),
        });
    }
    let book = sorted_book(orders)?;
    let mut supply = 0.0;
    let mut demand = 0.0;
    for o in &book {
        match o.side {
            Side::Offer => supply += o.quantity,
            Side::Bid => demand += o.quantity,
        }
    }
    let quote = internal_prices(compute_sdr(supply, demand), lambda_buy, lambda_sell)?;
    let fill_fraction_bid = if demand > 0.0 { (supply / demand).min(1.0) } else { 0.0 };
    let fill_fraction_offer = if supply > 0.0 { (demand / supply).min(1.0) } else { 0.0 };

    let n = book.len();
    let mut remaining_supply: Vec<f64> = book
        .iter()
        .map(|o| if o.side == Side::Offer { o.quantity * fill_fraction_offer } else { 0.0 })
        .collect();
    let mut remaining_entitlement: Vec<f64> = book
        .iter()
        .map(|o| if o.side == Side::Bid { o.quantity * fill_fraction_bid } else { 0.0 })
        .collect();
    let mut received = alloc::vec![0.0; n];
    let mut delivered = alloc::vec![0.0; n];
    let mut trades = Vec::new();
    for s in 0..n {
        for b in 0..n {
            if book[s].side != Side::Offer || book[b].side != Side::Bid {
                continue;
            }
            let q = remaining_supply[s].min(remaining_entitlement[b]);
            if q > 0.0 {
                remaining_supply[s] -= q;
                remaining_entitlement[b] -= q;
                delivered[s] += q;
                received[b] += q;
                trades.push(Trade {
                    buyer: Party::Farm(book[b].farm_id),
                    seller: Party::Farm(book[s].farm_id),
                    quantity: q,
                    unit_price: quote.isp,
                });
            }
        }
    }

    let mut grid_import = 0.0;
    let mut grid_export = 0.0;
    let mut internal_matched = 0.0;
    let mut settlements = Vec::with_capacity(n);
    for i in 0..n {
        let o = &book[i];
        let (internal, cash) = match o.side {
            Side::Bid => (received[i], -(o.quantity * quote.ibp)),
            Side::Offer => (delivered[i], o.quantity * quote.isp),
        };
        let (internal, grid) = exact_split(o.quantity, internal);
        match o.side {
            Side::Bid => {
                grid_import += grid;
                internal_matched += internal;
            }
            Side::Offer => grid_export += grid,
        }
        settlements.push(Settlement {
            farm_id: o.farm_id,
            side: o.side,
            quantity: o.quantity,
            internal,
            grid,
            cash,
        });
    }
    for s in settlements.iter().filter(|s| s.grid > 0.0) {
        trades.push(match s.side {
            Side::Bid => Trade {
                buyer: Party::Farm(s.farm_id),
                seller: Party::Grid,
                quantity: s.grid,
                unit_price: lambda_buy,
            },
            Side::Offer => Trade {
                buyer: Party::Grid,
                seller: Party::Farm(s.farm_id),
                quantity: s.grid,
                unit_price: lambda_sell,
            },
        });
    }
    Ok(ClearingResult {
        quote,
        trades,
        internal_matched,
        grid_import,
        grid_export,
        settlements,
        lambda_buy,
        lambda_sell,
    })
}
