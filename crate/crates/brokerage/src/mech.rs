//! Fee schedules, equilibrium seller strategies, and benchmark mechanisms.
//!
//! The broker posts `w(P)`; a seller with cost `c` best-responds with a price
//! `P(c)`, and trade happens when the buyer's value reaches it. Affine
//! schedules `w(P) = (1-alpha) P + beta` admit the closed-form equilibrium
//! `P(c) = phi_B^{-1}((c+beta)/alpha)`; general schedules are solved from the
//! first-order condition
//! `phi_B(P) = P - (P - w(P) - c) / (1 - w'(P))`.
//!
//! Benchmarks: the optimal exchange (trade iff `phi_B(v) >= phi_S(c)`, both
//! sides paying their critical types) and the efficient VCG exchange (trade
//! iff `v >= c`, buyer pays `c`, seller receives `v`).

use crate::dist::{DistError, Distribution, DEFAULT_CHECK_GRID, DEFAULT_RESOLUTION};
use crate::num;
use std::fmt;
use std::str::FromStr;

/// Price grid size used when tabulating derived schedules and strategies.
pub const DEFAULT_PRICE_GRID: usize = 1025;

const BNE_SCAN: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub enum MechError {
    BadParameter(String),
    Precondition(String),
    /// The first-order condition has no root for this cost.
    NoEquilibrium { cost: f64 },
    /// The tabulated best response failed the monotonicity requirement.
    NonMonotoneStrategy { cost: f64 },
    Dist(DistError),
}

impl fmt::Display for MechError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechError::BadParameter(m) => write!(f, "bad parameter: {m}"),
            MechError::Precondition(m) => write!(f, "precondition failed: {m}"),
            MechError::NoEquilibrium { cost } => {
                write!(f, "no equilibrium price found for cost {cost}")
            }
            MechError::NonMonotoneStrategy { cost } => {
                write!(f, "best response is not monotone near cost {cost}")
            }
            MechError::Dist(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MechError {}

impl From<DistError> for MechError {
    fn from(e: DistError) -> Self {
        MechError::Dist(e)
    }
}

impl From<num::NumError> for MechError {
    fn from(e: num::NumError) -> Self {
        MechError::Dist(DistError::Num(e))
    }
}

/// The broker's posted fee as a function of the seller's price.
#[derive(Debug, Clone, PartialEq)]
pub enum FeeSchedule {
    /// w(P) = (1 - alpha) P + beta.
    Affine { alpha: f64, beta: f64 },
    /// w(P) = k; semantically Affine{1, k} but reported as constant.
    Constant { k: f64 },
    /// Piecewise-linear fee over a price grid, extrapolated linearly.
    General { price_grid: Vec<f64>, fee_values: Vec<f64> },
}

impl FeeSchedule {
    pub fn general(price_grid: Vec<f64>, fee_values: Vec<f64>) -> Result<Self, MechError> {
        if price_grid.len() < 2 || price_grid.len() != fee_values.len() {
            return Err(MechError::BadParameter(format!(
                "general schedule needs matching grids of length >= 2, got {} and {}",
                price_grid.len(),
                fee_values.len()
            )));
        }
        if price_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MechError::BadParameter("price grid not strictly increasing".into()));
        }
        if fee_values.iter().any(|w| !w.is_finite()) {
            return Err(MechError::BadParameter("non-finite fee value".into()));
        }
        Ok(FeeSchedule::General { price_grid, fee_values })
    }

    /// Fee charged at price `p`.
    pub fn fee(&self, p: f64) -> f64 {
        match self {
            FeeSchedule::Affine { alpha, beta } => (1.0 - alpha) * p + beta,
            FeeSchedule::Constant { k } => *k,
            FeeSchedule::General { price_grid, fee_values } => {
                let n = price_grid.len();
                // Segment index, with end segments extended for extrapolation.
                let i = match price_grid.binary_search_by(|g| g.partial_cmp(&p).unwrap()) {
                    Ok(i) => i.min(n - 2),
                    Err(0) => 0,
                    Err(j) => (j - 1).min(n - 2),
                };
                let slope =
                    (fee_values[i + 1] - fee_values[i]) / (price_grid[i + 1] - price_grid[i]);
                fee_values[i] + slope * (p - price_grid[i])
            }
        }
    }

    /// Derivative w'(p); central difference with step 1e-5 of the grid span
    /// for general schedules.
    pub fn derivative(&self, p: f64) -> f64 {
        match self {
            FeeSchedule::Affine { alpha, .. } => 1.0 - alpha,
            FeeSchedule::Constant { .. } => 0.0,
            FeeSchedule::General { price_grid, .. } => {
                let span = price_grid.last().unwrap() - price_grid[0];
                let h = 1e-5 * span;
                num::central_diff(|x| self.fee(x), p, h)
            }
        }
    }

    /// Proper schedules keep the broker's fee nonnegative and pass through
    /// at most the full price increment: affine with 0 <= alpha <= 1 and
    /// beta >= 0. General schedules are checked segment-wise.
    pub fn is_proper(&self) -> bool {
        match self {
            FeeSchedule::Affine { alpha, beta } => {
                (0.0..=1.0).contains(alpha) && *beta >= 0.0
            }
            FeeSchedule::Constant { k } => *k >= 0.0,
            FeeSchedule::General { price_grid, fee_values } => {
                fee_values.iter().all(|w| *w >= 0.0)
                    && price_grid.windows(2).zip(fee_values.windows(2)).all(|(p, w)| {
                        let slope = (w[1] - w[0]) / (p[1] - p[0]);
                        (-1e-12..=1.0 + 1e-12).contains(&slope)
                    })
            }
        }
    }

    /// Affine view (alpha, beta) when the schedule is affine or constant.
    pub fn as_affine(&self) -> Option<(f64, f64)> {
        match self {
            FeeSchedule::Affine { alpha, beta } => Some((*alpha, *beta)),
            FeeSchedule::Constant { k } => Some((1.0, *k)),
            FeeSchedule::General { .. } => None,
        }
    }

    /// Equality up to the Constant / Affine{1, k} identification.
    pub fn semantically_eq(&self, other: &FeeSchedule) -> bool {
        match (self.as_affine(), other.as_affine()) {
            (Some(a), Some(b)) => a == b,
            _ => self == other,
        }
    }
}

impl fmt::Display for FeeSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeeSchedule::Affine { alpha, beta } => write!(f, "affine:{alpha},{beta}"),
            FeeSchedule::Constant { k } => write!(f, "constant:{k}"),
            FeeSchedule::General { price_grid, .. } => {
                write!(f, "general[{}]", price_grid.len())
            }
        }
    }
}

/// The seller's equilibrium price map P(c); `+infinity` means the cost type
/// never trades.
#[derive(Debug, Clone, PartialEq)]
pub enum SellerStrategy {
    /// P(c) = phi_B^{-1}((c + beta) / alpha), the affine-schedule equilibrium.
    ClosedFormAffine { buyer: Distribution, alpha: f64, beta: f64 },
    /// Piecewise-linear price map on a cost grid.
    Tabulated { cost_grid: Vec<f64>, price_values: Vec<f64> },
}

impl SellerStrategy {
    /// Equilibrium price for cost `c`.
    pub fn price(&self, c: f64) -> f64 {
        match self {
            SellerStrategy::ClosedFormAffine { buyer, alpha, beta } => {
                let target = (c + beta) / alpha;
                match buyer.inverse_virtual_value(target) {
                    Ok(p) => p,
                    Err(DistError::OutOfRange { .. }) => {
                        let s = buyer.support();
                        let gs = buyer.grid_support();
                        let inset = 1e-9 * gs.width();
                        let phi_lo =
                            buyer.virtual_value(gs.lo + inset).unwrap_or(f64::NEG_INFINITY);
                        if target <= phi_lo {
                            // Below the attainable range the boundary price
                            // is the best response: posting under the support
                            // floor cannot raise the trade probability past 1.
                            s.lo
                        } else {
                            f64::INFINITY
                        }
                    }
                    Err(_) => f64::INFINITY,
                }
            }
            SellerStrategy::Tabulated { cost_grid, price_values } => {
                let n = cost_grid.len();
                if c <= cost_grid[0] {
                    return price_values[0];
                }
                if c >= cost_grid[n - 1] {
                    return price_values[n - 1];
                }
                let i = match cost_grid.binary_search_by(|g| g.partial_cmp(&c).unwrap()) {
                    Ok(i) => return price_values[i],
                    Err(j) => j - 1,
                };
                let (p0, p1) = (price_values[i], price_values[i + 1]);
                if !(p0.is_finite() && p1.is_finite()) {
                    return f64::INFINITY;
                }
                p0 + (p1 - p0) * (c - cost_grid[i]) / (cost_grid[i + 1] - cost_grid[i])
            }
        }
    }

    /// Monotone nondecreasing on its grid (closed forms are monotone by
    /// construction when the buyer is regular).
    pub fn is_monotone(&self) -> bool {
        match self {
            SellerStrategy::ClosedFormAffine { .. } => true,
            SellerStrategy::Tabulated { price_values, .. } => {
                let mut prev = f64::NEG_INFINITY;
                for &p in price_values {
                    let v = if p.is_finite() { p } else { f64::INFINITY };
                    if v < prev - 1e-8 {
                        return false;
                    }
                    if v.is_finite() {
                        prev = v;
                    } else {
                        prev = f64::INFINITY;
                    }
                }
                true
            }
        }
    }
}

/// Ex-post result of one mechanism run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeOutcome {
    pub traded: bool,
    pub price: f64,
    pub buyer_payment: f64,
    pub seller_receipt: f64,
    pub broker_fee: f64,
}

impl TradeOutcome {
    pub const NO_TRADE: TradeOutcome = TradeOutcome {
        traded: false,
        price: 0.0,
        buyer_payment: 0.0,
        seller_receipt: 0.0,
        broker_fee: 0.0,
    };
}

/// Closed-form equilibrium for the affine schedule w(P) = (1-alpha) P + beta.
pub fn bne_affine(
    buyer: &Distribution,
    alpha: f64,
    beta: f64,
) -> Result<SellerStrategy, MechError> {
    if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0) {
        return Err(MechError::BadParameter(format!(
            "affine equilibrium needs alpha > 0, got alpha={alpha} beta={beta}"
        )));
    }
    if !buyer.is_regular_buyer(DEFAULT_CHECK_GRID) {
        return Err(MechError::Precondition(format!("buyer {buyer} is not regular")));
    }
    Ok(SellerStrategy::ClosedFormAffine { buyer: buyer.clone(), alpha, beta })
}

/// Solves the first-order condition for an arbitrary schedule on a cost grid.
///
/// For each cost the equation
/// `phi_B(P) - P + (P - w(P) - c) / (1 - w'(P)) = 0`
/// is bracketed by a scan over the buyer support and bisected; when the left
/// side is positive everywhere the support floor is the best response, and
/// when it is negative everywhere the cost never trades.
pub fn bne_general(
    buyer: &Distribution,
    w: &FeeSchedule,
    cost_grid: &[f64],
) -> Result<SellerStrategy, MechError> {
    if cost_grid.len() < 2 {
        return Err(MechError::BadParameter("cost grid needs at least 2 points".into()));
    }
    if cost_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(MechError::BadParameter("cost grid not strictly increasing".into()));
    }
    if !buyer.is_regular_buyer(DEFAULT_CHECK_GRID) {
        return Err(MechError::Precondition(format!("buyer {buyer} is not regular")));
    }
    let s = buyer.support();
    let gs = buyer.grid_support();
    let (lo, hi) = (gs.lo, gs.hi);
    let foc = |p: f64, c: f64| -> f64 {
        let phi = match buyer.virtual_value(p) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        let denom = 1.0 - w.derivative(p);
        if denom.abs() < 1e-12 {
            return f64::NAN;
        }
        phi - p + (p - w.fee(p) - c) / denom
    };
    let mut prices = Vec::with_capacity(cost_grid.len());
    for &c in cost_grid {
        let mut bracket = None;
        let mut prev: Option<(f64, f64)> = None;
        let mut first_finite = f64::NAN;
        let mut last_finite = f64::NAN;
        for k in 0..=BNE_SCAN {
            let p = lo + (hi - lo) * k as f64 / BNE_SCAN as f64;
            let y = foc(p, c);
            if !y.is_finite() {
                prev = None;
                continue;
            }
            if first_finite.is_nan() {
                first_finite = y;
            }
            last_finite = y;
            if let Some((p0, y0)) = prev {
                if y0 == 0.0 || y0.signum() != y.signum() {
                    bracket = Some((p0, p));
                    break;
                }
            }
            prev = Some((p, y));
        }
        let price = match bracket {
            Some((a, b)) => num::bisect(|p| foc(p, c), a, b, num::ROOT_TOL)?,
            None if first_finite.is_nan() => return Err(MechError::NoEquilibrium { cost: c }),
            // Positive everywhere: marginal revenue exceeds the target even
            // at the floor, so the seller posts the lowest support price.
            None if first_finite > 0.0 && last_finite > 0.0 => s.lo,
            None if first_finite < 0.0 && last_finite < 0.0 => f64::INFINITY,
            None => return Err(MechError::NoEquilibrium { cost: c }),
        };
        prices.push(price);
    }
    for i in 1..prices.len() {
        let (a, b) = (prices[i - 1], prices[i]);
        if b.is_finite() && a.is_finite() && b < a - 1e-8 * (1.0 + a.abs()) {
            return Err(MechError::NonMonotoneStrategy { cost: cost_grid[i] });
        }
        if a.is_infinite() && b.is_finite() {
            return Err(MechError::NonMonotoneStrategy { cost: cost_grid[i] });
        }
    }
    Ok(SellerStrategy::Tabulated { cost_grid: cost_grid.to_vec(), price_values: prices })
}

/// Runs the fee-setting mechanism ex post. Trade on the tie v = P(c).
pub fn run_fee_mechanism(
    w: &FeeSchedule,
    strategy: &SellerStrategy,
    v: f64,
    c: f64,
) -> TradeOutcome {
    let p = strategy.price(c);
    if !p.is_finite() || v < p {
        return TradeOutcome::NO_TRADE;
    }
    let fee = w.fee(p);
    TradeOutcome {
        traded: true,
        price: p,
        buyer_payment: p,
        seller_receipt: p - fee,
        broker_fee: fee,
    }
}

/// Optimal-exchange outcome: trade iff phi_B(v) >= phi_S(c); the buyer pays
/// and the seller receives their critical types, clamped to the supports.
pub fn myerson_outcome(
    buyer: &Distribution,
    seller: &Distribution,
    v: f64,
    c: f64,
) -> Result<TradeOutcome, MechError> {
    if !buyer.is_regular_buyer(DEFAULT_CHECK_GRID) {
        return Err(MechError::Precondition(format!("buyer {buyer} is not regular")));
    }
    if !seller.is_regular_seller(DEFAULT_CHECK_GRID) {
        return Err(MechError::Precondition(format!("seller {seller} is not regular")));
    }
    let phi_b = buyer.virtual_value(v)?;
    let phi_s = seller.virtual_cost(c)?;
    if phi_b < phi_s {
        return Ok(TradeOutcome::NO_TRADE);
    }
    let tau_b = critical_buyer_payment(buyer, phi_s)?;
    let tau_s = critical_seller_receipt(seller, phi_b)?;
    Ok(TradeOutcome {
        traded: true,
        price: tau_b,
        buyer_payment: tau_b,
        seller_receipt: tau_s,
        broker_fee: tau_b - tau_s,
    })
}

/// Lowest value that still trades against virtual cost `t`:
/// phi_B^{-1}(t) clamped to the support floor.
pub fn critical_buyer_payment(buyer: &Distribution, t: f64) -> Result<f64, MechError> {
    let s = buyer.support();
    match buyer.inverse_virtual_value(t) {
        Ok(x) => Ok(x.max(s.lo)),
        Err(DistError::OutOfRange { .. }) => {
            let gs = buyer.grid_support();
            let inset = 1e-9 * gs.width();
            let phi_lo = buyer.virtual_value(gs.lo + inset)?;
            if t <= phi_lo {
                Ok(s.lo)
            } else {
                Err(MechError::Precondition(format!(
                    "virtual cost {t} exceeds the buyer's virtual range"
                )))
            }
        }
        Err(e) => Err(e.into()),
    }
}

/// Highest cost that still trades against virtual value `t`:
/// phi_S^{-1}(t) clamped to the support ceiling.
pub fn critical_seller_receipt(seller: &Distribution, t: f64) -> Result<f64, MechError> {
    let s = seller.support();
    match seller.inverse_virtual_cost(t) {
        Ok(x) => Ok(x.min(s.hi)),
        Err(DistError::OutOfRange { .. }) => {
            let gs = seller.grid_support();
            let inset = 1e-9 * gs.width();
            let phi_hi = seller.virtual_cost(gs.hi - inset)?;
            if t >= phi_hi {
                Ok(s.hi)
            } else {
                Err(MechError::Precondition(format!(
                    "virtual value {t} undercuts the seller's virtual range"
                )))
            }
        }
        Err(e) => Err(e.into()),
    }
}

/// Efficient exchange: trade iff v >= c, buyer pays c, seller receives v.
pub fn vcg_outcome(v: f64, c: f64) -> TradeOutcome {
    if v < c {
        return TradeOutcome::NO_TRADE;
    }
    TradeOutcome {
        traded: true,
        price: c,
        buyer_payment: c,
        seller_receipt: v,
        broker_fee: c - v,
    }
}

/// The revenue-optimal price map P(c) = phi_B^{-1}(phi_S(c)), clamped to the
/// support floor below and mapped to +infinity (never trades) above.
pub fn optimal_price_map(
    buyer: &Distribution,
    seller: &Distribution,
    c: f64,
) -> Result<f64, MechError> {
    let t = seller.virtual_cost(c)?;
    match buyer.inverse_virtual_value(t) {
        Ok(x) => Ok(x.max(buyer.support().lo)),
        Err(DistError::OutOfRange { .. }) => {
            let gs = buyer.grid_support();
            let inset = 1e-9 * gs.width();
            let phi_lo = buyer.virtual_value(gs.lo + inset)?;
            if t <= phi_lo {
                Ok(buyer.support().lo)
            } else {
                Ok(f64::INFINITY)
            }
        }
        Err(e) => Err(e.into()),
    }
}

/// Revenue-optimal strategy tabulated on `cost_grid`.
pub fn optimal_strategy(
    buyer: &Distribution,
    seller: &Distribution,
    cost_grid: &[f64],
) -> Result<SellerStrategy, MechError> {
    let mut prices = Vec::with_capacity(cost_grid.len());
    for &c in cost_grid {
        prices.push(optimal_price_map(buyer, seller, c)?);
    }
    Ok(SellerStrategy::Tabulated { cost_grid: cost_grid.to_vec(), price_values: prices })
}

/// Revenue-optimal fee schedule, tabulated over `price_grid`:
/// `w(P) = P - E[P^{-1}(v) | v >= P]`
/// where `P(c) = phi_B^{-1}(phi_S(c))` and the inverse map is clamped to the
/// seller support (which leaves the seller's first-order condition intact
/// for every cost type). The induced equilibrium is P(c) itself.
pub fn optimal_fee_schedule(
    buyer: &Distribution,
    seller: &Distribution,
    price_grid: &[f64],
) -> Result<FeeSchedule, MechError> {
    if price_grid.len() < 2 {
        return Err(MechError::BadParameter("price grid needs at least 2 points".into()));
    }
    if !buyer.is_regular_buyer(DEFAULT_CHECK_GRID) {
        return Err(MechError::Precondition(format!("buyer {buyer} is not regular")));
    }
    if !seller.is_regular_seller(DEFAULT_CHECK_GRID) {
        return Err(MechError::Precondition(format!("seller {seller} is not regular")));
    }
    let sg = seller.grid_support();
    // The price map must be nondecreasing to invert; cost types past the
    // buyer's virtual range never trade, so only the finite part matters.
    let mut prev = f64::NEG_INFINITY;
    let mut saw_never_trade = false;
    for k in 0..=64 {
        let c = sg.lo + sg.width() * (k as f64 + 0.5) / 65.0;
        let p = optimal_price_map(buyer, seller, c)?;
        if p.is_finite() {
            if p < prev - 1e-9 || saw_never_trade {
                return Err(MechError::Precondition(
                    "optimal price map is not increasing on the seller support".into(),
                ));
            }
            prev = p;
        } else {
            saw_never_trade = true;
        }
    }
    let bs = buyer.grid_support();
    let seller_s = seller.support();
    let inset = 1e-9 * sg.width();
    let phi_s_lo = seller.virtual_cost(sg.lo + inset)?;
    let phi_s_hi = seller.virtual_cost(sg.hi - inset)?;
    // Inverse price map phi_S^{-1}(phi_B(v)), clamped to the cost support.
    let inv = |v: f64| -> f64 {
        let t = match buyer.virtual_value(v) {
            Ok(t) => t,
            Err(_) => return f64::NAN,
        };
        if t <= phi_s_lo {
            return seller_s.lo;
        }
        if t >= phi_s_hi {
            return seller_s.hi;
        }
        match seller.inverse_virtual_cost(t) {
            Ok(c) => c.clamp(seller_s.lo, seller_s.hi),
            Err(_) => f64::NAN,
        }
    };
    // Kinks of the clamped inverse sit where phi_B crosses the phi_S range.
    let mut kinks = Vec::new();
    if let Ok(x) = critical_buyer_payment(buyer, phi_s_lo) {
        kinks.push(x);
    }
    if let Ok(x) = buyer.inverse_virtual_value(phi_s_hi) {
        kinks.push(x);
    }
    kinks.extend(buyer.interior_breaks());
    let cost_scale = 1.0 + seller_s.lo.abs().max(seller_s.hi.abs());
    let mut fees = Vec::with_capacity(price_grid.len());
    for &p in price_grid {
        let surv = buyer.survival(p);
        if surv <= 1e-12 || p >= bs.hi {
            fees.push(p - inv(bs.hi - 1e-9 * bs.width()));
            continue;
        }
        // Extend past the truncated grid top until the conditional tail
        // mass is negligible relative to survival at p, so deep-tail
        // conditional expectations keep their relative accuracy.
        let hi = match buyer.quantile(1.0 - 1e-9 * surv) {
            Ok(x) if x.is_finite() => x.max(bs.hi),
            _ => bs.hi,
        };
        let q = num::integrate_with_breaks(
            |v| inv(v) * buyer.pdf(v),
            p.max(bs.lo),
            hi,
            &kinks,
            (1e-10 * surv * cost_scale).max(1e-15),
        )?;
        fees.push(p - q.value / surv);
    }
    FeeSchedule::general(price_grid.to_vec(), fees)
}

/// Equally spaced price grid covering the revenue-optimal price range.
pub fn optimal_price_grid(
    buyer: &Distribution,
    seller: &Distribution,
    n: usize,
) -> Result<Vec<f64>, MechError> {
    let sg = seller.grid_support();
    let lo = optimal_price_map(buyer, seller, sg.lo + 1e-9 * sg.width())?;
    let hi_target = seller.virtual_cost(sg.hi - 1e-9 * sg.width())?;
    let bs = buyer.grid_support();
    let hi = match buyer.inverse_virtual_value(hi_target) {
        Ok(x) => x,
        Err(_) => bs.hi,
    };
    let n = n.max(2);
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// Affine schedule that is revenue-optimal when the seller's cost has the
/// reverse generalized Pareto law with these parameters:
/// alpha = 1/(1+xi), beta = (1/lambda + xi mu)/(1+xi), which makes the
/// induced target (c+beta)/alpha equal the seller's virtual cost.
pub fn ln13_affine_schedule(xi: f64, lambda: f64, mu: f64) -> Result<FeeSchedule, MechError> {
    if !(lambda.is_finite() && lambda > 0.0) || !xi.is_finite() || xi < 0.0 || !mu.is_finite() {
        return Err(MechError::BadParameter(format!(
            "reverse Pareto schedule needs lambda > 0 and xi >= 0, got xi={xi} lambda={lambda} mu={mu}"
        )));
    }
    Ok(FeeSchedule::Affine {
        alpha: 1.0 / (1.0 + xi),
        beta: (1.0 / lambda + xi * mu) / (1.0 + xi),
    })
}

/// Schedule w(P) = P - phi_B(P) for a buyer with affine virtual value
/// phi_B(v) = alpha v - beta (the generalized Pareto family).
pub fn thm1_schedule(buyer: &Distribution) -> Result<FeeSchedule, MechError> {
    let (alpha, beta) = match buyer {
        Distribution::Uniform(u) => (2.0, u.hi),
        Distribution::Gpd(g) => (1.0 + g.xi, 1.0 / g.lambda + g.xi * g.mu),
        Distribution::Power(p) => (1.0 + 1.0 / p.a, p.vbar / p.a),
        other => {
            return Err(MechError::Precondition(format!(
                "schedule requires an affine virtual value; {other} is not generalized Pareto"
            )))
        }
    };
    Ok(FeeSchedule::Affine { alpha, beta })
}

/// Constant schedule w(P) = eta, the monopoly price of the v - c law over
/// nonnegative prices. Requires the buyer and the difference law to be MHR.
pub fn mhr_constant_schedule(
    buyer: &Distribution,
    seller: &Distribution,
    resolution: usize,
) -> Result<FeeSchedule, MechError> {
    if !buyer.is_mhr(DEFAULT_CHECK_GRID) {
        return Err(MechError::Precondition(format!(
            "buyer {buyer} does not have a monotone hazard rate"
        )));
    }
    let diff = buyer.diff_distribution(seller, resolution)?;
    if !diff.is_mhr(DEFAULT_CHECK_GRID) {
        return Err(MechError::Precondition(
            "difference law v - c does not have a monotone hazard rate".into(),
        ));
    }
    let s = diff.support();
    if s.hi <= 0.0 {
        return Err(MechError::Precondition(
            "difference law has no positive-price mass".into(),
        ));
    }
    let obj = |t: f64| t * diff.survival(t);
    let lo = s.lo.max(0.0);
    let n = 10_000;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        let t = lo + (s.hi - lo) * i as f64 / n as f64;
        let y = obj(t);
        if y > best {
            best = y;
            best_i = i;
        }
    }
    let a = lo + (s.hi - lo) * best_i.saturating_sub(1) as f64 / n as f64;
    let b = lo + (s.hi - lo) * (best_i + 1).min(n) as f64 / n as f64;
    let (eta, _) = num::golden_section_max(obj, a, b, 1e-10);
    Ok(FeeSchedule::Constant { k: eta })
}

/// Parsed form of the schedule mini-grammar; derived variants resolve against
/// a buyer/seller pair.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Affine { alpha: f64, beta: f64 },
    Constant { k: f64 },
    Thm1,
    Mhr,
    Optimal,
    Ln13 { xi: f64, lambda: f64, mu: f64 },
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleSpec::Affine { alpha, beta } => write!(f, "affine:{alpha},{beta}"),
            ScheduleSpec::Constant { k } => write!(f, "constant:{k}"),
            ScheduleSpec::Thm1 => write!(f, "thm1"),
            ScheduleSpec::Mhr => write!(f, "mhr"),
            ScheduleSpec::Optimal => write!(f, "optimal"),
            ScheduleSpec::Ln13 { xi, lambda, mu } => write!(f, "ln13:{xi},{lambda},{mu}"),
        }
    }
}

/// Parses `affine:alpha,beta | constant:k | thm1 | mhr | optimal |
/// ln13:xi,lambda,mu`.
pub fn parse_schedule(s: &str) -> Result<ScheduleSpec, MechError> {
    let (family, args) = match s.split_once(':') {
        Some((f, a)) => (f, Some(a)),
        None => (s, None),
    };
    let nums = |args: Option<&str>, expect: usize| -> Result<Vec<f64>, MechError> {
        let args = args.ok_or_else(|| {
            MechError::BadParameter(format!("{family} needs {expect} arguments"))
        })?;
        let vals: Result<Vec<f64>, _> = args.split(',').map(|p| f64::from_str(p.trim())).collect();
        let vals = vals
            .map_err(|_| MechError::BadParameter(format!("bad numeric arguments in {s:?}")))?;
        if vals.len() != expect {
            return Err(MechError::BadParameter(format!(
                "{family} takes {expect} arguments, got {}",
                vals.len()
            )));
        }
        Ok(vals)
    };
    match family {
        "affine" => {
            let v = nums(args, 2)?;
            Ok(ScheduleSpec::Affine { alpha: v[0], beta: v[1] })
        }
        "constant" => {
            let v = nums(args, 1)?;
            Ok(ScheduleSpec::Constant { k: v[0] })
        }
        "thm1" if args.is_none() => Ok(ScheduleSpec::Thm1),
        "mhr" if args.is_none() => Ok(ScheduleSpec::Mhr),
        "optimal" if args.is_none() => Ok(ScheduleSpec::Optimal),
        "ln13" => {
            let v = nums(args, 3)?;
            Ok(ScheduleSpec::Ln13 { xi: v[0], lambda: v[1], mu: v[2] })
        }
        other => Err(MechError::BadParameter(format!("unknown schedule {other:?}"))),
    }
}

/// Resolves a schedule spec against the market pair.
pub fn resolve_schedule(
    spec: &ScheduleSpec,
    buyer: &Distribution,
    seller: &Distribution,
) -> Result<FeeSchedule, MechError> {
    match spec {
        ScheduleSpec::Affine { alpha, beta } => {
            Ok(FeeSchedule::Affine { alpha: *alpha, beta: *beta })
        }
        ScheduleSpec::Constant { k } => Ok(FeeSchedule::Constant { k: *k }),
        ScheduleSpec::Thm1 => thm1_schedule(buyer),
        ScheduleSpec::Mhr => mhr_constant_schedule(buyer, seller, DEFAULT_RESOLUTION),
        ScheduleSpec::Optimal => {
            let grid = optimal_price_grid(buyer, seller, DEFAULT_PRICE_GRID)?;
            optimal_fee_schedule(buyer, seller, &grid)
        }
        ScheduleSpec::Ln13 { xi, lambda, mu } => ln13_affine_schedule(*xi, *lambda, *mu),
    }
}
