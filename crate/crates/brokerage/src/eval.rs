//! Expectation engine: fee-mechanism revenue, benchmark revenue, and maximum
//! surplus, each by adaptive quadrature or seeded Monte Carlo.
//!
//! Quadrature reduces the double expectations to one-dimensional integrals
//! over the cost: the fee mechanism earns `w(P(c)) (1 - F(P(c)))` from type
//! `c`, the benchmark exchange earns `(tau(c) - phi_S(c)) (1 - F(tau(c)))`
//! (the threshold-revenue identity applied to the clamped critical value
//! `tau`), and the maximum surplus conditional on `c` is the integral of the
//! buyer survival past `c`. Indicator kinks are split, not integrated over.

use crate::dist::{DistError, Distribution};
use crate::mech::{
    bne_affine, bne_general, optimal_price_map, FeeSchedule, MechError, SellerStrategy,
    DEFAULT_PRICE_GRID,
};
use crate::num;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

/// Substream indices so each expectation draws independent randomness from
/// one seed; a split evaluation would extend the scheme with task offsets.
const STREAM_FEE: u64 = 1;
const STREAM_MYERSON: u64 = 2;
const STREAM_SURPLUS: u64 = 3;
const STREAM_CLOSED_FORM: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    BadMethod(String),
    Accuracy { requested: f64, achieved: f64 },
    Mech(MechError),
    Dist(DistError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::BadMethod(m) => write!(f, "bad evaluation method: {m}"),
            EvalError::Accuracy { requested, achieved } => {
                write!(f, "quadrature did not converge: requested {requested}, got {achieved}")
            }
            EvalError::Mech(e) => write!(f, "{e}"),
            EvalError::Dist(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for EvalError {}

impl From<MechError> for EvalError {
    fn from(e: MechError) -> Self {
        EvalError::Mech(e)
    }
}

impl From<DistError> for EvalError {
    fn from(e: DistError) -> Self {
        EvalError::Dist(e)
    }
}

impl From<num::NumError> for EvalError {
    fn from(e: num::NumError) -> Self {
        EvalError::Dist(DistError::Num(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMethod {
    Quadrature { abs_tol: f64 },
    MonteCarlo { n_samples: usize, seed: u64 },
}

impl EvalMethod {
    pub fn quadrature() -> Self {
        EvalMethod::Quadrature { abs_tol: DEFAULT_QUAD_TOL }
    }

    pub fn monte_carlo(seed: u64) -> Self {
        EvalMethod::MonteCarlo { n_samples: DEFAULT_MC_SAMPLES, seed }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        match self {
            EvalMethod::Quadrature { abs_tol } => {
                if !(abs_tol.is_finite() && *abs_tol > 0.0) {
                    return Err(EvalError::BadMethod(format!(
                        "quadrature tolerance must be positive, got {abs_tol}"
                    )));
                }
            }
            EvalMethod::MonteCarlo { n_samples, .. } => {
                if *n_samples < 1000 {
                    return Err(EvalError::BadMethod(format!(
                        "Monte Carlo needs at least 1000 samples, got {n_samples}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalMethod::Quadrature { abs_tol } => write!(f, "quad:{abs_tol:e}"),
            EvalMethod::MonteCarlo { n_samples, seed } => write!(f, "mc:{n_samples},{seed}"),
        }
    }
}

/// A value with its reported error: rule discrepancy for quadrature, one
/// standard error for Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalFlags {
    /// The schedule never trades; ratios are reported infinite.
    pub never_trades: bool,
    /// A numeric regularity check failed; the benchmark value is the
    /// virtual-surplus integral taken at face value (no ironing).
    pub regularity_unverified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rev_apx: Estimate,
    pub opt_rev: Estimate,
    pub opt_surplus: Estimate,
    pub ratio_rev: f64,
    pub ratio_surplus: f64,
    pub method: EvalMethod,
    pub flags: EvalFlags,
}

/// Nine significant digits; infinities spelled out for CSV stability.
pub fn fmt_sig(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "buyer",
    "seller",
    "schedule",
    "method",
    "rev_apx",
    "err",
    "opt_rev",
    "err",
    "opt_surplus",
    "err",
    "ratio_rev",
    "ratio_surplus",
];

impl EvalReport {
    pub fn csv_record(&self, buyer: &str, seller: &str, schedule: &str) -> Vec<String> {
        vec![
            buyer.to_string(),
            seller.to_string(),
            schedule.to_string(),
            self.method.to_string(),
            fmt_sig(self.rev_apx.value),
            fmt_sig(self.rev_apx.error),
            fmt_sig(self.opt_rev.value),
            fmt_sig(self.opt_rev.error),
            fmt_sig(self.opt_surplus.value),
            fmt_sig(self.opt_surplus.error),
            fmt_sig(self.ratio_rev),
            fmt_sig(self.ratio_surplus),
        ]
    }

    /// One JSON object per report; infinite ratios serialize as strings.
    pub fn to_json(&self, buyer: &str, seller: &str, schedule: &str) -> serde_json::Value {
        let ratio = |x: f64| -> serde_json::Value {
            if x.is_finite() {
                serde_json::json!(x)
            } else {
                serde_json::json!(fmt_sig(x))
            }
        };
        serde_json::json!({
            "buyer": buyer,
            "seller": seller,
            "schedule": schedule,
            "method": self.method.to_string(),
            "rev_apx": self.rev_apx.value,
            "rev_apx_err": self.rev_apx.error,
            "opt_rev": self.opt_rev.value,
            "opt_rev_err": self.opt_rev.error,
            "opt_surplus": self.opt_surplus.value,
            "opt_surplus_err": self.opt_surplus.error,
            "ratio_rev": ratio(self.ratio_rev),
            "ratio_surplus": ratio(self.ratio_surplus),
            "never_trades": self.flags.never_trades,
            "regularity_unverified": self.flags.regularity_unverified,
        })
    }
}

fn mc_pair_mean<X>(
    buyer: &Distribution,
    seller: &Distribution,
    n: usize,
    seed: u64,
    stream: u64,
    mut payoff: X,
) -> Result<Estimate, EvalError>
where
    X: FnMut(f64, f64) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let v = buyer.sample(&mut rng);
        let c = seller.sample(&mut rng);
        let x = payoff(v, c);
        sum += x;
        sum_sq += x * x;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(Estimate { value: mean, error: (var / nf).sqrt() })
}

fn check_quad(q: &num::Quad, abs_tol: f64) -> Result<Estimate, EvalError> {
    if !q.abs_error.is_finite() || q.abs_error > 1e3 * abs_tol.max(1e-12) {
        return Err(EvalError::Accuracy { requested: abs_tol, achieved: q.abs_error });
    }
    Ok(Estimate { value: q.value, error: q.abs_error })
}

/// Cost where the monotone price map crosses `level`, if it does.
fn price_crossing(strategy: &SellerStrategy, lo: f64, hi: f64, level: f64) -> Option<f64> {
    let big = 1e300;
    let h = |c: f64| strategy.price(c).min(big) - level;
    let (ylo, yhi) = (h(lo), h(hi));
    if ylo.signum() == yhi.signum() {
        return None;
    }
    num::bisect(h, lo, hi, num::ROOT_TOL).ok()
}

/// Expected broker revenue of a fee mechanism: E_c[ w(P(c)) (1 - F(P(c))) ].
pub fn expected_fee_revenue(
    buyer: &Distribution,
    seller: &Distribution,
    w: &FeeSchedule,
    strategy: &SellerStrategy,
    method: &EvalMethod,
) -> Result<Estimate, EvalError> {
    method.validate()?;
    match method {
        EvalMethod::Quadrature { abs_tol } => {
            let sg = seller.grid_support();
            let bs = buyer.grid_support();
            let revenue = |c: f64| {
                let p = strategy.price(c);
                if !p.is_finite() {
                    return 0.0;
                }
                let surv = buyer.survival(p);
                if surv <= 0.0 {
                    return 0.0;
                }
                w.fee(p) * surv * seller.pdf(c)
            };
            let mut breaks = seller.interior_breaks();
            // Trade stops where P(c) leaves the buyer support; the floor
            // clamp introduces a second kink for very low costs.
            if let Some(c) = price_crossing(strategy, sg.lo, sg.hi, bs.hi) {
                breaks.push(c);
            }
            if let Some(c) = price_crossing(strategy, sg.lo, sg.hi, bs.lo + 1e-12) {
                breaks.push(c);
            }
            if let SellerStrategy::Tabulated { cost_grid, .. } = strategy {
                if cost_grid.len() <= 2048 {
                    breaks.extend_from_slice(cost_grid);
                }
            }
            let q = num::integrate_with_breaks(revenue, sg.lo, sg.hi, &breaks, *abs_tol)?;
            check_quad(&q, *abs_tol)
        }
        EvalMethod::MonteCarlo { n_samples, seed } => {
            mc_pair_mean(buyer, seller, *n_samples, *seed, STREAM_FEE, |v, c| {
                let p = strategy.price(c);
                if p.is_finite() && v >= p {
                    w.fee(p)
                } else {
                    0.0
                }
            })
        }
    }
}

/// Expected revenue of the optimal exchange: E[(phi_B(v) - phi_S(c))^+].
pub fn expected_myerson_revenue(
    buyer: &Distribution,
    seller: &Distribution,
    method: &EvalMethod,
) -> Result<Estimate, EvalError> {
    method.validate()?;
    match method {
        EvalMethod::Quadrature { abs_tol } => {
            let sg = seller.grid_support();
            let inner = |c: f64| {
                let t = match seller.virtual_cost(c) {
                    Ok(t) => t,
                    Err(_) => return f64::NAN,
                };
                let tau = match optimal_price_map(buyer, seller, c) {
                    Ok(tau) => tau,
                    Err(_) => return f64::NAN,
                };
                if !tau.is_finite() {
                    return 0.0;
                }
                (tau - t) * buyer.survival(tau) * seller.pdf(c)
            };
            // Kinks: the critical value hits the buyer's support ends.
            let mut breaks = seller.interior_breaks();
            let bs = buyer.grid_support();
            let inset = 1e-9 * bs.width();
            for t in [
                buyer.virtual_value(bs.lo + inset),
                buyer.virtual_value(bs.hi - inset),
            ]
            .into_iter()
            .flatten()
            {
                if let Ok(c) = seller.inverse_virtual_cost(t) {
                    breaks.push(c);
                }
            }
            let q = num::integrate_with_breaks(inner, sg.lo, sg.hi, &breaks, *abs_tol)?;
            check_quad(&q, *abs_tol)
        }
        EvalMethod::MonteCarlo { n_samples, seed } => {
            let mut bad = false;
            let est = mc_pair_mean(buyer, seller, *n_samples, *seed, STREAM_MYERSON, |v, c| {
                match (buyer.virtual_value(v), seller.virtual_cost(c)) {
                    (Ok(pb), Ok(ps)) => (pb - ps).max(0.0),
                    _ => {
                        bad = true;
                        0.0
                    }
                }
            })?;
            if bad {
                return Err(EvalError::Dist(DistError::Singular { at: f64::NAN }));
            }
            Ok(est)
        }
    }
}

/// Expected maximum surplus E[(v - c)^+].
pub fn expected_max_surplus(
    buyer: &Distribution,
    seller: &Distribution,
    method: &EvalMethod,
) -> Result<Estimate, EvalError> {
    method.validate()?;
    match method {
        EvalMethod::Quadrature { abs_tol } => {
            let sg = seller.grid_support();
            let bs = buyer.grid_support();
            let flo = buyer.support().lo.max(bs.lo);
            let inner_tol = 0.1 * abs_tol / (1.0 + sg.width());
            let inner = |c: f64| {
                if c >= bs.hi {
                    return 0.0;
                }
                let lo = c.max(flo);
                let tail = num::integrate(|v| buyer.survival(v), lo, bs.hi, inner_tol)
                    .map(|q| q.value)
                    .unwrap_or(f64::NAN);
                (tail + (flo - c).max(0.0)) * seller.pdf(c)
            };
            let mut breaks = seller.interior_breaks();
            breaks.push(flo);
            breaks.push(bs.hi);
            let q = num::integrate_with_breaks(inner, sg.lo, sg.hi, &breaks, *abs_tol)?;
            let est = check_quad(&q, *abs_tol)?;
            Ok(Estimate { value: est.value, error: est.error + 0.1 * abs_tol })
        }
        EvalMethod::MonteCarlo { n_samples, seed } => {
            mc_pair_mean(buyer, seller, *n_samples, *seed, STREAM_SURPLUS, |v, c| {
                (v - c).max(0.0)
            })
        }
    }
}

/// Closed-form fee revenue for the uniform[0,1] buyer under Affine{alpha,
/// beta}: a single integral of
/// ((1-alpha)(c+alpha) + beta(1+alpha)) (alpha-c-beta) / (4 alpha^2)
/// over costs in [0, alpha-beta].
pub fn rev_apx_uniform_closed_form(
    alpha: f64,
    beta: f64,
    seller: &Distribution,
    method: &EvalMethod,
) -> Result<Estimate, EvalError> {
    method.validate()?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(EvalError::Mech(MechError::BadParameter(format!(
            "closed form needs alpha > 0, got {alpha}"
        ))));
    }
    let hi_c = alpha - beta;
    let pointwise = |c: f64| {
        ((1.0 - alpha) * (c + alpha) + beta * (1.0 + alpha)) * (alpha - c - beta)
            / (4.0 * alpha * alpha)
    };
    match method {
        EvalMethod::Quadrature { abs_tol } => {
            let sg = seller.grid_support();
            let lo = sg.lo.max(0.0);
            let hi = sg.hi.min(hi_c);
            if hi <= lo {
                return Ok(Estimate { value: 0.0, error: 0.0 });
            }
            let q = num::integrate_with_breaks(
                |c| pointwise(c) * seller.pdf(c),
                lo,
                hi,
                &seller.interior_breaks(),
                *abs_tol,
            )?;
            check_quad(&q, *abs_tol)
        }
        EvalMethod::MonteCarlo { n_samples, seed } => {
            mc_pair_mean(seller, seller, *n_samples, *seed, STREAM_CLOSED_FORM, |c, _| {
                if c >= 0.0 && c <= hi_c {
                    pointwise(c)
                } else {
                    0.0
                }
            })
        }
    }
}

/// Equilibrium strategy for an arbitrary schedule: closed form when affine,
/// otherwise the first-order condition solved on a dense cost grid.
pub fn strategy_for(
    buyer: &Distribution,
    seller: &Distribution,
    w: &FeeSchedule,
) -> Result<SellerStrategy, EvalError> {
    match w.as_affine() {
        Some((alpha, beta)) => Ok(bne_affine(buyer, alpha, beta)?),
        None => {
            let sg = seller.grid_support();
            let n = DEFAULT_PRICE_GRID;
            let grid: Vec<f64> = (0..n)
                .map(|i| sg.lo + sg.width() * i as f64 / (n - 1) as f64)
                .collect();
            Ok(bne_general(buyer, w, &grid)?)
        }
    }
}

/// Bundles the three expectations and both ratios.
pub fn ratio_report(
    buyer: &Distribution,
    seller: &Distribution,
    w: &FeeSchedule,
    method: &EvalMethod,
) -> Result<EvalReport, EvalError> {
    let strategy = strategy_for(buyer, seller, w)?;
    ratio_report_with_strategy(buyer, seller, w, &strategy, method)
}

/// Same as [`ratio_report`] with a caller-supplied equilibrium strategy.
pub fn ratio_report_with_strategy(
    buyer: &Distribution,
    seller: &Distribution,
    w: &FeeSchedule,
    strategy: &SellerStrategy,
    method: &EvalMethod,
) -> Result<EvalReport, EvalError> {
    let rev_apx = expected_fee_revenue(buyer, seller, w, strategy, method)?;
    let opt_rev = expected_myerson_revenue(buyer, seller, method)?;
    let opt_surplus = expected_max_surplus(buyer, seller, method)?;
    let never_trades = rev_apx.value <= 0.0;
    let (ratio_rev, ratio_surplus) = if never_trades {
        (f64::INFINITY, f64::INFINITY)
    } else {
        (opt_rev.value / rev_apx.value, opt_surplus.value / rev_apx.value)
    };
    let regularity_unverified = !(buyer.is_regular_buyer(crate::dist::DEFAULT_CHECK_GRID)
        && seller.is_regular_seller(crate::dist::DEFAULT_CHECK_GRID));
    Ok(EvalReport {
        rev_apx,
        opt_rev,
        opt_surplus,
        ratio_rev,
        ratio_surplus,
        method: *method,
        flags: EvalFlags { never_trades, regularity_unverified },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mech::{ln13_affine_schedule, optimal_fee_schedule, optimal_price_grid};

    fn uniform01() -> Distribution {
        Distribution::uniform(0.0, 1.0).unwrap()
    }

    fn quad() -> EvalMethod {
        EvalMethod::Quadrature { abs_tol: 1e-10 }
    }

    #[test]
    fn fee_revenue_uniform_fixtures() {
        let b = uniform01();
        let cases = [
            (2.0, 1.0, 1.0 / 48.0),
            (0.5, 0.0, 1.0 / 24.0),
            (1.0, 0.25, 0.03515625),
        ];
        for (alpha, beta, want) in cases {
            let w = FeeSchedule::Affine { alpha, beta };
            let s = bne_affine(&b, alpha, beta).unwrap();
            let est = expected_fee_revenue(&b, &b, &w, &s, &quad()).unwrap();
            assert!(
                (est.value - want).abs() < 1e-8,
                "alpha={alpha} beta={beta}: {} vs {want}",
                est.value
            );
        }
    }

    #[test]
    fn fee_revenue_monte_carlo_agrees_and_is_deterministic() {
        let b = uniform01();
        let w = FeeSchedule::Affine { alpha: 2.0, beta: 1.0 };
        let s = bne_affine(&b, 2.0, 1.0).unwrap();
        let mc = EvalMethod::MonteCarlo { n_samples: 200_000, seed: 42 };
        let est = expected_fee_revenue(&b, &b, &w, &s, &mc).unwrap();
        assert!((est.value - 1.0 / 48.0).abs() < 4.0 * est.error);
        assert!(est.error > 0.0 && est.error < 1e-3);
        let again = expected_fee_revenue(&b, &b, &w, &s, &mc).unwrap();
        assert_eq!(est, again);
        let other = EvalMethod::MonteCarlo { n_samples: 200_000, seed: 43 };
        let shifted = expected_fee_revenue(&b, &b, &w, &s, &other).unwrap();
        assert_ne!(est.value, shifted.value);
    }

    #[test]
    fn myerson_revenue_fixtures() {
        let b = uniform01();
        let est = expected_myerson_revenue(&b, &b, &quad()).unwrap();
        assert!((est.value - 1.0 / 24.0).abs() < 1e-8, "{}", est.value);
        // Seller concentrated at the top: virtual surplus never positive.
        let top = Distribution::uniform(0.999, 1.0).unwrap();
        let est = expected_myerson_revenue(&b, &top, &quad()).unwrap();
        assert!(est.value.abs() < 1e-5, "{}", est.value);
        // Sharp-density seller: quadrature and Monte Carlo agree.
        let wc = Distribution::worst_case_seller(0.01).unwrap();
        let q = expected_myerson_revenue(&b, &wc, &quad()).unwrap();
        let mc = EvalMethod::MonteCarlo { n_samples: 400_000, seed: 7 };
        let m = expected_myerson_revenue(&b, &wc, &mc).unwrap();
        assert!((q.value - m.value).abs() < 4.0 * m.error, "{} vs {}", q.value, m.value);
    }

    #[test]
    fn max_surplus_fixtures() {
        let b = uniform01();
        let est = expected_max_surplus(&b, &b, &quad()).unwrap();
        assert!((est.value - 1.0 / 6.0).abs() < 1e-8, "{}", est.value);
        // Closed form for the sharp seller: delta/(2(1-delta)) ln(1/delta).
        let wc = Distribution::worst_case_seller(0.01).unwrap();
        let est = expected_max_surplus(&b, &wc, &quad()).unwrap();
        assert!((est.value - 0.023258435282767128).abs() < 1e-5, "{}", est.value);
        // Identical near-point masses: essentially no surplus.
        let spike = Distribution::uniform(0.5, 0.5001).unwrap();
        let est = expected_max_surplus(&spike, &spike, &quad()).unwrap();
        assert!(est.value.abs() < 1e-4, "{}", est.value);
        let mc = EvalMethod::MonteCarlo { n_samples: 400_000, seed: 11 };
        let m = expected_max_surplus(&b, &b, &mc).unwrap();
        assert!((m.value - 1.0 / 6.0).abs() < 4.0 * m.error);
    }

    #[test]
    fn closed_form_matches_general_path() {
        let b = uniform01();
        let est = rev_apx_uniform_closed_form(2.0, 1.0, &b, &quad()).unwrap();
        assert!((est.value - 1.0 / 48.0).abs() < 1e-9, "{}", est.value);
        let wc = Distribution::worst_case_seller(0.1).unwrap();
        let cf = rev_apx_uniform_closed_form(2.0, 1.0, &wc, &quad()).unwrap();
        let w = FeeSchedule::Affine { alpha: 2.0, beta: 1.0 };
        let s = bne_affine(&b, 2.0, 1.0).unwrap();
        let gen = expected_fee_revenue(&b, &wc, &w, &s, &quad()).unwrap();
        assert!((cf.value - gen.value).abs() < 1e-6, "{} vs {}", cf.value, gen.value);
        // Empty integration range.
        let est = rev_apx_uniform_closed_form(1.0, 1.5, &b, &quad()).unwrap();
        assert_eq!(est.value, 0.0);
        // Monte Carlo path agrees with the quadrature value.
        let mc = EvalMethod::MonteCarlo { n_samples: 200_000, seed: 3 };
        let m = rev_apx_uniform_closed_form(2.0, 1.0, &b, &mc).unwrap();
        assert!((m.value - 1.0 / 48.0).abs() < 4.0 * m.error);
    }

    #[test]
    fn ratio_report_uniform_pair() {
        let b = uniform01();
        let w = FeeSchedule::Affine { alpha: 2.0, beta: 1.0 };
        let r = ratio_report(&b, &b, &w, &quad()).unwrap();
        assert!((r.ratio_rev - 2.0).abs() < 1e-6, "{}", r.ratio_rev);
        assert!((r.ratio_surplus - 8.0).abs() < 1e-6, "{}", r.ratio_surplus);
        assert!(!r.flags.never_trades && !r.flags.regularity_unverified);
        assert!(r.opt_surplus.value >= r.opt_rev.value - 1e-10);
        assert!(r.opt_rev.value >= r.rev_apx.value - 1e-10);
    }

    #[test]
    fn ratio_report_optimal_schedule_is_unity() {
        let b = uniform01();
        let grid = optimal_price_grid(&b, &b, 257).unwrap();
        let w = optimal_fee_schedule(&b, &b, &grid).unwrap();
        let r = ratio_report(&b, &b, &w, &EvalMethod::Quadrature { abs_tol: 1e-9 }).unwrap();
        assert!((r.ratio_rev - 1.0).abs() < 1e-4, "{}", r.ratio_rev);
        assert!((r.rev_apx.value - 1.0 / 24.0).abs() < 1e-5, "{}", r.rev_apx.value);
    }

    #[test]
    fn ratio_report_flags_never_trading_schedules() {
        let b = uniform01();
        let w = FeeSchedule::Constant { k: 10.0 };
        let r = ratio_report(&b, &b, &w, &quad()).unwrap();
        assert!(r.flags.never_trades);
        assert!(r.ratio_rev.is_infinite() && r.ratio_surplus.is_infinite());
    }

    #[test]
    fn exact_eight_identity_for_unit_interval_sellers() {
        // With the uniform buyer and w(P) = 1 - P, conditional revenue is
        // (1-c)^2/16 and conditional surplus (1-c)^2/2 for every c in [0,1],
        // so the ratio is exactly 8 for any seller law on the unit interval.
        let b = uniform01();
        let w = FeeSchedule::Affine { alpha: 2.0, beta: 1.0 };
        let s = bne_affine(&b, 2.0, 1.0).unwrap();
        let sellers = vec![
            uniform01(),
            Distribution::uniform(0.2, 0.9).unwrap(),
            Distribution::worst_case_seller(0.01).unwrap(),
            Distribution::tabulated(
                vec![0.0, 0.1, 0.4, 0.8, 1.0],
                vec![0.0, 0.45, 0.65, 0.9, 1.0],
            )
            .unwrap(),
        ];
        for seller in sellers {
            let rev = expected_fee_revenue(&b, &seller, &w, &s, &quad()).unwrap();
            let sur = expected_max_surplus(&b, &seller, &quad()).unwrap();
            assert!(
                (sur.value - 8.0 * rev.value).abs() < 1e-6,
                "{seller}: {} vs {}",
                sur.value,
                8.0 * rev.value
            );
        }
    }

    #[test]
    fn revenue_ordering_across_mechanisms() {
        let pairs = vec![
            (uniform01(), uniform01(), FeeSchedule::Affine { alpha: 2.0, beta: 1.0 }),
            (
                Distribution::exponential(1.0).unwrap(),
                Distribution::rgpd(-6.0, 0.25, 1.0).unwrap(),
                ln13_affine_schedule(1.0, 0.25, -6.0).unwrap(),
            ),
            (
                uniform01(),
                Distribution::worst_case_seller(0.01).unwrap(),
                FeeSchedule::Affine { alpha: 2.0, beta: 1.0 },
            ),
        ];
        for (b, s, w) in pairs {
            let r = ratio_report(&b, &s, &w, &quad()).unwrap();
            assert!(
                r.rev_apx.value <= r.opt_rev.value + 1e-6,
                "{b}/{s}: fee {} benchmark {}",
                r.rev_apx.value,
                r.opt_rev.value
            );
            assert!(
                r.opt_rev.value <= r.opt_surplus.value + 1e-6,
                "{b}/{s}: benchmark {} surplus {}",
                r.opt_rev.value,
                r.opt_surplus.value
            );
        }
    }

    #[test]
    fn method_validation() {
        assert!(EvalMethod::Quadrature { abs_tol: 0.0 }.validate().is_err());
        assert!(EvalMethod::MonteCarlo { n_samples: 999, seed: 0 }.validate().is_err());
        assert!(EvalMethod::quadrature().validate().is_ok());
        assert!(EvalMethod::monte_carlo(1).validate().is_ok());
    }

    #[test]
    fn serialization_formats_are_pinned() {
        let b = uniform01();
        let w = FeeSchedule::Affine { alpha: 2.0, beta: 1.0 };
        let r = ratio_report(&b, &b, &w, &quad()).unwrap();
        assert_eq!(fmt_sig(1.0 / 48.0), "2.08333333e-2");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
        let rec = r.csv_record("uniform:0,1", "uniform:0,1", "affine:2,1");
        assert_eq!(rec.len(), CSV_HEADER.len());
        let mut wtr = csv::Writer::from_writer(vec![]);
        wtr.write_record(&CSV_HEADER).unwrap();
        wtr.write_record(&rec).unwrap();
        let text = String::from_utf8(wtr.into_inner().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "buyer,seller,schedule,method,rev_apx,err,opt_rev,err,opt_surplus,err,ratio_rev,ratio_surplus"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("\"uniform:0,1\",\"uniform:0,1\",\"affine:2,1\","));
        assert!(row.contains("2.08333333e-2"));
        let j = r.to_json("uniform:0,1", "uniform:0,1", "affine:2,1");
        assert_eq!(j["schedule"], "affine:2,1");
        assert!((j["ratio_surplus"].as_f64().unwrap() - 8.0).abs() < 1e-6);
        assert_eq!(j["never_trades"], false);
    }
}
