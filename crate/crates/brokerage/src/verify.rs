//! Named numerical checks for the approximation guarantees, a brute-force
//! search over proper affine schedules, and the shrinking-delta experiment.
//!
//! Every check reports a [`TheoremCheck`]: the claimed bound, the observed
//! value, and an explicit margin. A check passes iff
//! `observed <= bound + margin`. Margins default to
//! `max(1e-6, 10 x propagated numerical error)`; the two revenue-recovery
//! checks ([`check_optimal_fee`], [`check_ln13`]) use a 1e-4 floor instead
//! because the affine construction leaves the top cost type a genuine
//! boundary rent of that order on unbounded buyers.

use std::cell::RefCell;
use std::f64::consts::E;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::dist::{Distribution, DistError, DEFAULT_CHECK_GRID, DEFAULT_RESOLUTION};
use crate::eval::{
    expected_fee_revenue, expected_max_surplus, expected_myerson_revenue, fmt_sig,
    rev_apx_uniform_closed_form, Estimate, EvalError, EvalMethod,
};
use crate::mech::{
    bne_affine, ln13_affine_schedule, mhr_constant_schedule, optimal_fee_schedule,
    optimal_price_grid, optimal_strategy, thm1_schedule, FeeSchedule, MechError,
    DEFAULT_PRICE_GRID,
};
use crate::num;

/// Grid resolution of the proper-schedule search: alpha steps; the beta axis
/// gets `2 * steps - 1`.
pub const DEFAULT_GRID_STEPS: usize = 101;

const MARGIN_FLOOR: f64 = 1e-6;
const RECOVERY_FLOOR: f64 = 1e-4;
const REFINE_STEP: f64 = 1e-4;

pub const CHECK_CSV_HEADER: [&str; 6] = ["name", "bound", "observed", "margin", "pass", "fixtures"];

#[derive(Debug, Clone, PartialEq)]
pub enum VerifyError {
    BadParameter(String),
    /// A precondition of the theorem does not hold for the supplied pair;
    /// the check does not apply rather than fail.
    Skipped(String),
    /// A cross-mechanism invariant broke (e.g. a fee schedule earning more
    /// than the optimal benchmark), pointing at a numerical defect.
    Inconsistent(String),
    Eval(EvalError),
    Mech(MechError),
    Dist(DistError),
}

impl fmt::Display for VerifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyError::BadParameter(m) => write!(f, "bad parameter: {m}"),
            VerifyError::Skipped(m) => write!(f, "check skipped: {m}"),
            VerifyError::Inconsistent(m) => write!(f, "consistency violation: {m}"),
            VerifyError::Eval(e) => write!(f, "{e}"),
            VerifyError::Mech(e) => write!(f, "{e}"),
            VerifyError::Dist(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for VerifyError {}

impl From<EvalError> for VerifyError {
    fn from(e: EvalError) -> Self {
        VerifyError::Eval(e)
    }
}

impl From<MechError> for VerifyError {
    fn from(e: MechError) -> Self {
        VerifyError::Mech(e)
    }
}

impl From<DistError> for VerifyError {
    fn from(e: DistError) -> Self {
        VerifyError::Dist(e)
    }
}

/// One named bound check with its evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremCheck {
    pub name: String,
    pub bound: f64,
    pub observed: f64,
    pub margin: f64,
    pub pass: bool,
    pub fixtures: String,
}

impl TheoremCheck {
    pub fn new(
        name: impl Into<String>,
        bound: f64,
        observed: f64,
        margin: f64,
        fixtures: impl Into<String>,
    ) -> Self {
        let pass = observed <= bound + margin;
        TheoremCheck { name: name.into(), bound, observed, margin, pass, fixtures: fixtures.into() }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "name": self.name,
            "bound": self.bound,
            "observed": self.observed,
            "margin": self.margin,
            "pass": self.pass,
            "fixtures": self.fixtures,
        })
    }

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.name.clone(),
            fmt_sig(self.bound),
            fmt_sig(self.observed),
            fmt_sig(self.margin),
            self.pass.to_string(),
            self.fixtures.clone(),
        ]
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {}: observed {} bound {} margin {} -- {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            fmt_sig(self.observed),
            fmt_sig(self.bound),
            fmt_sig(self.margin),
            self.fixtures
        )
    }
}

fn margin_for(errors: &[f64]) -> f64 {
    let total: f64 = errors.iter().sum();
    (10.0 * total).max(MARGIN_FLOOR)
}

/// First-order error propagation for `num / den`, `den.value > 0`.
fn ratio_with_error(num: Estimate, den: Estimate) -> (f64, f64) {
    let r = num.value / den.value;
    let e = (num.error + r.abs() * den.error) / den.value;
    (r, e)
}

/// Revenue and surplus ratio bounds for a buyer whose virtual value has
/// slope `alpha`: `alpha^{alpha/(alpha-1)}` and `alpha^{(alpha+1)/(alpha-1)}`,
/// continuously extended to `e` and `e^2` at `alpha = 1`.
///
/// Both follow from the survival identity `S(x) = (w(x)/beta)^{1/(alpha-1)}`
/// and the equilibrium condition `phi_B(P) = (c + beta)/alpha`, which give
/// the conditional revenue `w(c)^{alpha/(alpha-1)} / (alpha^{2alpha/(alpha-1)}
/// beta^{1/(alpha-1)})` at cost `c`. The surplus factor is a pointwise
/// identity, so it binds for every seller; the revenue factor binds exactly
/// when the seller's information rent vanishes and is slack otherwise.
pub fn affine_virtual_bounds(alpha: f64) -> (f64, f64) {
    if (alpha - 1.0).abs() <= 1e-9 {
        (E, E * E)
    } else {
        (alpha.powf(alpha / (alpha - 1.0)), alpha.powf((alpha + 1.0) / (alpha - 1.0)))
    }
}

/// Approximation guarantee of the closed-form schedule for affine-virtual
/// buyers: the optimal revenue and surplus exceed the schedule's revenue by
/// at most the [`affine_virtual_bounds`] factors. Returns the revenue check
/// and the surplus check. Requires a positive fee intercept; the guarantee
/// has no content otherwise and the pair is reported as skipped.
pub fn check_main1(
    buyer: &Distribution,
    seller: &Distribution,
    method: &EvalMethod,
) -> Result<[TheoremCheck; 2], VerifyError> {
    let w = thm1_schedule(buyer)?;
    let (alpha, beta) = w.as_affine().expect("closed-form schedules are affine");
    if !(beta > 0.0) {
        return Err(VerifyError::Skipped(format!(
            "needs a positive fee intercept, schedule for {buyer} has beta = {beta}"
        )));
    }
    if !seller.is_regular_seller(DEFAULT_CHECK_GRID) {
        return Err(VerifyError::Skipped(format!("seller {seller} fails the regularity check")));
    }
    let strategy = bne_affine(buyer, alpha, beta)?;
    let rev = expected_fee_revenue(buyer, seller, &w, &strategy, method)?;
    let opt = expected_myerson_revenue(buyer, seller, method)?;
    let sur = expected_max_surplus(buyer, seller, method)?;
    if rev.value <= 0.0 {
        return Err(VerifyError::Skipped(format!(
            "schedule {w} never trades against seller {seller}"
        )));
    }
    let (ratio_rev, err_rev) = ratio_with_error(opt, rev);
    let (ratio_sur, err_sur) = ratio_with_error(sur, rev);
    let (bound_rev, bound_sur) = affine_virtual_bounds(alpha);
    // The surplus bound is an identity, so it binds exactly; reported
    // rule-difference errors can undershoot the requested tolerance, so
    // propagate the tolerance through the ratio as well.
    let tol_err = |ratio: f64| match method {
        EvalMethod::Quadrature { abs_tol } => abs_tol * (1.0 + ratio) / rev.value,
        EvalMethod::MonteCarlo { .. } => 0.0,
    };
    let fixtures = format!(
        "buyer {buyer} seller {seller} schedule {w} rev {} opt {} surplus {}",
        fmt_sig(rev.value),
        fmt_sig(opt.value),
        fmt_sig(sur.value)
    );
    Ok([
        TheoremCheck::new(
            "main1-revenue",
            bound_rev,
            ratio_rev,
            margin_for(&[err_rev, tol_err(ratio_rev)]),
            &fixtures,
        ),
        TheoremCheck::new(
            "main1-surplus",
            bound_sur,
            ratio_sur,
            margin_for(&[err_sur, tol_err(ratio_sur)]),
            fixtures,
        ),
    ])
}

/// Three-approximation for the uniform buyer: the better of the schedules
/// `affine:2,1` and `constant:(1-y)/2`, with `y` the cost whose virtual cost
/// reaches 1 (capped at the top of the support), earns at least a third of
/// the optimal revenue against any regular seller.
pub fn check_unif_3approx(
    seller: &Distribution,
    method: &EvalMethod,
) -> Result<TheoremCheck, VerifyError> {
    let buyer = Distribution::uniform(0.0, 1.0)?;
    if !seller.is_regular_seller(DEFAULT_CHECK_GRID) {
        return Err(VerifyError::Skipped(format!("seller {seller} fails the regularity check")));
    }
    let sg = seller.grid_support();
    let c_top = if seller.support().hi.is_finite() { seller.support().hi } else { sg.hi };
    let inset = 1e-9 * sg.width().max(1e-9);
    let phi_lo = seller.virtual_cost(sg.lo + inset)?;
    let y = if phi_lo >= 1.0 {
        sg.lo
    } else {
        match seller.inverse_virtual_cost(1.0) {
            Ok(c) => c.min(c_top),
            Err(DistError::OutOfRange { .. }) => c_top,
            Err(e) => return Err(e.into()),
        }
    };
    let k2 = ((1.0 - y) / 2.0).max(0.0);
    let w1 = FeeSchedule::Affine { alpha: 2.0, beta: 1.0 };
    let w2 = FeeSchedule::Affine { alpha: 1.0, beta: k2 };
    let s1 = bne_affine(&buyer, 2.0, 1.0)?;
    let s2 = bne_affine(&buyer, 1.0, k2)?;
    let rev1 = expected_fee_revenue(&buyer, seller, &w1, &s1, method)?;
    let rev2 = expected_fee_revenue(&buyer, seller, &w2, &s2, method)?;
    let opt = expected_myerson_revenue(&buyer, seller, method)?;
    let best = rev1.value.max(rev2.value);
    let observed = opt.value / 3.0 - best;
    let margin = margin_for(&[opt.error / 3.0, rev1.error.max(rev2.error)]);
    let fixtures = format!(
        "seller {seller} y {} candidates {} {} opt {}",
        fmt_sig(y),
        fmt_sig(rev1.value),
        fmt_sig(rev2.value),
        fmt_sig(opt.value)
    );
    Ok(TheoremCheck::new("unif3", 0.0, observed, margin, fixtures))
}

/// Monopoly constant fee under monotone hazard rates: the optimal surplus
/// (and so the optimal revenue) exceeds the fee revenue by a factor of at
/// most `e^2`.
pub fn check_mhr(
    buyer: &Distribution,
    seller: &Distribution,
    method: &EvalMethod,
) -> Result<TheoremCheck, VerifyError> {
    let w = match mhr_constant_schedule(buyer, seller, DEFAULT_RESOLUTION) {
        Ok(w) => w,
        Err(MechError::Precondition(m)) => return Err(VerifyError::Skipped(m)),
        Err(e) => return Err(e.into()),
    };
    let (_, k) = w.as_affine().expect("constant schedules are affine");
    let strategy = match bne_affine(buyer, 1.0, k) {
        Ok(s) => s,
        Err(MechError::Precondition(m)) => return Err(VerifyError::Skipped(m)),
        Err(e) => return Err(e.into()),
    };
    let rev = expected_fee_revenue(buyer, seller, &w, &strategy, method)?;
    let sur = expected_max_surplus(buyer, seller, method)?;
    if rev.value <= 0.0 {
        return Err(VerifyError::Skipped(format!(
            "the monopoly fee {} never trades for buyer {buyer} seller {seller}",
            fmt_sig(k)
        )));
    }
    let (ratio, err) = ratio_with_error(sur, rev);
    let fixtures = format!(
        "buyer {buyer} seller {seller} fee {} rev {} surplus {}",
        fmt_sig(k),
        fmt_sig(rev.value),
        fmt_sig(sur.value)
    );
    Ok(TheoremCheck::new("mhr", E * E, ratio, margin_for(&[err]), fixtures))
}

/// Prior-independence on the unit interval: against every seller supported
/// in [0, 1], the uniform buyer's schedule `affine:2,1` earns exactly an
/// eighth of the optimal surplus, and more generally `affine:a,a-1` has
/// surplus ratio `2a^2/(a-1)` (equal to 9 at both a = 3/2 and a = 3). The
/// observed value is the largest deviation from those identities.
pub fn check_prior_independent_exact8(
    seller: &Distribution,
    method: &EvalMethod,
) -> Result<TheoremCheck, VerifyError> {
    let s = seller.support();
    if s.lo < -1e-9 || s.hi > 1.0 + 1e-9 {
        return Err(VerifyError::BadParameter(format!(
            "seller support [{}, {}] must lie within [0, 1]",
            s.lo, s.hi
        )));
    }
    let buyer = Distribution::uniform(0.0, 1.0)?;
    let sur = expected_max_surplus(&buyer, seller, method)?;
    let rev = rev_apx_uniform_closed_form(2.0, 1.0, seller, method)?;
    let mut observed = (sur.value - 8.0 * rev.value).abs();
    let mut worst_err = sur.error + 8.0 * rev.error;
    let mut ratios = Vec::new();
    for alpha in [1.5, 3.0] {
        let r = rev_apx_uniform_closed_form(alpha, alpha - 1.0, seller, method)?;
        if r.value <= 0.0 {
            return Err(VerifyError::Skipped(format!(
                "schedule affine:{alpha},{} never trades against seller {seller}",
                alpha - 1.0
            )));
        }
        let (ratio, err) = ratio_with_error(sur, r);
        let expected = 2.0 * alpha * alpha / (alpha - 1.0);
        observed = observed.max((ratio - expected).abs());
        worst_err = worst_err.max(err);
        ratios.push(format!("ratio({alpha}) {}", fmt_sig(ratio)));
    }
    let fixtures = format!(
        "seller {seller} surplus {} rev(2,1) {} {}",
        fmt_sig(sur.value),
        fmt_sig(rev.value),
        ratios.join(" ")
    );
    Ok(TheoremCheck::new("exact8", 0.0, observed, margin_for(&[worst_err]), fixtures))
}

/// Outcome of the brute-force search over proper affine schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProperSearchResult {
    pub best_alpha: f64,
    pub best_beta: f64,
    pub best_revenue: f64,
    /// Optimal surplus over the best proper revenue.
    pub surplus_gap: f64,
    /// Optimal revenue over the best proper revenue.
    pub revenue_gap: f64,
    /// No proper schedule trades; both gaps are infinite.
    pub no_trade: bool,
}

/// Grid search over proper schedules `alpha in [0, 1]`, `beta in [0, sup V]`
/// followed by coordinate refinement down to parameter steps of 1e-4.
///
/// Also enforces the optimality invariant: no proper schedule evaluated
/// during the search may earn more than the optimal benchmark (up to
/// numerical error); a violation reports [`VerifyError::Inconsistent`].
pub fn best_proper_schedule(
    buyer: &Distribution,
    seller: &Distribution,
    grid_steps: usize,
) -> Result<ProperSearchResult, VerifyError> {
    if grid_steps < 2 {
        return Err(VerifyError::BadParameter("grid needs at least 2 steps per axis".into()));
    }
    if !buyer.is_regular_buyer(DEFAULT_CHECK_GRID) {
        return Err(VerifyError::BadParameter(format!("buyer {buyer} fails the regularity check")));
    }
    let beta_steps = 2 * grid_steps - 1;
    let beta_max = buyer.grid_support().hi;
    let quad = EvalMethod::Quadrature { abs_tol: 1e-9 };
    let fast = matches!(buyer, Distribution::Uniform(u) if u.lo == 0.0 && u.hi == 1.0);
    let failure: RefCell<Option<EvalError>> = RefCell::new(None);
    let revenue = |alpha: f64, beta: f64| -> f64 {
        if alpha <= 0.0 {
            // w(P) = P + beta leaves the seller no margin at any price.
            return 0.0;
        }
        let r = if fast {
            rev_apx_uniform_closed_form(alpha, beta, seller, &quad).map(|e| e.value)
        } else {
            bne_affine(buyer, alpha, beta).map_err(EvalError::from).and_then(|s| {
                let w = FeeSchedule::Affine { alpha, beta };
                expected_fee_revenue(buyer, seller, &w, &s, &quad).map(|e| e.value)
            })
        };
        match r {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NEG_INFINITY
            }
        }
    };

    let mut best = (0.0, 0.0, 0.0f64);
    for i in 0..grid_steps {
        let a = i as f64 / (grid_steps - 1) as f64;
        for j in 0..beta_steps {
            let b = beta_max * j as f64 / (beta_steps - 1) as f64;
            let r = revenue(a, b);
            if r > best.2 {
                best = (a, b, r);
            }
        }
    }

    let (mut a, mut b, _) = best;
    let mut da = 1.0 / (grid_steps - 1) as f64;
    let mut db = beta_max / (beta_steps - 1) as f64;
    let tol_a = REFINE_STEP;
    let tol_b = REFINE_STEP * beta_max.max(1.0);
    loop {
        let (na, _) =
            num::golden_section_max(|x| revenue(x, b), (a - da).max(0.0), (a + da).min(1.0), tol_a * 0.25);
        a = na;
        let (nb, _) = num::golden_section_max(
            |x| revenue(a, x),
            (b - db).max(0.0),
            (b + db).min(beta_max),
            tol_b * 0.25,
        );
        b = nb;
        if da <= tol_a && db <= tol_b {
            break;
        }
        da = (da * 0.5).max(tol_a);
        db = (db * 0.5).max(tol_b);
    }
    let refined = revenue(a, b);
    let (best_alpha, best_beta, best_revenue) =
        if refined >= best.2 { (a, b, refined) } else { best };
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e.into());
    }

    let opt_rev = expected_myerson_revenue(buyer, seller, &quad)?;
    let opt_surplus = expected_max_surplus(buyer, seller, &quad)?;
    if best_revenue <= 0.0 {
        return Ok(ProperSearchResult {
            best_alpha,
            best_beta,
            best_revenue: 0.0,
            surplus_gap: f64::INFINITY,
            revenue_gap: f64::INFINITY,
            no_trade: true,
        });
    }
    if best_revenue > opt_rev.value + 1e-6 + 10.0 * opt_rev.error {
        return Err(VerifyError::Inconsistent(format!(
            "proper schedule affine:{best_alpha},{best_beta} earns {} against the optimal {}",
            fmt_sig(best_revenue),
            fmt_sig(opt_rev.value)
        )));
    }
    Ok(ProperSearchResult {
        best_alpha,
        best_beta,
        best_revenue,
        surplus_gap: opt_surplus.value / best_revenue,
        revenue_gap: opt_rev.value / best_revenue,
        no_trade: false,
    })
}

/// One row of the shrinking-delta experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdeltaRow {
    pub delta: f64,
    pub max_surplus: f64,
    pub closed_form_surplus: f64,
    pub best_proper_revenue: f64,
    pub surplus_gap: f64,
    pub revenue_gap: f64,
}

/// Shrinking-delta experiment for the uniform buyer: for each delta the
/// crafted seller's maximal surplus must match `delta ln(1/delta)/(2(1-delta))`
/// within 1e-5, the surplus gap of the best proper schedule must grow as
/// delta shrinks, and the revenue gap must stay above an eighth of the
/// surplus gap.
pub fn gdelta_experiment(
    deltas: &[f64],
    method: &EvalMethod,
) -> Result<(Vec<GdeltaRow>, Vec<TheoremCheck>), VerifyError> {
    if deltas.is_empty() {
        return Err(VerifyError::BadParameter("need at least one delta".into()));
    }
    if deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(VerifyError::BadParameter("deltas must lie in (0, 1)".into()));
    }
    let buyer = Distribution::uniform(0.0, 1.0)?;
    let mut rows = Vec::with_capacity(deltas.len());
    let mut surplus_dev: f64 = 0.0;
    let mut surplus_err: f64 = 0.0;
    for &delta in deltas {
        let seller = Distribution::worst_case_seller(delta)?;
        let sur = expected_max_surplus(&buyer, &seller, method)?;
        let cf = delta * (1.0 / delta).ln() / (2.0 * (1.0 - delta));
        let search = best_proper_schedule(&buyer, &seller, DEFAULT_GRID_STEPS)?;
        surplus_dev = surplus_dev.max((sur.value - cf).abs());
        surplus_err = surplus_err.max(sur.error);
        rows.push(GdeltaRow {
            delta,
            max_surplus: sur.value,
            closed_form_surplus: cf,
            best_proper_revenue: search.best_revenue,
            surplus_gap: search.surplus_gap,
            revenue_gap: search.revenue_gap,
        });
    }
    let fixtures = rows
        .iter()
        .map(|r| {
            format!("delta {} sg {} rg {}", r.delta, fmt_sig(r.surplus_gap), fmt_sig(r.revenue_gap))
        })
        .collect::<Vec<_>>()
        .join("; ");
    // Strict growth: every smaller delta must have the strictly larger
    // surplus gap, checked over all pairs.
    let mut growth_violation = f64::NEG_INFINITY;
    for i in 0..rows.len() {
        for j in 0..rows.len() {
            if rows[i].delta > rows[j].delta {
                growth_violation = growth_violation.max(rows[i].surplus_gap - rows[j].surplus_gap);
            }
        }
    }
    if !growth_violation.is_finite() {
        growth_violation = 0.0;
    }
    let rg_violation = rows
        .iter()
        .map(|r| r.surplus_gap / 8.0 - r.revenue_gap)
        .fold(f64::NEG_INFINITY, f64::max);
    let checks = vec![
        TheoremCheck::new("gdelta-surplus", 1e-5, surplus_dev, margin_for(&[surplus_err]), &fixtures),
        TheoremCheck::new("gdelta-monotone", 0.0, growth_violation, MARGIN_FLOOR, &fixtures),
        TheoremCheck::new("gdelta-rg", 0.0, rg_violation, MARGIN_FLOOR, fixtures),
    ];
    Ok((rows, checks))
}

/// The tabulated revenue-optimal schedule recovers the optimal revenue in
/// its induced equilibrium.
pub fn check_optimal_fee(
    buyer: &Distribution,
    seller: &Distribution,
    method: &EvalMethod,
) -> Result<TheoremCheck, VerifyError> {
    let grid = optimal_price_grid(buyer, seller, DEFAULT_PRICE_GRID)?;
    let w = optimal_fee_schedule(buyer, seller, &grid)?;
    let sg = seller.grid_support();
    let costs: Vec<f64> = (0..DEFAULT_PRICE_GRID)
        .map(|i| sg.lo + sg.width() * i as f64 / (DEFAULT_PRICE_GRID - 1) as f64)
        .collect();
    let strategy = optimal_strategy(buyer, seller, &costs)?;
    let rev = expected_fee_revenue(buyer, seller, &w, &strategy, method)?;
    let opt = expected_myerson_revenue(buyer, seller, method)?;
    let observed = (rev.value - opt.value).abs();
    let margin = (10.0 * (rev.error + opt.error)).max(RECOVERY_FLOOR);
    let fixtures = format!(
        "buyer {buyer} seller {seller} rev {} opt {}",
        fmt_sig(rev.value),
        fmt_sig(opt.value)
    );
    Ok(TheoremCheck::new("optfee", 0.0, observed, margin, fixtures))
}

/// The affine schedule `affine:1/(1+xi),(1/lambda+xi*mu)/(1+xi)` recovers the
/// optimal revenue against the reverse-GPD seller with those parameters, up
/// to the top type's boundary rent.
pub fn check_ln13(
    buyer: &Distribution,
    xi: f64,
    lambda: f64,
    mu: f64,
    method: &EvalMethod,
) -> Result<TheoremCheck, VerifyError> {
    let w = ln13_affine_schedule(xi, lambda, mu)?;
    let seller = Distribution::rgpd(mu, lambda, xi)?;
    let (alpha, beta) = w.as_affine().expect("the construction is affine");
    let strategy = bne_affine(buyer, alpha, beta)?;
    let rev = expected_fee_revenue(buyer, &seller, &w, &strategy, method)?;
    let opt = expected_myerson_revenue(buyer, &seller, method)?;
    let observed = (rev.value - opt.value).abs();
    let margin = (10.0 * (rev.error + opt.error)).max(RECOVERY_FLOOR);
    let fixtures = format!(
        "buyer {buyer} seller {seller} schedule {w} rev {} opt {}",
        fmt_sig(rev.value),
        fmt_sig(opt.value)
    );
    Ok(TheoremCheck::new("ln13", 0.0, observed, margin, fixtures))
}

/// Maxima of iid MHR draws stay MHR: one boolean check per `n`, then the
/// monopoly-fee bound for the largest effective buyer when its
/// preconditions verify (the knot test on tabulated difference laws can
/// decline near-flat hazards; the follow-up is skipped in that case).
pub fn check_max_iid_mhr(
    buyer: &Distribution,
    seller: &Distribution,
    n_list: &[usize],
    method: &EvalMethod,
) -> Result<Vec<TheoremCheck>, VerifyError> {
    if n_list.is_empty() {
        return Err(VerifyError::BadParameter("need at least one n".into()));
    }
    if !buyer.is_mhr(DEFAULT_CHECK_GRID) {
        return Err(VerifyError::Skipped(format!("buyer {buyer} fails the MHR check")));
    }
    let mut checks = Vec::new();
    let mut top: Option<Distribution> = None;
    for &n in n_list {
        let eff = buyer.max_of_iid(n)?;
        let ok = eff.is_mhr(DEFAULT_CHECK_GRID);
        checks.push(TheoremCheck::new(
            format!("maxiid-n{n}"),
            0.0,
            if ok { 0.0 } else { 1.0 },
            MARGIN_FLOOR,
            format!("buyer {buyer} n {n}"),
        ));
        top = Some(eff);
    }
    if let Some(eff) = top {
        match check_mhr(&eff, seller, method) {
            Ok(mut c) => {
                c.name = "maxiid-mhr".into();
                checks.push(c);
            }
            Err(VerifyError::Skipped(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(checks)
}

/// Deterministic staircase seller with nonincreasing density levels, which
/// makes the virtual cost nondecreasing by construction. Distinct
/// `(seed, index)` pairs give independent draws.
pub fn random_regular_staircase(
    seed: u64,
    index: u64,
    lo: f64,
    hi: f64,
    pieces: usize,
) -> Result<Distribution, VerifyError> {
    if !(hi > lo) || pieces == 0 {
        return Err(VerifyError::BadParameter("need hi > lo and at least one piece".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut levels: Vec<f64> =
        (0..pieces).map(|_| 0.05 - (1.0 - rng.gen::<f64>()).max(1e-12).ln()).collect();
    levels.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let total: f64 = levels.iter().sum();
    let mut grid = Vec::with_capacity(pieces + 1);
    let mut cdf = Vec::with_capacity(pieces + 1);
    let mut acc = 0.0;
    grid.push(lo);
    cdf.push(0.0);
    for (i, level) in levels.iter().enumerate() {
        acc += level / total;
        grid.push(lo + (hi - lo) * (i + 1) as f64 / pieces as f64);
        cdf.push(acc.min(1.0));
    }
    Ok(Distribution::tabulated(grid, cdf)?)
}

/// Deterministic staircase with arbitrary positive mass per piece on [0, 1];
/// no shape constraint beyond being a distribution.
pub fn random_staircase_seller(
    seed: u64,
    index: u64,
    pieces: usize,
) -> Result<Distribution, VerifyError> {
    if pieces == 0 {
        return Err(VerifyError::BadParameter("need at least one piece".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1 << 32));
    let masses: Vec<f64> = (0..pieces).map(|_| rng.gen::<f64>() + 0.02).collect();
    let total: f64 = masses.iter().sum();
    let mut grid = Vec::with_capacity(pieces + 1);
    let mut cdf = Vec::with_capacity(pieces + 1);
    let mut acc = 0.0;
    grid.push(0.0);
    cdf.push(0.0);
    for (i, mass) in masses.iter().enumerate() {
        acc += mass / total;
        grid.push((i + 1) as f64 / pieces as f64);
        cdf.push(acc.min(1.0));
    }
    Ok(Distribution::tabulated(grid, cdf)?)
}
