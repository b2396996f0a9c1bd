//! Value and cost distributions.
//!
//! Every query other modules need lives here: densities, CDFs, quantiles,
//! hazard rates, the virtual value `phi_B(v) = v - (1-F(v))/f(v)` and virtual
//! cost `phi_S(c) = c + G(c)/g(c)`, monopoly prices, regularity and
//! monotone-hazard-rate predicates, and the two law transforms (difference of
//! independent draws, maximum of iid draws) that the multi-buyer and MHR
//! results require.
//!
//! Families: uniform, generalized Pareto (location mu, scale lambda > 0,
//! shape xi >= 0; xi = 0 is the exponential tail, xi = 1 the uniform),
//! reverse generalized Pareto (the law of `c` when `-c` is generalized
//! Pareto), the power family `F(v) = 1 - (1 - v/vbar)^a`, the worst-case
//! seller family `G_delta`, and tabulated laws with piecewise-linear CDFs.

use crate::num;
use rand::Rng;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Grid size for regularity / MHR monotonicity checks on analytic families.
pub const DEFAULT_CHECK_GRID: usize = 1000;

/// Grid size for tabulated transform outputs (convolution, max of iid).
pub const DEFAULT_RESOLUTION: usize = 4096;

/// Tail mass discarded when an unbounded support is truncated for grid work.
pub const TRUNCATION_MASS: f64 = 1e-8;

/// Slack for monotonicity predicates: a decrease smaller than this is noise.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Tabulated hazard checks stop where 1 - F drops below this: beyond it the
/// knot increments of the stored CDF lose too many bits to cancellation for a
/// hazard comparison at `MONOTONE_SLACK` to mean anything.
const HAZARD_TAIL_CUT: f64 = 1e-4;

const MONOPOLY_SCAN: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum DistError {
    BadParameter(String),
    /// Argument outside the operation's domain (for example a quantile level
    /// outside [0,1]).
    OutOfDomain { what: &'static str, value: f64 },
    /// Hazard or virtual preference queried where the density vanishes or
    /// the CDF has already reached 1.
    Singular { at: f64 },
    /// Inverse-virtual target outside the attained range.
    OutOfRange { target: f64 },
    /// The virtual preference is not monotone where the inverse was taken.
    NonMonotone { target: f64 },
    BadTable(String),
    Io(String),
    Num(num::NumError),
}

impl fmt::Display for DistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistError::BadParameter(m) => write!(f, "bad parameter: {m}"),
            DistError::OutOfDomain { what, value } => {
                write!(f, "{what} out of domain: {value}")
            }
            DistError::Singular { at } => write!(f, "singular query at x={at}"),
            DistError::OutOfRange { target } => {
                write!(f, "inverse-virtual target {target} out of range")
            }
            DistError::NonMonotone { target } => {
                write!(f, "virtual preference not monotone near target {target}")
            }
            DistError::BadTable(m) => write!(f, "bad table: {m}"),
            DistError::Io(m) => write!(f, "io: {m}"),
            DistError::Num(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl std::error::Error for DistError {}

impl From<num::NumError> for DistError {
    fn from(e: num::NumError) -> Self {
        DistError::Num(e)
    }
}

/// Closed support of a distribution; `hi` may be `f64::INFINITY` and, for
/// reverse generalized Pareto with xi = 0, `lo` may be `f64::NEG_INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedPareto {
    pub mu: f64,
    pub lambda: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReverseGeneralizedPareto {
    pub mu: f64,
    pub lambda: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDistribution {
    pub a: f64,
    pub vbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCaseSeller {
    pub delta: f64,
}

/// Piecewise-linear CDF over a strictly increasing grid; the density is the
/// piecewise-constant derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDistribution {
    grid: Vec<f64>,
    cdf_values: Vec<f64>,
    label: Option<String>,
}

impl GeneralizedPareto {
    fn support(&self) -> Support {
        if self.xi > 0.0 {
            Support { lo: self.mu, hi: self.mu + 1.0 / (self.xi * self.lambda) }
        } else {
            Support { lo: self.mu, hi: f64::INFINITY }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let s = self.support();
        if x <= s.lo {
            return 0.0;
        }
        if x >= s.hi {
            return 1.0;
        }
        if self.xi > 0.0 {
            1.0 - (1.0 - self.xi * self.lambda * (x - self.mu)).powf(1.0 / self.xi)
        } else {
            1.0 - (-self.lambda * (x - self.mu)).exp()
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        let s = self.support();
        if x < s.lo || x > s.hi {
            return 0.0;
        }
        if self.xi > 0.0 {
            let u = (1.0 - self.xi * self.lambda * (x - self.mu)).max(0.0);
            self.lambda * u.powf(1.0 / self.xi - 1.0)
        } else {
            self.lambda * (-self.lambda * (x - self.mu)).exp()
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if self.xi > 0.0 {
            self.mu + (1.0 - (1.0 - p).powf(self.xi)) / (self.xi * self.lambda)
        } else if p >= 1.0 {
            f64::INFINITY
        } else {
            self.mu - (1.0 - p).ln() / self.lambda
        }
    }
}

impl WorstCaseSeller {
    fn hi(&self) -> f64 {
        1.0 - self.delta.sqrt()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.hi() {
            return 1.0;
        }
        let d = self.delta;
        (d / (1.0 - d)) * (1.0 / ((1.0 - x) * (1.0 - x)) - 1.0)
    }

    fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=self.hi()).contains(&x) {
            return 0.0;
        }
        let d = self.delta;
        2.0 * d / ((1.0 - d) * (1.0 - x).powi(3))
    }

    fn quantile(&self, p: f64) -> f64 {
        let d = self.delta;
        1.0 - (1.0 + p * (1.0 - d) / d).powf(-0.5)
    }
}

impl TabulatedDistribution {
    /// Builds a tabulated law after validating the grid and CDF values.
    ///
    /// The first CDF value must be 0 within 1e-9 and the last 1 within 1e-6
    /// (transform outputs carry quadrature and truncation error of that
    /// order); both are then snapped exactly. Decreases up to 1e-12 are
    /// treated as jitter and flattened.
    pub fn new(
        grid: Vec<f64>,
        cdf_values: Vec<f64>,
        label: Option<String>,
    ) -> Result<Self, DistError> {
        if grid.len() < 2 || grid.len() != cdf_values.len() {
            return Err(DistError::BadTable(format!(
                "need matching grid/cdf of length >= 2, got {} and {}",
                grid.len(),
                cdf_values.len()
            )));
        }
        if grid.iter().any(|x| !x.is_finite()) || cdf_values.iter().any(|p| !p.is_finite()) {
            return Err(DistError::BadTable("non-finite entry".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DistError::BadTable("grid not strictly increasing".into()));
        }
        let mut cdf = cdf_values;
        if cdf[0].abs() > 1e-9 {
            return Err(DistError::BadTable(format!("cdf starts at {}, not 0", cdf[0])));
        }
        let last = *cdf.last().unwrap();
        if (last - 1.0).abs() > 1e-6 {
            return Err(DistError::BadTable(format!("cdf ends at {last}, not 1")));
        }
        cdf[0] = 0.0;
        *cdf.last_mut().unwrap() = 1.0;
        for i in 1..cdf.len() {
            if cdf[i] < cdf[i - 1] {
                if cdf[i - 1] - cdf[i] > 1e-12 {
                    return Err(DistError::BadTable(format!(
                        "cdf decreases at index {i}: {} -> {}",
                        cdf[i - 1],
                        cdf[i]
                    )));
                }
                cdf[i] = cdf[i - 1];
            }
            if cdf[i] > 1.0 {
                cdf[i] = 1.0;
            }
        }
        Ok(TabulatedDistribution { grid, cdf_values: cdf, label })
    }

    /// Reads a CSV table with header `x,cdf`.
    pub fn from_csv(path: &Path) -> Result<Self, DistError> {
        let mut rdr = csv::Reader::from_path(path)
            .map_err(|e| DistError::Io(format!("{}: {e}", path.display())))?;
        {
            let headers = rdr.headers().map_err(|e| DistError::Io(e.to_string()))?;
            let cols: Vec<&str> = headers.iter().map(str::trim).collect();
            if cols != ["x", "cdf"] {
                return Err(DistError::BadTable(format!(
                    "expected header x,cdf got {}",
                    cols.join(",")
                )));
            }
        }
        let mut grid = Vec::new();
        let mut cdf = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| DistError::Io(e.to_string()))?;
            if rec.len() != 2 {
                return Err(DistError::BadTable(format!("row with {} fields", rec.len())));
            }
            let x = f64::from_str(rec[0].trim())
                .map_err(|_| DistError::BadTable(format!("bad x value {:?}", &rec[0])))?;
            let p = f64::from_str(rec[1].trim())
                .map_err(|_| DistError::BadTable(format!("bad cdf value {:?}", &rec[1])))?;
            grid.push(x);
            cdf.push(p);
        }
        let label = Some(path.display().to_string());
        TabulatedDistribution::new(grid, cdf, label)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf_values
    }

    fn segment_of(&self, x: f64) -> usize {
        // Largest i with grid[i] <= x, clamped to a valid left endpoint.
        match self.grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.grid.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.grid.len() - 2),
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= *self.grid.last().unwrap() {
            return 1.0;
        }
        let i = self.segment_of(x);
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (p0, p1) = (self.cdf_values[i], self.cdf_values[i + 1]);
        p0 + (p1 - p0) * (x - x0) / (x1 - x0)
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < self.grid[0] || x > *self.grid.last().unwrap() {
            return 0.0;
        }
        let i = self.segment_of(x);
        (self.cdf_values[i + 1] - self.cdf_values[i]) / (self.grid[i + 1] - self.grid[i])
    }

    fn quantile(&self, p: f64) -> f64 {
        // Leftmost x with F(x) >= p, so flat stretches resolve to their start.
        let idx = self.cdf_values.partition_point(|&v| v < p);
        if idx == 0 {
            return self.grid[0];
        }
        let i = idx - 1;
        let (p0, p1) = (self.cdf_values[i], self.cdf_values[i + 1]);
        if p1 <= p0 {
            return self.grid[i + 1];
        }
        self.grid[i] + (self.grid[i + 1] - self.grid[i]) * (p - p0) / (p1 - p0)
    }

    /// Hazard sampled at grid knots (right-segment mean density over the
    /// exact knot CDF), nondecreasing within [`MONOTONE_SLACK`]. Knots where
    /// 1 - F < 1e-4 are excluded: the stored CDF cannot resolve hazards there.
    fn knot_mhr(&self) -> bool {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..self.grid.len() - 1 {
            let surv = 1.0 - self.cdf_values[i];
            if surv < HAZARD_TAIL_CUT {
                break;
            }
            let dens = (self.cdf_values[i + 1] - self.cdf_values[i])
                / (self.grid[i + 1] - self.grid[i]);
            let h = dens / surv;
            if h < prev - MONOTONE_SLACK {
                return false;
            }
            prev = h;
        }
        true
    }

    fn knot_regular(&self, seller_side: bool) -> bool {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..self.grid.len() - 1 {
            let f = self.cdf_values[i];
            if f >= 1.0 - 1e-12 {
                break;
            }
            let dens = (self.cdf_values[i + 1] - self.cdf_values[i])
                / (self.grid[i + 1] - self.grid[i]);
            if seller_side && f <= 1e-12 && dens <= 0.0 {
                // No mass yet; the virtual cost is not defined before the
                // support starts.
                continue;
            }
            let x = self.grid[i];
            let phi = if seller_side { x + f / dens } else { x - (1.0 - f) / dens };
            if phi < prev - MONOTONE_SLACK {
                return false;
            }
            prev = phi;
        }
        true
    }
}

/// A value or cost distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Uniform(Uniform),
    Gpd(GeneralizedPareto),
    Rgpd(ReverseGeneralizedPareto),
    Power(PowerDistribution),
    WorstCase(WorstCaseSeller),
    Table(TabulatedDistribution),
}

impl Distribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, DistError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(DistError::BadParameter(format!("uniform needs lo < hi, got {lo},{hi}")));
        }
        Ok(Distribution::Uniform(Uniform { lo, hi }))
    }

    pub fn exponential(lambda: f64) -> Result<Self, DistError> {
        Self::gpd(0.0, lambda, 0.0)
    }

    pub fn gpd(mu: f64, lambda: f64, xi: f64) -> Result<Self, DistError> {
        if !(mu.is_finite() && lambda.is_finite() && xi.is_finite() && lambda > 0.0 && xi >= 0.0) {
            return Err(DistError::BadParameter(format!(
                "generalized Pareto needs lambda > 0, xi >= 0, got mu={mu} lambda={lambda} xi={xi}"
            )));
        }
        Ok(Distribution::Gpd(GeneralizedPareto { mu, lambda, xi }))
    }

    pub fn rgpd(mu: f64, lambda: f64, xi: f64) -> Result<Self, DistError> {
        if !(mu.is_finite() && lambda.is_finite() && xi.is_finite() && lambda > 0.0 && xi >= 0.0) {
            return Err(DistError::BadParameter(format!(
                "reverse generalized Pareto needs lambda > 0, xi >= 0, got mu={mu} lambda={lambda} xi={xi}"
            )));
        }
        Ok(Distribution::Rgpd(ReverseGeneralizedPareto { mu, lambda, xi }))
    }

    pub fn power(a: f64, vbar: f64) -> Result<Self, DistError> {
        if !(a.is_finite() && vbar.is_finite() && a >= 1.0 && vbar > 0.0) {
            return Err(DistError::BadParameter(format!(
                "power needs a >= 1 and vbar > 0, got a={a} vbar={vbar}"
            )));
        }
        Ok(Distribution::Power(PowerDistribution { a, vbar }))
    }

    pub fn worst_case_seller(delta: f64) -> Result<Self, DistError> {
        if !(delta.is_finite() && 0.0 < delta && delta < 1.0) {
            return Err(DistError::BadParameter(format!("delta must lie in (0,1), got {delta}")));
        }
        Ok(Distribution::WorstCase(WorstCaseSeller { delta }))
    }

    pub fn tabulated(grid: Vec<f64>, cdf_values: Vec<f64>) -> Result<Self, DistError> {
        Ok(Distribution::Table(TabulatedDistribution::new(grid, cdf_values, None)?))
    }

    pub fn from_table_csv(path: &Path) -> Result<Self, DistError> {
        Ok(Distribution::Table(TabulatedDistribution::from_csv(path)?))
    }

    pub fn support(&self) -> Support {
        match self {
            Distribution::Uniform(u) => Support { lo: u.lo, hi: u.hi },
            Distribution::Gpd(g) => g.support(),
            Distribution::Rgpd(r) => {
                let inner = GeneralizedPareto { mu: r.mu, lambda: r.lambda, xi: r.xi };
                let s = inner.support();
                Support { lo: -s.hi, hi: -s.lo }
            }
            Distribution::Power(p) => Support { lo: 0.0, hi: p.vbar },
            Distribution::WorstCase(w) => Support { lo: 0.0, hi: w.hi() },
            Distribution::Table(t) => {
                Support { lo: t.grid[0], hi: *t.grid.last().unwrap() }
            }
        }
    }

    /// Support truncated to finite bounds for grid work, discarding
    /// [`TRUNCATION_MASS`] in each unbounded tail.
    pub fn grid_support(&self) -> Support {
        let s = self.support();
        let lo = if s.lo.is_finite() { s.lo } else { self.quantile(TRUNCATION_MASS).unwrap() };
        let hi = if s.hi.is_finite() {
            s.hi
        } else {
            self.quantile(1.0 - TRUNCATION_MASS).unwrap()
        };
        Support { lo, hi }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Uniform(u) => {
                if x < u.lo || x > u.hi {
                    0.0
                } else {
                    1.0 / (u.hi - u.lo)
                }
            }
            Distribution::Gpd(g) => g.pdf(x),
            Distribution::Rgpd(r) => {
                GeneralizedPareto { mu: r.mu, lambda: r.lambda, xi: r.xi }.pdf(-x)
            }
            Distribution::Power(p) => {
                if x < 0.0 || x > p.vbar {
                    0.0
                } else {
                    (p.a / p.vbar) * (1.0 - x / p.vbar).max(0.0).powf(p.a - 1.0)
                }
            }
            Distribution::WorstCase(w) => w.pdf(x),
            Distribution::Table(t) => t.pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Uniform(u) => ((x - u.lo) / (u.hi - u.lo)).clamp(0.0, 1.0),
            Distribution::Gpd(g) => g.cdf(x),
            Distribution::Rgpd(r) => {
                let s = self.support();
                if x <= s.lo {
                    0.0
                } else if x >= s.hi {
                    1.0
                } else {
                    1.0 - GeneralizedPareto { mu: r.mu, lambda: r.lambda, xi: r.xi }.cdf(-x)
                }
            }
            Distribution::Power(p) => {
                if x <= 0.0 {
                    0.0
                } else if x >= p.vbar {
                    1.0
                } else {
                    1.0 - (1.0 - x / p.vbar).powf(p.a)
                }
            }
            Distribution::WorstCase(w) => w.cdf(x),
            Distribution::Table(t) => t.cdf(x),
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DistError::OutOfDomain { what: "quantile level", value: p });
        }
        Ok(match self {
            Distribution::Uniform(u) => u.lo + p * (u.hi - u.lo),
            Distribution::Gpd(g) => g.quantile(p),
            Distribution::Rgpd(r) => {
                -GeneralizedPareto { mu: r.mu, lambda: r.lambda, xi: r.xi }.quantile(1.0 - p)
            }
            Distribution::Power(pw) => pw.vbar * (1.0 - (1.0 - p).powf(1.0 / pw.a)),
            Distribution::WorstCase(w) => w.quantile(p),
            Distribution::Table(t) => t.quantile(p),
        })
    }

    /// Survival function 1 - F(x), computed in closed form per family so the
    /// upper tail keeps full precision (`1 - cdf(x)` would cancel to roughly
    /// 1e-16 absolute, which hazard ratios amplify).
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Distribution::Uniform(u) => ((u.hi - x) / (u.hi - u.lo)).clamp(0.0, 1.0),
            Distribution::Gpd(g) => {
                let s = g.support();
                if x <= s.lo {
                    1.0
                } else if x >= s.hi {
                    0.0
                } else if g.xi > 0.0 {
                    (1.0 - g.xi * g.lambda * (x - g.mu)).powf(1.0 / g.xi)
                } else {
                    (-g.lambda * (x - g.mu)).exp()
                }
            }
            Distribution::Rgpd(r) => {
                let s = self.support();
                if x <= s.lo {
                    1.0
                } else if x >= s.hi {
                    0.0
                } else {
                    GeneralizedPareto { mu: r.mu, lambda: r.lambda, xi: r.xi }.cdf(-x)
                }
            }
            Distribution::Power(p) => {
                if x <= 0.0 {
                    1.0
                } else if x >= p.vbar {
                    0.0
                } else {
                    (1.0 - x / p.vbar).powf(p.a)
                }
            }
            Distribution::WorstCase(w) => {
                if x <= 0.0 {
                    1.0
                } else if x >= w.hi() {
                    0.0
                } else {
                    ((1.0 - w.delta / ((1.0 - x) * (1.0 - x))) / (1.0 - w.delta)).max(0.0)
                }
            }
            Distribution::Table(t) => 1.0 - t.cdf(x),
        }
    }

    /// Hazard rate f(x) / (1 - F(x)).
    pub fn hazard(&self, x: f64) -> Result<f64, DistError> {
        let surv = self.survival(x);
        if surv <= 0.0 {
            return Err(DistError::Singular { at: x });
        }
        Ok(self.pdf(x) / surv)
    }

    /// Cumulative hazard -ln(1 - F(x)), so 1 - F = exp(-H) by construction.
    pub fn cumulative_hazard(&self, x: f64) -> Result<f64, DistError> {
        let surv = self.survival(x);
        if surv <= 0.0 {
            return Err(DistError::Singular { at: x });
        }
        Ok(-surv.ln())
    }

    /// Virtual value phi_B(v) = v - (1 - F(v)) / f(v).
    pub fn virtual_value(&self, v: f64) -> Result<f64, DistError> {
        let f = self.pdf(v);
        if f <= 0.0 {
            return Err(DistError::Singular { at: v });
        }
        Ok(v - self.survival(v) / f)
    }

    /// Virtual cost phi_S(c) = c + G(c) / g(c).
    pub fn virtual_cost(&self, c: f64) -> Result<f64, DistError> {
        let g = self.pdf(c);
        if g <= 0.0 {
            return Err(DistError::Singular { at: c });
        }
        Ok(c + self.cdf(c) / g)
    }

    /// Solves phi_B(v) = t by bisection over the support.
    pub fn inverse_virtual_value(&self, t: f64) -> Result<f64, DistError> {
        self.invert_virtual(t, false)
    }

    /// Solves phi_S(c) = t by bisection over the support.
    pub fn inverse_virtual_cost(&self, t: f64) -> Result<f64, DistError> {
        self.invert_virtual(t, true)
    }

    fn invert_virtual(&self, t: f64, seller_side: bool) -> Result<f64, DistError> {
        let phi = |x: f64| -> f64 {
            let r = if seller_side { self.virtual_cost(x) } else { self.virtual_value(x) };
            r.unwrap_or(f64::NAN)
        };
        let s = self.grid_support();
        let w = s.width();
        // Inch endpoints inward until the virtual preference is defined.
        let mut a = s.lo + 1e-12 * w;
        let mut b = s.hi - 1e-12 * w;
        let mut fa = phi(a);
        let mut fb = phi(b);
        let mut shrink = 1e-9 * w;
        while !fa.is_finite() && a < b {
            a += shrink;
            shrink *= 2.0;
            fa = phi(a);
        }
        shrink = 1e-9 * w;
        while !fb.is_finite() && b > a {
            b -= shrink;
            shrink *= 2.0;
            fb = phi(b);
        }
        if !(fa.is_finite() && fb.is_finite()) {
            return Err(DistError::Singular { at: if fa.is_finite() { b } else { a } });
        }
        let scale = 1.0_f64.max(t.abs());
        if t <= fa + 1e-9 * scale {
            if t >= fa - 1e-9 * scale {
                return Ok(a);
            }
            return Err(DistError::OutOfRange { target: t });
        }
        if t >= fb - 1e-9 * scale {
            if t <= fb + 1e-9 * scale {
                return Ok(b);
            }
            return Err(DistError::OutOfRange { target: t });
        }
        let x = num::bisect(|x| phi(x) - t, a, b, num::ROOT_TOL)?;
        let hit = phi(x);
        if (hit - t).abs() <= 1e-6 * scale {
            return Ok(x);
        }
        // A jump in phi across t still yields the correct threshold type:
        // accept when the crossing is straddled within a short step.
        let h = 1e-7 * w;
        let (lo_v, hi_v) = (phi((x - h).max(a)), phi((x + h).min(b)));
        if lo_v.is_finite() && hi_v.is_finite() && lo_v <= t + 1e-6 * scale && hi_v >= t - 1e-6 * scale
        {
            return Ok(x);
        }
        Err(DistError::NonMonotone { target: t })
    }

    /// Monopoly price and revenue: argmax and max of t (1 - F(t)).
    ///
    /// Global grid scan followed by golden-section refinement, so the result
    /// is meaningful even when the law is only numerically regular.
    pub fn monopoly_price(&self) -> (f64, f64) {
        let s = self.grid_support();
        let obj = |t: f64| t * self.survival(t);
        let n = MONOPOLY_SCAN;
        let mut best_i = 0usize;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=n {
            let t = s.lo + s.width() * i as f64 / n as f64;
            let r = obj(t);
            if r > best {
                best = r;
                best_i = i;
            }
        }
        let lo = s.lo + s.width() * best_i.saturating_sub(1) as f64 / n as f64;
        let hi = s.lo + s.width() * (best_i + 1).min(n) as f64 / n as f64;
        num::golden_section_max(obj, lo, hi, 1e-10)
    }

    /// Nondecreasing virtual value on a grid (buyer-side regularity).
    pub fn is_regular_buyer(&self, n_grid: usize) -> bool {
        if let Distribution::Table(t) = self {
            return t.knot_regular(false);
        }
        self.monotone_on_grid(n_grid, |x| self.virtual_value(x).unwrap_or(f64::NAN))
    }

    /// Nondecreasing virtual cost on a grid (seller-side regularity).
    pub fn is_regular_seller(&self, n_grid: usize) -> bool {
        if let Distribution::Table(t) = self {
            return t.knot_regular(true);
        }
        self.monotone_on_grid(n_grid, |x| self.virtual_cost(x).unwrap_or(f64::NAN))
    }

    /// Regular as a value law and as a cost law.
    pub fn is_regular(&self, n_grid: usize) -> bool {
        self.is_regular_buyer(n_grid) && self.is_regular_seller(n_grid)
    }

    /// Nondecreasing hazard rate on a grid.
    pub fn is_mhr(&self, n_grid: usize) -> bool {
        if let Distribution::Table(t) = self {
            return t.knot_mhr();
        }
        self.monotone_on_grid(n_grid, |x| self.hazard(x).unwrap_or(f64::NAN))
    }

    fn monotone_on_grid<Q: Fn(f64) -> f64>(&self, n_grid: usize, q: Q) -> bool {
        let n = n_grid.max(2);
        let s = self.grid_support();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=n {
            let x = s.lo + s.width() * k as f64 / (n as f64 + 1.0);
            let y = q(x);
            if y.is_nan() {
                continue;
            }
            if y < prev - MONOTONE_SLACK {
                return false;
            }
            prev = y;
        }
        true
    }

    /// Interior knots of a tabulated law, used as quadrature break points.
    pub fn interior_breaks(&self) -> Vec<f64> {
        match self {
            Distribution::Table(t) => t.grid[1..t.grid.len() - 1].to_vec(),
            _ => Vec::new(),
        }
    }

    /// Law of v - c for independent v ~ self (values) and c ~ seller (costs),
    /// tabulated on `resolution` grid points by per-point quadrature of
    /// E_c[F(t + c)].
    pub fn diff_distribution(
        &self,
        seller: &Distribution,
        resolution: usize,
    ) -> Result<Distribution, DistError> {
        if resolution < 16 {
            return Err(DistError::BadParameter(format!(
                "diff resolution must be >= 16, got {resolution}"
            )));
        }
        let fs = self.grid_support();
        let gs = seller.grid_support();
        let lo_t = fs.lo - gs.hi;
        let hi_t = fs.hi - gs.lo;
        let seller_breaks = {
            let b = seller.interior_breaks();
            if b.len() > 128 {
                Vec::new()
            } else {
                b
            }
        };
        let mut grid = Vec::with_capacity(resolution);
        let mut cdf = Vec::with_capacity(resolution);
        for i in 0..resolution {
            let t = lo_t + (hi_t - lo_t) * i as f64 / (resolution - 1) as f64;
            grid.push(t);
            if i == 0 {
                cdf.push(0.0);
                continue;
            }
            if i == resolution - 1 {
                cdf.push(1.0);
                continue;
            }
            // Kinks of c -> F(t+c) sit where t + c crosses the value support.
            let mut breaks = seller_breaks.clone();
            breaks.push(fs.lo - t);
            breaks.push(fs.hi - t);
            let q = num::integrate_with_breaks(
                |c| self.cdf(t + c) * seller.pdf(c),
                gs.lo,
                gs.hi,
                &breaks,
                1e-9,
            )?;
            cdf.push(q.value);
        }
        // Neighbouring points are integrated independently, so their
        // estimates can invert by the tolerance order in deep tails; flatten
        // those, and reject anything beyond 10x of it as a real defect.
        for i in 1..cdf.len() {
            if cdf[i] < cdf[i - 1] {
                if cdf[i - 1] - cdf[i] > 1e-8 {
                    return Err(DistError::BadTable(format!(
                        "difference law cdf drops by {} at {}",
                        cdf[i - 1] - cdf[i],
                        grid[i]
                    )));
                }
                cdf[i] = cdf[i - 1];
            }
        }
        let raw_mass = num::integrate_with_breaks(
            |c| self.cdf(hi_t + c) * seller.pdf(c),
            gs.lo,
            gs.hi,
            &seller_breaks,
            1e-9,
        )?
        .value;
        if (raw_mass - 1.0).abs() > 1e-6 {
            return Err(DistError::BadTable(format!(
                "difference law mass {raw_mass} is not 1"
            )));
        }
        Ok(Distribution::Table(TabulatedDistribution::new(grid, cdf, None)?))
    }

    /// Law of max(v_1, ..., v_n) for iid v_i ~ self: CDF F(x)^n tabulated on
    /// [`DEFAULT_RESOLUTION`] grid points.
    pub fn max_of_iid(&self, n: usize) -> Result<Distribution, DistError> {
        if n < 1 {
            return Err(DistError::BadParameter("max_of_iid needs n >= 1".into()));
        }
        let s = self.grid_support();
        let r = DEFAULT_RESOLUTION;
        let mut grid = Vec::with_capacity(r);
        let mut cdf = Vec::with_capacity(r);
        for i in 0..r {
            let x = s.lo + s.width() * i as f64 / (r - 1) as f64;
            grid.push(x);
            cdf.push(self.cdf(x).powi(n as i32));
        }
        cdf[0] = 0.0;
        // Truncated tail mass folds into the last segment.
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Distribution::Table(TabulatedDistribution::new(grid, cdf, None)?))
    }

    /// Inverse-transform sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p: f64 = rng.gen();
        self.quantile(p).expect("uniform draw is a valid quantile level")
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Uniform(u) => write!(f, "uniform:{},{}", u.lo, u.hi),
            Distribution::Gpd(g) if g.xi == 0.0 && g.mu == 0.0 => write!(f, "exp:{}", g.lambda),
            Distribution::Gpd(g) => write!(f, "gpd:{},{},{}", g.mu, g.lambda, g.xi),
            Distribution::Rgpd(r) => write!(f, "rgpd:{},{},{}", r.mu, r.lambda, r.xi),
            Distribution::Power(p) => write!(f, "power:{},{}", p.a, p.vbar),
            Distribution::WorstCase(w) => write!(f, "gdelta:{}", w.delta),
            Distribution::Table(t) => match &t.label {
                Some(l) => write!(f, "table:{l}"),
                None => write!(f, "table:inline[{}]", t.grid.len()),
            },
        }
    }
}

/// Parses the distribution mini-grammar:
/// `uniform:lo,hi | exp:lambda | power:a,vbar | gpd:mu,lambda,xi |
/// rgpd:mu,lambda,xi | gdelta:delta | table:<path>`.
///
/// `gpd` with xi = 1 canonicalizes to the uniform it denotes.
pub fn parse_distribution(s: &str) -> Result<Distribution, DistError> {
    let (family, args) = s
        .split_once(':')
        .ok_or_else(|| DistError::BadParameter(format!("missing ':' in {s:?}")))?;
    let nums = |expect: usize| -> Result<Vec<f64>, DistError> {
        let vals: Result<Vec<f64>, _> = args.split(',').map(|p| f64::from_str(p.trim())).collect();
        let vals =
            vals.map_err(|_| DistError::BadParameter(format!("bad numeric arguments in {s:?}")))?;
        if vals.len() != expect {
            return Err(DistError::BadParameter(format!(
                "{family} takes {expect} arguments, got {}",
                vals.len()
            )));
        }
        Ok(vals)
    };
    match family {
        "uniform" => {
            let v = nums(2)?;
            Distribution::uniform(v[0], v[1])
        }
        "exp" => {
            let v = nums(1)?;
            Distribution::exponential(v[0])
        }
        "power" => {
            let v = nums(2)?;
            Distribution::power(v[0], v[1])
        }
        "gpd" => {
            let v = nums(3)?;
            if v[2] == 1.0 && v[1] > 0.0 {
                Distribution::uniform(v[0], v[0] + 1.0 / v[1])
            } else {
                Distribution::gpd(v[0], v[1], v[2])
            }
        }
        "rgpd" => {
            let v = nums(3)?;
            Distribution::rgpd(v[0], v[1], v[2])
        }
        "gdelta" => {
            let v = nums(1)?;
            Distribution::worst_case_seller(v[0])
        }
        "table" => Distribution::from_table_csv(Path::new(args)),
        other => Err(DistError::BadParameter(format!("unknown distribution family {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::mock::StepRng;
    use rand::SeedableRng;

    fn grid01(n: usize) -> Vec<f64> {
        (1..n).map(|k| k as f64 / n as f64).collect()
    }

    #[test]
    fn uniform_basics() {
        let d = Distribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(d.pdf(0.3), 1.0);
        assert_eq!(d.cdf(0.25), 0.25);
        assert_eq!(d.quantile(0.5).unwrap(), 0.5);
        assert_eq!(d.quantile(0.0).unwrap(), 0.0);
        assert_eq!(d.cdf(d.support().lo), 0.0);
        assert_eq!(d.cdf(d.support().hi), 1.0);
        assert_eq!(d.pdf(-0.1), 0.0);
        assert_eq!(d.pdf(1.1), 0.0);
    }

    #[test]
    fn uniform_matches_generalized_pareto() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let g = Distribution::gpd(0.0, 1.0, 1.0).unwrap();
        for x in grid01(100) {
            assert!((u.cdf(x) - g.cdf(x)).abs() < 1e-9);
            assert!((u.pdf(x) - g.pdf(x)).abs() < 1e-9);
        }
        let s = Distribution::uniform(2.0, 6.0).unwrap();
        let gs = Distribution::gpd(2.0, 0.25, 1.0).unwrap();
        for k in 1..100 {
            let x = 2.0 + 4.0 * k as f64 / 100.0;
            assert!((s.cdf(x) - gs.cdf(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn worst_case_seller_closed_forms() {
        let d = Distribution::worst_case_seller(0.01).unwrap();
        // g(0.5) = 2 delta / ((1-delta)(1-x)^3) = 16/99, G(0.5) = 1/33.
        assert!((d.pdf(0.5) - 0.16161616161616163).abs() < 1e-15);
        assert!((d.cdf(0.5) - 0.030303030303030304).abs() < 1e-15);
        assert!((d.support().hi - 0.9).abs() < 1e-15);
        assert_eq!(d.cdf(0.0), 0.0);
        assert!((d.cdf(0.9) - 1.0).abs() < 1e-12);
        // phi_S(x) = (1+x)/2 - (1-x)^3/2, independent of delta.
        for k in 1..20 {
            let x = 0.9 * k as f64 / 20.0;
            let closed = (1.0 + x) / 2.0 - (1.0 - x).powi(3) / 2.0;
            assert!((d.virtual_cost(x).unwrap() - closed).abs() < 1e-10, "x={x}");
        }
        assert!(d.virtual_cost(1e-12).unwrap().abs() < 1e-9);
        for k in 1..50 {
            let p = k as f64 / 50.0;
            let x = d.quantile(p).unwrap();
            assert!((d.cdf(x) - p).abs() < 1e-10);
        }
    }

    #[test]
    fn exponential_fixtures() {
        let e1 = Distribution::exponential(1.0).unwrap();
        assert!((e1.pdf(2.0) - (-2.0_f64).exp()).abs() < 1e-15);
        let e3 = Distribution::exponential(3.0).unwrap();
        for x in [0.1, 0.5, 2.0, 5.0] {
            assert!((e3.hazard(x).unwrap() - 3.0).abs() < 1e-12);
        }
        let e2 = Distribution::exponential(2.0).unwrap();
        let p = 1.0 - (-1.0_f64).exp();
        assert!((e2.quantile(p).unwrap() - 0.5).abs() < 1e-12);
        // Bisection oracle for the same quantile.
        let root = crate::num::bisect(|x| e2.cdf(x) - p, 0.0, 10.0, 1e-12).unwrap();
        assert!((root - 0.5).abs() < 1e-10);
        let (eta, rev) = e2.monopoly_price();
        assert!((eta - 0.5).abs() < 1e-6);
        assert!((rev - 0.18393972058572117).abs() < 1e-9);
    }

    #[test]
    fn power_hazard_and_gpd_equivalence() {
        let d = Distribution::power(2.0, 1.0).unwrap();
        // hazard = a/(vbar - x); finite-difference of -ln(1-F) as oracle.
        assert!((d.hazard(0.5).unwrap() - 4.0).abs() < 1e-12);
        let fd = crate::num::central_diff(|x| -(1.0 - d.cdf(x)).ln(), 0.5, 1e-6);
        assert!((fd - 4.0).abs() < 1e-6);
        let g = Distribution::gpd(0.0, 2.0, 0.5).unwrap();
        for x in grid01(100) {
            assert!((d.cdf(x) - g.cdf(x)).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn gpd_virtual_value_is_affine() {
        // phi_B(v) = (1+xi) v - (1/lambda + xi mu) on the interior.
        let (mu, lambda, xi) = (1.0, 0.5, 0.25);
        let d = Distribution::gpd(mu, lambda, xi).unwrap();
        let s = d.support();
        for k in 1..100 {
            let v = s.lo + s.width() * k as f64 / 100.0;
            let affine = (1.0 + xi) * v - (1.0 / lambda + xi * mu);
            assert!((d.virtual_value(v).unwrap() - affine).abs() < 1e-9, "v={v}");
        }
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!((u.virtual_value(0.75).unwrap() - 0.5).abs() < 1e-12);
        assert!((u.virtual_cost(0.3).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn rgpd_matches_negated_gpd() {
        // rgpd(-1,1,1) is uniform[0,1]; rgpd(-6,0.25,1) is uniform[2,6].
        let r = Distribution::rgpd(-1.0, 1.0, 1.0).unwrap();
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let s = r.support();
        assert!((s.lo - 0.0).abs() < 1e-12 && (s.hi - 1.0).abs() < 1e-12);
        for x in grid01(100) {
            assert!((r.cdf(x) - u.cdf(x)).abs() < 1e-9);
            assert!((r.pdf(x) - u.pdf(x)).abs() < 1e-9);
            assert!((r.virtual_cost(x).unwrap() - 2.0 * x).abs() < 1e-9);
        }
        let r2 = Distribution::rgpd(-6.0, 0.25, 1.0).unwrap();
        let u2 = Distribution::uniform(2.0, 6.0).unwrap();
        for k in 1..100 {
            let x = 2.0 + 4.0 * k as f64 / 100.0;
            assert!((r2.cdf(x) - u2.cdf(x)).abs() < 1e-9);
        }
        // Affine virtual cost with the seller-side sign: (1+xi)c + (1/lambda + xi mu).
        let (mu, lambda, xi) = (-1.5, 2.0, 0.5);
        let r3 = Distribution::rgpd(mu, lambda, xi).unwrap();
        let s3 = r3.support();
        for k in 1..100 {
            let c = s3.lo + s3.width() * k as f64 / 100.0;
            let affine = (1.0 + xi) * c + (1.0 / lambda + xi * mu);
            assert!((r3.virtual_cost(c).unwrap() - affine).abs() < 1e-9, "c={c}");
        }
    }

    #[test]
    fn hazard_identity_survival_equals_exp_neg_cumhaz() {
        let dists = [
            Distribution::uniform(0.0, 1.0).unwrap(),
            Distribution::exponential(1.5).unwrap(),
            Distribution::power(3.0, 2.0).unwrap(),
            Distribution::gpd(0.5, 1.0, 0.25).unwrap(),
            Distribution::rgpd(-1.0, 1.0, 1.0).unwrap(),
            Distribution::worst_case_seller(0.1).unwrap(),
        ];
        for d in &dists {
            let s = d.grid_support();
            for k in 1..50 {
                let x = s.lo + s.width() * k as f64 / 50.0;
                if 1.0 - d.cdf(x) <= 0.0 {
                    continue;
                }
                let surv = 1.0 - d.cdf(x);
                let h = d.cumulative_hazard(x).unwrap();
                assert!((surv - (-h).exp()).abs() < 1e-9, "{d} at {x}");
            }
        }
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!((u.hazard(0.5).unwrap() - 2.0).abs() < 1e-12);
        assert!((u.cumulative_hazard(0.5).unwrap() - 2.0_f64.ln()).abs() < 1e-12);
        assert!(matches!(u.hazard(1.0), Err(DistError::Singular { .. })));
    }

    #[test]
    fn inverse_virtual_value_fixtures() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!((u.inverse_virtual_value(0.0).unwrap() - 0.5).abs() < 1e-9);
        assert!((u.inverse_virtual_value(0.2).unwrap() - 0.6).abs() < 1e-9);
        let e = Distribution::exponential(1.0).unwrap();
        assert!((e.inverse_virtual_value(0.0).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(
            u.inverse_virtual_value(2.0),
            Err(DistError::OutOfRange { .. })
        ));
        assert!(matches!(
            u.inverse_virtual_value(-1.5),
            Err(DistError::OutOfRange { .. })
        ));
        // Round trip on the seller side as well.
        let r = Distribution::rgpd(-1.0, 1.0, 1.0).unwrap();
        let c = r.inverse_virtual_cost(1.2).unwrap();
        assert!((r.virtual_cost(c).unwrap() - 1.2).abs() < 1e-9);
    }

    #[test]
    fn monopoly_price_uniform() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let (p, r) = u.monopoly_price();
        assert!((p - 0.5).abs() < 1e-6);
        assert!((r - 0.25).abs() < 1e-9);
        // Consistency with the virtual-value root for a regular law.
        assert!(u.virtual_value(p).unwrap().abs() < 1e-6);
    }

    #[test]
    fn regularity_and_mhr_fixtures() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(u.is_regular(DEFAULT_CHECK_GRID));
        assert!(u.is_mhr(DEFAULT_CHECK_GRID));
        let w = Distribution::worst_case_seller(0.01).unwrap();
        assert!(w.is_regular(DEFAULT_CHECK_GRID));
        assert!(w.is_regular_seller(DEFAULT_CHECK_GRID));
        // Bounded-support generalized Pareto hazard lambda/(1 - xi lambda x)
        // increases toward the upper endpoint.
        let g = Distribution::gpd(0.0, 1.0, 0.5).unwrap();
        assert!(g.is_mhr(DEFAULT_CHECK_GRID));
        assert!(Distribution::exponential(2.0).unwrap().is_mhr(DEFAULT_CHECK_GRID));
        // A front-loaded table: density 2 then 2/7, hazard 2 then 4/7.
        let t = Distribution::tabulated(vec![0.0, 0.25, 2.0], vec![0.0, 0.5, 1.0]).unwrap();
        assert!(!t.is_mhr(DEFAULT_CHECK_GRID));
        assert!(!t.is_regular_buyer(DEFAULT_CHECK_GRID));
        // Nonincreasing density tables are seller-regular.
        assert!(t.is_regular_seller(DEFAULT_CHECK_GRID));
    }

    #[test]
    fn tabulated_quantile_cdf_inverse() {
        let t = Distribution::tabulated(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![0.0, 0.25, 0.25, 1.0],
        )
        .unwrap();
        for (x, p) in [(0.0, 0.0), (1.0, 0.25), (3.0, 1.0)] {
            assert_eq!(t.cdf(x), p);
        }
        // Flat stretch resolves leftmost.
        assert_eq!(t.quantile(0.25).unwrap(), 1.0);
        assert_eq!(t.quantile(0.125).unwrap(), 0.5);
        assert!((t.quantile(0.625).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(t.pdf(1.5), 0.0);
        assert_eq!(t.pdf(0.5), 0.25);
    }

    #[test]
    fn tabulated_rejects_bad_input() {
        assert!(matches!(
            Distribution::tabulated(vec![0.0, 0.0, 1.0], vec![0.0, 0.5, 1.0]),
            Err(DistError::BadTable(_))
        ));
        assert!(matches!(
            Distribution::tabulated(vec![0.0, 1.0], vec![0.1, 1.0]),
            Err(DistError::BadTable(_))
        ));
        assert!(matches!(
            Distribution::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 0.8, 0.4]),
            Err(DistError::BadTable(_))
        ));
    }

    #[test]
    fn table_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seller.csv");
        std::fs::write(&path, "x,cdf\n0.0,0.0\n0.5,0.7\n1.0,1.0\n").unwrap();
        let d = Distribution::from_table_csv(&path).unwrap();
        assert_eq!(d.cdf(0.5), 0.7);
        assert!((d.pdf(0.25) - 1.4).abs() < 1e-12);
        let spec = format!("table:{}", path.display());
        let parsed = parse_distribution(&spec).unwrap();
        assert_eq!(parsed.cdf(0.5), 0.7);
        assert_eq!(format!("{parsed}"), spec);
        std::fs::write(dir.path().join("bad.csv"), "a,b\n0,0\n1,1\n").unwrap();
        assert!(Distribution::from_table_csv(&dir.path().join("bad.csv")).is_err());
    }

    #[test]
    fn diff_of_uniforms_is_triangular() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let d = u.diff_distribution(&u, DEFAULT_RESOLUTION).unwrap();
        let s = d.support();
        assert!((s.lo + 1.0).abs() < 1e-12 && (s.hi - 1.0).abs() < 1e-12);
        assert!((d.cdf(0.0) - 0.5).abs() < 1e-6);
        assert!((d.cdf(0.5) - 0.875).abs() < 1e-6);
        let (p, r) = d.monopoly_price();
        assert!((p - 1.0 / 3.0).abs() < 1e-3, "price {p}");
        assert!((r - 2.0 / 27.0).abs() < 1e-6, "revenue {r}");
        assert!(d.is_mhr(DEFAULT_CHECK_GRID));
    }

    #[test]
    fn diff_concentrates_at_shift_for_narrow_laws() {
        let f = Distribution::uniform(0.6995, 0.7005).unwrap();
        let g = Distribution::uniform(-0.0005, 0.0005).unwrap();
        let d = f.diff_distribution(&g, 64).unwrap();
        assert!(d.cdf(0.69) < 1e-9);
        assert!(d.cdf(0.71) > 1.0 - 1e-9);
    }

    #[test]
    fn diff_rejects_tiny_resolution() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(matches!(
            u.diff_distribution(&u, 8),
            Err(DistError::BadParameter(_))
        ));
    }

    #[test]
    fn max_of_iid_cdf_powers() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let m2 = u.max_of_iid(2).unwrap();
        assert!((m2.cdf(0.5) - 0.25).abs() < 1e-6);
        let m1 = u.max_of_iid(1).unwrap();
        if let Distribution::Table(t) = &m1 {
            for (x, p) in t.grid().iter().zip(t.cdf_values()) {
                assert!((p - u.cdf(*x)).abs() < 1e-9);
            }
        } else {
            panic!("expected tabulated result");
        }
        let e = Distribution::exponential(1.0).unwrap();
        let m3 = e.max_of_iid(3).unwrap();
        if let Distribution::Table(t) = &m3 {
            let n = t.grid().len();
            for i in 1..n - 1 {
                let x = t.grid()[i];
                assert!((t.cdf_values()[i] - e.cdf(x).powi(3)).abs() < 1e-9);
            }
        } else {
            panic!("expected tabulated result");
        }
        assert!(m3.is_mhr(DEFAULT_CHECK_GRID));
        assert!(matches!(u.max_of_iid(0), Err(DistError::BadParameter(_))));
    }

    #[test]
    fn max_of_iid_preserves_mhr() {
        for base in [
            Distribution::uniform(0.0, 1.0).unwrap(),
            Distribution::exponential(1.0).unwrap(),
        ] {
            for n in [1usize, 2, 3, 5, 10] {
                let m = base.max_of_iid(n).unwrap();
                assert!(m.is_mhr(DEFAULT_CHECK_GRID), "{base} n={n}");
            }
        }
    }

    #[test]
    fn sampling_is_inverse_transform() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        // StepRng at 2^63 makes gen::<f64>() exactly 0.5.
        let mut half = StepRng::new(1 << 63, 0);
        assert_eq!(u.sample(&mut half), 0.5);
        let mut zero = StepRng::new(0, 0);
        assert_eq!(u.sample(&mut zero), u.support().lo);
        let e = Distribution::exponential(2.0).unwrap();
        let mut zero = StepRng::new(0, 0);
        assert_eq!(e.sample(&mut zero), 0.0);
    }

    #[test]
    fn sampling_matches_cdf_in_kolmogorov_distance() {
        let e = Distribution::exponential(1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000usize;
        let mut xs: Vec<f64> = (0..n).map(|_| e.sample(&mut rng)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d = 0.0_f64;
        for (i, x) in xs.iter().enumerate() {
            let fx = e.cdf(*x);
            d = d.max((fx - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - fx).abs());
        }
        assert!(d < 0.005, "Kolmogorov distance {d}");
    }

    #[test]
    fn truncated_grid_support_for_unbounded_laws() {
        let e = Distribution::exponential(1.0).unwrap();
        let gs = e.grid_support();
        assert_eq!(gs.lo, 0.0);
        assert!((gs.hi - 18.420680743952367).abs() < 1e-6);
        assert!(e.support().hi.is_infinite());
    }

    #[test]
    fn quantile_rejects_bad_level() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(matches!(
            u.quantile(-0.1),
            Err(DistError::OutOfDomain { .. })
        ));
        assert!(matches!(u.quantile(1.5), Err(DistError::OutOfDomain { .. })));
    }

    #[test]
    fn parser_grammar_roundtrip() {
        let cases = [
            "uniform:0,1",
            "uniform:2,6",
            "exp:1.5",
            "power:2,1",
            "gpd:0.5,2,0.25",
            "rgpd:-1,1,1",
            "gdelta:0.01",
        ];
        for c in cases {
            let d = parse_distribution(c).unwrap();
            assert_eq!(format!("{d}"), c, "round trip of {c}");
        }
        // gpd with xi = 1 canonicalizes to the uniform it denotes.
        let d = parse_distribution("gpd:0,1,1").unwrap();
        assert_eq!(format!("{d}"), "uniform:0,1");
        for bad in [
            "nope:1",
            "uniform:1",
            "uniform:1,1",
            "exp:0",
            "exp:-2",
            "power:0.5,1",
            "gpd:0,1,-0.5",
            "gdelta:1.5",
            "gdelta:0",
            "plain",
        ] {
            assert!(parse_distribution(bad).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn cdf_hits_bounds_on_supports() {
        let dists = [
            Distribution::uniform(2.0, 6.0).unwrap(),
            Distribution::power(2.0, 1.0).unwrap(),
            Distribution::gpd(1.0, 0.5, 0.25).unwrap(),
            Distribution::rgpd(-6.0, 0.25, 1.0).unwrap(),
            Distribution::worst_case_seller(0.1).unwrap(),
        ];
        for d in &dists {
            let s = d.support();
            assert_eq!(d.cdf(s.lo), 0.0, "{d}");
            assert!((d.cdf(s.hi) - 1.0).abs() < 1e-12, "{d}");
        }
    }

    proptest! {
        #[test]
        fn quantile_cdf_roundtrip(
            family in 0usize..6,
            a in 0.1f64..3.0,
            b in 0.2f64..4.0,
            p in 0.001f64..0.999,
        ) {
            let d = match family {
                0 => Distribution::uniform(a - 2.0, a - 2.0 + b).unwrap(),
                1 => Distribution::exponential(a).unwrap(),
                2 => Distribution::power(1.0 + a, b).unwrap(),
                3 => Distribution::gpd(a - 1.0, b, a / 3.0).unwrap(),
                4 => Distribution::rgpd(-a, b, a / 2.0).unwrap(),
                _ => Distribution::worst_case_seller(0.05 + a / 10.0).unwrap(),
            };
            let x = d.quantile(p).unwrap();
            prop_assert!((d.cdf(x) - p).abs() < 1e-8, "{} p={p} x={x}", d);
        }
    }
}
