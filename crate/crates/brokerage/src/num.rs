//! Numerical kernel: root bracketing, 1-d maximisation, adaptive quadrature.
//!
//! Everything here is deterministic and allocation-light. Quadrature reports
//! an error estimate alongside the value so callers can propagate accuracy
//! into tolerance decisions instead of trusting a point result.

use std::fmt;

/// Maximum bisection steps before giving up.
pub const BISECT_MAX_ITERS: usize = 200;

/// Default absolute tolerance for root finding.
pub const ROOT_TOL: f64 = 1e-10;

/// Recursion cap for adaptive Simpson; past this the local estimate is kept
/// and its discrepancy charged to the reported error.
const MAX_DEPTH: u32 = 60;

#[derive(Debug, Clone, PartialEq)]
pub enum NumError {
    /// `f(lo)` and `f(hi)` have the same sign.
    NoBracket { lo: f64, hi: f64, flo: f64, fhi: f64 },
    /// Iteration budget exhausted before reaching tolerance.
    MaxIterations,
    /// The integrand produced a NaN or infinity.
    NonFinite { at: f64 },
    /// Degenerate interval (hi < lo, or not finite).
    BadInterval { lo: f64, hi: f64 },
}

impl fmt::Display for NumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumError::NoBracket { lo, hi, flo, fhi } => write!(
                f,
                "no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}"
            ),
            NumError::MaxIterations => write!(f, "iteration budget exhausted"),
            NumError::NonFinite { at } => write!(f, "non-finite function value near x={at}"),
            NumError::BadInterval { lo, hi } => write!(f, "bad interval [{lo}, {hi}]"),
        }
    }
}

impl std::error::Error for NumError {}

/// Bisection root of `f` on `[lo, hi]` to absolute x-tolerance `tol`.
///
/// Requires a sign change across the bracket; either endpoint may sit exactly
/// on the root.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, NumError> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(NumError::BadInterval { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if !fa.is_finite() {
        return Err(NumError::NonFinite { at: a });
    }
    if !fb.is_finite() {
        return Err(NumError::NonFinite { at: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumError::NoBracket { lo, hi, flo: fa, fhi: fb });
    }
    for _ in 0..BISECT_MAX_ITERS {
        let m = 0.5 * (a + b);
        if b - a <= tol {
            return Ok(m);
        }
        let fm = f(m);
        if !fm.is_finite() {
            return Err(NumError::NonFinite { at: m });
        }
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Err(NumError::MaxIterations)
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmax, max)` once the bracket shrinks below `tol`. On a
/// non-unimodal function it still converges, to some local maximum.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Result of an adaptive quadrature: value, accumulated error estimate, and
/// number of integrand evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub abs_error: f64,
    pub evals: usize,
}

impl Quad {
    pub const ZERO: Quad = Quad { value: 0.0, abs_error: 0.0, evals: 0 };

    fn merge(self, other: Quad) -> Quad {
        Quad {
            value: self.value + other.value,
            abs_error: self.abs_error + other.abs_error,
            evals: self.evals + other.evals,
        }
    }
}

struct Adapt<'a> {
    f: &'a dyn Fn(f64) -> f64,
    evals: usize,
    err: f64,
}

impl<'a> Adapt<'a> {
    fn eval(&mut self, x: f64) -> Result<f64, NumError> {
        self.evals += 1;
        let y = (self.f)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(NumError::NonFinite { at: x })
        }
    }

    fn step(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, NumError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let h6 = (b - a) / 12.0;
        let left = h6 * (fa + 4.0 * flm + fm);
        let right = h6 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // Simpson pair: |delta|/15 estimates the error of the refined value.
        if delta.abs() <= 15.0 * tol || depth >= MAX_DEPTH || rm - lm <= f64::EPSILON * m.abs() {
            self.err += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        let half = 0.5 * tol;
        let l = self.step(a, m, fa, flm, fm, left, half, depth + 1)?;
        let r = self.step(m, b, fm, frm, fb, right, half, depth + 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson quadrature of `f` over `[lo, hi]` to absolute tolerance
/// `abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, abs_tol: f64) -> Result<Quad, NumError> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(NumError::BadInterval { lo, hi });
    }
    if hi == lo {
        return Ok(Quad::ZERO);
    }
    let mut st = Adapt { f: &f, evals: 0, err: 0.0 };
    let m = 0.5 * (lo + hi);
    let fa = st.eval(lo)?;
    let fm = st.eval(m)?;
    let fb = st.eval(hi)?;
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    let value = st.step(lo, hi, fa, fm, fb, whole, abs_tol, 0)?;
    Ok(Quad { value, abs_error: st.err, evals: st.evals })
}

/// Quadrature over `[lo, hi]` split at the interior points of `breaks`.
///
/// Kinks and piecewise boundaries defeat the smoothness assumption behind the
/// Simpson error estimate, so callers list them and each smooth piece is
/// integrated separately. Break points outside the interval are ignored; the
/// per-piece tolerance is `abs_tol` scaled by the piece's share of the span.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    abs_tol: f64,
) -> Result<Quad, NumError> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(NumError::BadInterval { lo, hi });
    }
    if hi == lo {
        return Ok(Quad::ZERO);
    }
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x.is_finite() && x > lo && x < hi)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let span = hi - lo;
    let mut total = Quad::ZERO;
    let mut a = lo;
    for b in cuts.into_iter().chain(std::iter::once(hi)) {
        if b - a > f64::EPSILON * span {
            let tol = abs_tol * (b - a) / span;
            total = total.merge(integrate(&f, a, b, tol.max(f64::MIN_POSITIVE))?);
        }
        a = b;
    }
    Ok(total)
}

/// Central difference approximation of `f'(x)` with step `h`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
