//! Scalar numerics shared by the analytic modules: bracketed root finding
//! and one-dimensional quadrature.
//!
//! The root finder is bisection with inverse-quadratic acceleration that
//! never leaves the bracket. The adaptive integrator is a Gauss(7)/Gauss(15)
//! pair with worst-panel-first refinement; both rules are open, so the
//! integrand is never evaluated at the interval endpoints and integrable
//! endpoint singularities are handled by subdivision alone.

use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;
use thiserror::Error;

/// Default absolute tolerance for [`find_root`].
pub const DEFAULT_ROOT_TOL: f64 = 1e-14;
/// Default relative tolerance for [`integrate_adaptive`].
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

const MAX_ROOT_ITER: usize = 200;
const MAX_QUAD_EVALS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("invalid bracket [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi} must have opposite signs")]
    InvalidBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("no convergence: {what} budget of {limit} exceeded")]
    NoConvergence { what: &'static str, limit: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// An interval `[lo, hi]` with function values of strictly opposite signs
/// at the two ends, so that a continuous function has a root inside.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self, NumericsError> {
        let b = Bracket { lo, hi, f_lo, f_hi };
        b.check()?;
        Ok(b)
    }

    /// Evaluate `f` at both ends and build the bracket.
    pub fn evaluate(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Self, NumericsError> {
        Self::new(lo, hi, f(lo), f(hi))
    }

    fn check(&self) -> Result<(), NumericsError> {
        let ok = self.lo < self.hi
            && self.f_lo.is_finite()
            && self.f_hi.is_finite()
            && ((self.f_lo < 0.0 && self.f_hi > 0.0) || (self.f_lo > 0.0 && self.f_hi < 0.0));
        if ok {
            Ok(())
        } else {
            Err(NumericsError::InvalidBracket {
                lo: self.lo,
                hi: self.hi,
                f_lo: self.f_lo,
                f_hi: self.f_hi,
            })
        }
    }
}

/// Find a root of `f` inside `bracket` to absolute tolerance `tol_abs`.
///
/// Bisection guarantees convergence for continuous `f`; an inverse-quadratic
/// (or secant) candidate is tried first on every iteration and accepted only
/// if it falls strictly inside the current bracket, so the bracket invariant
/// is preserved throughout. The returned point always lies in `[lo, hi]`.
pub fn find_root(
    f: impl Fn(f64) -> f64,
    bracket: Bracket,
    tol_abs: f64,
) -> Result<f64, NumericsError> {
    bracket.check()?;
    if !(tol_abs > 0.0) {
        return Err(NumericsError::InvalidInput(format!(
            "tol_abs must be positive, got {tol_abs}"
        )));
    }
    let Bracket { mut lo, mut hi, mut f_lo, mut f_hi } = bracket;
    // previous point retained for the inverse-quadratic fit
    let (mut prev, mut f_prev) = (lo, f_lo);

    for _ in 0..MAX_ROOT_ITER {
        if 0.5 * (hi - lo) <= tol_abs {
            return Ok(0.5 * (lo + hi));
        }
        let width = hi - lo;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // floating-point exhaustion: lo and hi are adjacent
            return Ok(mid.clamp(lo, hi));
        }

        let mut x = mid;
        // inverse quadratic interpolation through (lo, hi, prev), falling
        // back to secant when ordinates collide
        if f_prev != f_lo && f_prev != f_hi {
            let (fa, fb, fc) = (f_lo, f_hi, f_prev);
            let (a, b, c) = (lo, hi, prev);
            let q = a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb));
            if q.is_finite() && q > lo && q < hi {
                x = q;
            }
        } else {
            let q = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if q.is_finite() && q > lo && q < hi {
                x = q;
            }
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.is_finite() {
            prev = x;
            f_prev = fx;
            if fx.signum() == f_lo.signum() {
                lo = x;
                f_lo = fx;
            } else {
                hi = x;
                f_hi = fx;
            }
        }
        // guarantee geometric shrinkage: if the accepted point barely moved
        // an endpoint (or was rejected), take a plain bisection step as well
        if hi - lo > 0.6 * width {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                return Ok(m.clamp(lo, hi));
            }
            let fm = f(m);
            if fm == 0.0 {
                return Ok(m);
            }
            if fm.is_finite() {
                prev = m;
                f_prev = fm;
                if fm.signum() == f_lo.signum() {
                    lo = m;
                    f_lo = fm;
                } else {
                    hi = m;
                    f_hi = fm;
                }
            }
        }
    }
    Err(NumericsError::NoConvergence { what: "root iterations", limit: MAX_ROOT_ITER })
}

/// Trapezoidal rule for a periodic integrand over one full period.
///
/// For integrands analytic in a strip around the real axis the equal-spaced
/// trapezoidal sum converges geometrically in the node count.
pub fn integrate_periodic(
    f: impl Fn(f64) -> Complex64,
    period: f64,
    nodes: usize,
) -> Result<Complex64, NumericsError> {
    if nodes < 8 {
        return Err(NumericsError::InvalidInput(format!("nodes must be >= 8, got {nodes}")));
    }
    if !(period > 0.0) {
        return Err(NumericsError::InvalidInput(format!("period must be positive, got {period}")));
    }
    let h = period / nodes as f64;
    let values: Vec<Complex64> = (0..nodes).map(|k| f(k as f64 * h)).collect();
    let re: Vec<f64> = values.iter().map(|z| z.re).collect();
    let im: Vec<f64> = values.iter().map(|z| z.im).collect();
    Ok(Complex64::new(pairwise_sum(&re), pairwise_sum(&im)) * h)
}

struct Panel {
    a: f64,
    b: f64,
    integral: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive quadrature of `f` over `(a, b)` to relative tolerance `tol_rel`.
///
/// Panels are refined worst-error-first until the summed error estimate
/// drops below `tol_rel` times the running integral. The nested Gauss rules
/// never touch `a` or `b`, so integrable endpoint singularities such as
/// `x^(-1/2)` are admissible.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol_rel: f64,
) -> Result<f64, NumericsError> {
    if !(a < b) {
        return Err(NumericsError::InvalidInput(format!("need a < b, got [{a}, {b}]")));
    }
    if !(tol_rel > 0.0) {
        return Err(NumericsError::InvalidInput(format!(
            "tol_rel must be positive, got {tol_rel}"
        )));
    }
    let mut evals = 0usize;
    let mut heap = BinaryHeap::new();
    // panels that can no longer be split in floating point
    let mut frozen: Vec<Panel> = Vec::new();
    let mut total_i = 0.0;
    let mut total_err = 0.0;

    // modest uniform warm start so the global scale is sane before refining
    let init = 8;
    for k in 0..init {
        let pa = a + (b - a) * k as f64 / init as f64;
        let pb = a + (b - a) * (k + 1) as f64 / init as f64;
        let p = eval_panel(&f, pa, pb, &mut evals);
        total_i += p.integral;
        total_err += p.err;
        heap.push(p);
    }

    while total_err > tol_rel * total_i.abs().max(f64::MIN_POSITIVE) {
        if evals > MAX_QUAD_EVALS {
            return Err(NumericsError::NoConvergence {
                what: "quadrature evaluations",
                limit: MAX_QUAD_EVALS,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break, // every panel frozen; error no longer reducible
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            total_err -= worst.err;
            frozen.push(worst);
            continue;
        }
        total_i -= worst.integral;
        total_err -= worst.err;
        let left = eval_panel(&f, worst.a, mid, &mut evals);
        let right = eval_panel(&f, mid, worst.b, &mut evals);
        total_i += left.integral + right.integral;
        total_err += left.err + right.err;
        heap.push(left);
        heap.push(right);
    }
    // final pass: re-sum panel integrals pairwise for a stable total
    let mut parts: Vec<f64> = heap.iter().map(|p| p.integral).collect();
    parts.extend(frozen.iter().map(|p| p.integral));
    Ok(pairwise_sum(&parts))
}

fn eval_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64, evals: &mut usize) -> Panel {
    let (g7, g15) = gauss_rules();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut i7 = 0.0;
    for (x, w) in g7 {
        i7 += w * f(mid + half * x);
    }
    let mut i15 = 0.0;
    for (x, w) in g15 {
        i15 += w * f(mid + half * x);
    }
    *evals += g7.len() + g15.len();
    i7 *= half;
    i15 *= half;
    Panel { a, b, integral: i15, err: (i15 - i7).abs() }
}

type Rule = Vec<(f64, f64)>;

fn gauss_rules() -> (&'static Rule, &'static Rule) {
    static RULES: OnceLock<(Rule, Rule)> = OnceLock::new();
    let (g7, g15) = RULES.get_or_init(|| (legendre_rule(7), legendre_rule(15)));
    (g7, g15)
}

/// Gauss-Legendre nodes and weights on (-1, 1) by Newton iteration on the
/// Legendre recurrence.
fn legendre_rule(n: usize) -> Rule {
    let mut rule = Vec::with_capacity(n);
    for k in 0..n {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule
}

/// Evaluate (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sum `xs` by recursive pairwise reduction: deterministic for a fixed input
/// order and with error growth O(log n) instead of O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}
