//! The spectral measure nu_t (t < 0): support endpoints, inversion of g_t
//! along the two monotone curve branches, the pointwise density
//! `rho_t(x) = Im[g_t^{-1}(x)] / (pi x)`, profiles, CDF/quantiles, and
//! moment recovery `m_n(t) = (1/pi) \int x^{n-1} Im[g_t^{-1}(x)] dx` over
//! the support.
//!
//! The support is the interval between the two real curve crossings,
//! `g_t(x_t^{\pm}(0)) = [1 - t/2 \pm sqrt(t^2/4 - t)] exp(\pm sqrt(t^2/4 - t))`,
//! whose product is exactly 1. The inverse g_t^{-1} always denotes the
//! upper-half (y > 0) preimage on gamma_t; which branch carries a given x is
//! decided by comparison with the junction value x_mid = g_t(-1/2 + i y_t),
//! below which the increasing minus branch is inverted and above which the
//! decreasing plus branch is.

use crate::curve::{self, BranchSign, CurveError};
use crate::numerics::{self, Bracket, NumericsError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("x = {x} outside the open support ({x_lo}, {x_hi})")]
    OutOfSupport { x: f64, x_lo: f64, x_hi: f64 },
    #[error("inversion residual {residual:.3e} exceeds {bound:.3e} at x = {x}")]
    ResidualTooLarge { x: f64, residual: f64, bound: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// The support [x_lo, x_hi] of nu_t together with the junction value x_mid
/// splitting the two monotone branches of the inverse.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SupportInterval {
    pub t: f64,
    pub x_lo: f64,
    pub x_mid: f64,
    pub x_hi: f64,
}

impl SupportInterval {
    pub fn validate(&self) -> Result<(), DensityError> {
        if !(0.0 < self.x_lo && self.x_lo < self.x_mid && self.x_mid < self.x_hi) {
            return Err(DensityError::InvariantViolation(format!(
                "endpoints out of order: {} < {} < {} failed",
                self.x_lo, self.x_mid, self.x_hi
            )));
        }
        if (self.x_lo * self.x_hi - 1.0).abs() > 1e-12 {
            return Err(DensityError::InvariantViolation(format!(
                "endpoint product {} differs from 1",
                self.x_lo * self.x_hi
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("interval serializes");
        s.push('\n');
        s
    }
}

/// Sampled density profile (x, rho_t(x)) strictly inside the support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityProfile {
    pub t: f64,
    pub points: Vec<(f64, f64)>,
    pub support: SupportInterval,
}

impl DensityProfile {
    pub fn validate(&self) -> Result<(), DensityError> {
        for &(x, rho) in &self.points {
            if !(x > self.support.x_lo && x < self.support.x_hi) {
                return Err(DensityError::InvariantViolation(format!(
                    "profile point x = {x} outside the open support"
                )));
            }
            if !(rho >= 0.0) {
                return Err(DensityError::InvariantViolation(format!(
                    "negative density {rho} at x = {x}"
                )));
            }
        }
        if self.points.len() >= 400 {
            let mass = self.trapezoid_mass();
            if !(0.95..=1.0).contains(&mass) {
                return Err(DensityError::InvariantViolation(format!(
                    "trapezoid mass {mass} outside [0.95, 1.0]"
                )));
            }
        }
        Ok(())
    }

    /// Trapezoid integral of the raw profile; underestimates the unit mass
    /// by whatever the grid fails to resolve near the edges.
    pub fn trapezoid_mass(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,rho\n");
        for &(x, rho) in &self.points {
            out.push_str(&format!("{x},{rho}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serializes");
        s.push('\n');
        s
    }
}

/// Everything the inversion needs, computed once per public entry point.
struct Ctx {
    t: f64,
    y_t: f64,
    sup: SupportInterval,
}

fn make_ctx(t: f64) -> Result<Ctx, DensityError> {
    if !(t < 0.0) {
        return Err(DensityError::Domain(format!("t must be negative, got {t}")));
    }
    let y_t = curve::half_height(t)?;
    let r = (t * t / 4.0 - t).sqrt();
    let x_lo = (1.0 - t / 2.0 - r) * (-r).exp();
    let x_hi = (1.0 - t / 2.0 + r) * r.exp();
    let gm = curve::g_eval(t, Complex64::new(-0.5, y_t))?;
    if gm.im.abs() > 1e-10 * (1.0 + gm.re.abs()) {
        return Err(DensityError::InvariantViolation(format!(
            "junction value not real: Im = {:.3e}",
            gm.im
        )));
    }
    let sup = SupportInterval { t, x_lo, x_mid: gm.re, x_hi };
    sup.validate()?;
    Ok(Ctx { t, y_t, sup })
}

/// Support endpoints and junction value of nu_t.
pub fn support(t: f64) -> Result<SupportInterval, DensityError> {
    Ok(make_ctx(t)?.sup)
}

/// dg_t/dz = g_t(z) (-t - 1/(z^2 + z)).
fn g_prime(t: f64, z: Complex64, g: Complex64) -> Complex64 {
    g * (-t - 1.0 / (z * z + z))
}

fn invert_in_ctx(ctx: &Ctx, x: f64) -> Result<Complex64, DensityError> {
    let Ctx { t, y_t, sup } = *ctx;
    if !(x > sup.x_lo && x < sup.x_hi) {
        return Err(DensityError::OutOfSupport { x, x_lo: sup.x_lo, x_hi: sup.x_hi });
    }
    if (x - sup.x_mid).abs() <= 1e-12 * sup.x_mid {
        return Ok(Complex64::new(-0.5, y_t));
    }
    let sign = if x < sup.x_mid { BranchSign::Minus } else { BranchSign::Plus };
    let f = |y: f64| curve::g_on_curve(t, y, sign).map_or(f64::NAN, |g| g - x);
    let f_lo = f(0.0);
    let f_hi = f(y_t);
    if f_lo == 0.0 {
        return Ok(Complex64::new(curve::branch_x(t, 0.0, sign)?, 0.0));
    }
    let y0 = if f_lo.signum() == f_hi.signum() || f_hi == 0.0 {
        // x sits inside the square-root rounding noise of the junction
        y_t
    } else {
        let bracket = Bracket::new(0.0, y_t, f_lo, f_hi)?;
        numerics::find_root(f, bracket, f64::MIN_POSITIVE)?
    };
    let mut z = Complex64::new(curve::branch_x(t, y0, sign)?, y0);

    // polish with complex Newton steps on g_t itself; this lands on the true
    // curve (where g is real) and repairs the square-root cancellation that
    // limits the parametrized form near the junction
    let mut best = (curve::g_eval(t, z)? - x).norm();
    for _ in 0..3 {
        let g = curve::g_eval(t, z)?;
        let gp = g_prime(t, z, g);
        if gp.norm() == 0.0 {
            break;
        }
        let cand = z - (g - x) / gp;
        if !(cand.im > 0.0 && cand.im <= y_t * (1.0 + 1e-9)) {
            break;
        }
        let r = (curve::g_eval(t, cand)? - x).norm();
        if r < best {
            z = cand;
            best = r;
        } else {
            break;
        }
    }

    let bound = 1e-10 * x;
    if best > bound {
        // adjacent to the junction the curve closes like a square root and
        // double precision cannot push the g-residual further; the height
        // itself is still accurate to rounding there
        if (x - sup.x_mid).abs() > 1e-6 * sup.x_mid {
            return Err(DensityError::ResidualTooLarge { x, residual: best, bound });
        }
    }
    Ok(z)
}

/// The upper-half preimage z = g_t^{-1}(x) on gamma_t for x inside the
/// support.
pub fn invert_g(t: f64, x: f64) -> Result<Complex64, DensityError> {
    invert_in_ctx(&make_ctx(t)?, x)
}

/// Pointwise density rho_t(x) = Im[g_t^{-1}(x)] / (pi x).
pub fn density_at(t: f64, x: f64) -> Result<f64, DensityError> {
    let ctx = make_ctx(t)?;
    Ok(invert_in_ctx(&ctx, x)?.im / (PI * x))
}

/// Sample the density on a cosine-spaced grid strictly inside the support,
/// offset from each edge by 1e-6 of the support width.
pub fn density_profile(t: f64, n_points: usize) -> Result<DensityProfile, DensityError> {
    if n_points < 16 {
        return Err(DensityError::InvalidInput(format!(
            "n_points must be >= 16, got {n_points}"
        )));
    }
    let ctx = make_ctx(t)?;
    let eps = (ctx.sup.x_hi - ctx.sup.x_lo) * 1e-6;
    let (a, b) = (ctx.sup.x_lo + eps, ctx.sup.x_hi - eps);
    let m = (n_points - 1) as f64;
    let mut points = Vec::with_capacity(n_points);
    for j in 0..n_points {
        let x = a + (b - a) * 0.5 * (1.0 - (PI * j as f64 / m).cos());
        let rho = invert_in_ctx(&ctx, x)?.im / (PI * x);
        points.push((x, rho));
    }
    let profile = DensityProfile { t, points, support: ctx.sup };
    profile.validate()?;
    Ok(profile)
}

/// Recover m_n(t) by adaptive quadrature of `x^{n-1} Im[g_t^{-1}(x)] / pi`
/// over the support.
pub fn moment_from_density(t: f64, n: u32, tol_rel: f64) -> Result<f64, DensityError> {
    let ctx = make_ctx(t)?;
    let tol = tol_rel.clamp(1e-12, 1e-8);
    let integrand = |x: f64| match invert_in_ctx(&ctx, x) {
        Ok(z) => x.powi(n as i32 - 1) * z.im,
        Err(_) => f64::NAN,
    };
    let integral = numerics::integrate_adaptive(integrand, ctx.sup.x_lo, ctx.sup.x_hi, tol)?;
    Ok(integral / PI)
}

/// CDF of nu_t; x outside the support clamps to 0 or 1.
pub fn cdf(t: f64, x: f64) -> Result<f64, DensityError> {
    let ctx = make_ctx(t)?;
    cdf_in_ctx(&ctx, x, 1e-10)
}

fn cdf_in_ctx(ctx: &Ctx, x: f64, tol: f64) -> Result<f64, DensityError> {
    if x <= ctx.sup.x_lo {
        return Ok(0.0);
    }
    if x >= ctx.sup.x_hi {
        return Ok(1.0);
    }
    let integrand = |u: f64| match invert_in_ctx(ctx, u) {
        Ok(z) => z.im / u,
        Err(_) => f64::NAN,
    };
    let integral = numerics::integrate_adaptive(integrand, ctx.sup.x_lo, x, tol)?;
    Ok((integral / PI).clamp(0.0, 1.0))
}

/// Quantile of nu_t: the x with cdf(x) = p, found by bracketed root finding
/// over the support. Round-trips with [`cdf`] to 1e-8.
pub fn quantile(t: f64, p: f64) -> Result<f64, DensityError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DensityError::Domain(format!("p must lie in (0, 1), got {p}")));
    }
    let ctx = make_ctx(t)?;
    let width = ctx.sup.x_hi - ctx.sup.x_lo;
    let delta = 1e-9 * width;
    let (a, b) = (ctx.sup.x_lo + delta, ctx.sup.x_hi - delta);
    let f = |x: f64| cdf_in_ctx(&ctx, x, 1e-10).map_or(f64::NAN, |c| c - p);
    let fa = f(a);
    let fb = f(b);
    if fa >= 0.0 {
        return Ok(a); // p below the resolvable edge mass
    }
    if fb <= 0.0 {
        return Ok(b);
    }
    let bracket = Bracket::new(a, b, fa, fb)?;
    Ok(numerics::find_root(f, bracket, 1e-11 * width)?)
}
