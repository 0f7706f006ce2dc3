//! The Jordan curve gamma_t (t < 0) on which g_t(z) = e^{-t(z+1/2)}(1 + 1/z)
//! is real and positive.
//!
//! Writing z = x + iy, reality of g_t off the real axis reduces to
//! `-y^2 - y cot(ty) = x^2 + x`, so the curve consists of two branches
//! `x_t^{\pm}(y) = -1/2 \pm v_t(y)` with half-width
//! `v_t(y) = sqrt(1/4 - y^2 - y cot(ty))`, defined for |y| up to the
//! half-height y_t. The gate function `f_t(y) = 2y sin(ty) + cos(ty)`
//! controls existence: the radicand is nonnegative exactly where |f_t| <= 1,
//! through the identity `4 sin^2(ty) v_t(y)^2 + f_t(y)^2 = 1`. The
//! half-height is the root of f_t = -1 below the critical point a_t of f_t,
//! and g_t restricted to the upper-half branches is strictly monotone in y,
//! increasing on the minus branch and decreasing on the plus branch.
//!
//! Only the upper half (y >= 0) is stored; the lower half follows from
//! invariance of the constraint under conjugation.

use crate::numerics::{find_root, Bracket, NumericsError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("g_t has a pole at the origin")]
    PoleAtOrigin,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("curve invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Which branch of the curve: `x = -1/2 + v` (plus) or `x = -1/2 - v` (minus).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSign {
    Plus,
    Minus,
}

impl BranchSign {
    pub fn signum(self) -> f64 {
        match self {
            BranchSign::Plus => 1.0,
            BranchSign::Minus => -1.0,
        }
    }
}

/// One sampled height of the curve with both branch abscissas and g-values.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurveSample {
    pub y: f64,
    pub x_minus: f64,
    pub x_plus: f64,
    pub g_minus: f64,
    pub g_plus: f64,
}

/// The top of the curve, where the two branches meet at x = -1/2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Junction {
    pub y: f64,
    pub x: f64,
    pub g: f64,
}

/// The computed upper half of gamma_t: roots y_t and a_t plus branch samples
/// on a cosine-clustered grid over [0, y_t].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveModel {
    pub t: f64,
    pub y_t: f64,
    pub a_t: f64,
    pub samples: Vec<CurveSample>,
    pub junction: Junction,
}

fn require_negative_t(t: f64) -> Result<(), CurveError> {
    if t < 0.0 {
        Ok(())
    } else {
        Err(CurveError::Domain(format!("t must be negative, got {t}")))
    }
}

/// u * cot(u), series-stabilized near u = 0.
fn ucot(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        1.0 - u2 / 3.0 - u2 * u2 / 45.0
    } else {
        u / u.tan()
    }
}

/// y * cot(t y); tends to 1/t as y -> 0.
pub(crate) fn y_cot_ty(t: f64, y: f64) -> f64 {
    ucot(t * y) / t
}

/// Gate function f_t(y) = 2 y sin(ty) + cos(ty) on (pi/t, -pi/t).
pub fn f_osc(t: f64, y: f64) -> Result<f64, CurveError> {
    require_negative_t(t)?;
    if !(y > PI / t && y < -PI / t) {
        return Err(CurveError::Domain(format!(
            "y = {y} outside ({}, {})",
            PI / t,
            -PI / t
        )));
    }
    let u = t * y;
    Ok(2.0 * y * u.sin() + u.cos())
}

/// f_t'(y) = 2 sin(ty) [ty cot(ty) - (t - 2)/2]; the y -> 0 limit is 0.
pub fn f_osc_deriv(t: f64, y: f64) -> Result<f64, CurveError> {
    require_negative_t(t)?;
    if !(y >= 0.0 && y < -PI / t) {
        return Err(CurveError::Domain(format!("y = {y} outside [0, {})", -PI / t)));
    }
    let u = t * y;
    Ok(2.0 * u.sin() * (ucot(u) - (t - 2.0) / 2.0))
}

/// The critical point a_t of f_t: the unique root of
/// `ty cot(ty) = (t - 2)/2` in [-pi/(2t), -pi/t). f_t decreases on (0, a_t)
/// and increases on (a_t, -pi/t).
pub fn critical_point(t: f64) -> Result<f64, CurveError> {
    require_negative_t(t)?;
    let h = |y: f64| ucot(t * y) - (t - 2.0) / 2.0;
    let lo = -PI / (2.0 * t);
    // approach -pi/t until ucot drops below the level (t-2)/2
    let mut delta = 1e-3;
    let mut hi = -PI / t * (1.0 - delta);
    for _ in 0..20 {
        if h(hi) < 0.0 {
            break;
        }
        delta /= 16.0;
        hi = -PI / t * (1.0 - delta);
    }
    let bracket = Bracket::evaluate(h, lo, hi)?;
    Ok(find_root(h, bracket, f64::MIN_POSITIVE)?)
}

/// The half-height y_t: unique root of f_t(y) = -1 on (0, a_t), below which
/// |f_t| <= 1 and the curve exists.
pub fn half_height(t: f64) -> Result<f64, CurveError> {
    let a = critical_point(t)?;
    let g = |y: f64| {
        let u = t * y;
        2.0 * y * u.sin() + u.cos() + 1.0
    };
    let bracket = Bracket::evaluate(g, 0.0, a)?;
    Ok(find_root(g, bracket, f64::MIN_POSITIVE)?)
}

/// Half-width v_t(y) = sqrt(1/4 - y^2 - y cot(ty)), zero exactly at |y| = y_t.
///
/// Away from y = 0 the radicand is evaluated through the identity
/// `4 sin^2(ty) v^2 = 1 - f_t(y)^2`, which avoids the difference of large
/// terms near the closing height; near y = 0 the direct radicand with the
/// series form of y cot(ty) is exact.
pub fn half_width(t: f64, y: f64) -> Result<f64, CurveError> {
    require_negative_t(t)?;
    let y = y.abs();
    if y == 0.0 {
        return Ok((0.25 - 1.0 / t).sqrt());
    }
    let u = t * y;
    if !(y < -PI / t) {
        return Err(CurveError::Domain(format!("y = {y} outside the curve range")));
    }
    if u.abs() < 1e-4 {
        let radicand = 0.25 - y * y - y_cot_ty(t, y);
        return Ok(radicand.max(0.0).sqrt());
    }
    let f = 2.0 * y * u.sin() + u.cos();
    let r = 1.0 - f * f;
    if r < 0.0 {
        if r > -1e-13 {
            return Ok(0.0);
        }
        return Err(CurveError::Domain(format!(
            "y = {y} beyond the half-height (radicand {r:.3e})"
        )));
    }
    Ok(r.sqrt() / (2.0 * u.sin().abs()))
}

/// Branch abscissa x_t^{\pm}(y) = -1/2 \pm v_t(y).
pub fn branch_x(t: f64, y: f64, sign: BranchSign) -> Result<f64, CurveError> {
    Ok(-0.5 + sign.signum() * half_width(t, y)?)
}

/// d/dy of x_t^{\pm}: `∓ [4y sin^2(ty) + sin(2ty) - 2ty] / [4 sin^2(ty) v_t(y)]`.
///
/// Defined on the open interval (0, y_t): the limit at 0 is 0 and the
/// derivative diverges at the junction.
pub fn branch_x_deriv(t: f64, y: f64, sign: BranchSign) -> Result<f64, CurveError> {
    require_negative_t(t)?;
    if !(y > 0.0) {
        return Err(CurveError::Domain(format!("need 0 < y < y_t, got y = {y}")));
    }
    let v = half_width(t, y)?;
    if v == 0.0 {
        return Err(CurveError::Domain("derivative diverges at the junction".into()));
    }
    let u = t * y;
    let sin_u = u.sin();
    let num = if u.abs() < 1e-3 {
        // both contributions are O(u^3): keep their series to avoid the
        // cancellation of the O(u) parts
        let u2 = u * u;
        let s2 = 4.0 / 3.0 * u2 * u * (1.0 - u2 / 5.0 + 2.0 * u2 * u2 / 105.0); // 2u - sin(2u)
        4.0 * y * sin_u * sin_u - s2
    } else {
        4.0 * y * sin_u * sin_u + (2.0 * u).sin() - 2.0 * u
    };
    Ok(-sign.signum() * num / (4.0 * sin_u * sin_u * v))
}

/// g_t(z) = e^{-t(z + 1/2)} (1 + 1/z), the map whose level structure on
/// gamma_t parametrizes the support.
pub fn g_eval(t: f64, z: Complex64) -> Result<Complex64, CurveError> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(CurveError::PoleAtOrigin);
    }
    Ok((-t * (z + 0.5)).exp() * (1.0 + 1.0 / z))
}

/// g_t evaluated on the curve through the all-real form
/// `g = -y e^{-t(x+1/2)} / (sin(ty) (x^2 + y^2))`, which substitutes the
/// curve constraint `x + y cot(ty) = -(x^2 + y^2)` into the real part of
/// g_t. Strictly positive. The y = 0 endpoint is the limit g_t(x_t^pm(0)).
pub fn g_on_curve(t: f64, y: f64, sign: BranchSign) -> Result<f64, CurveError> {
    require_negative_t(t)?;
    if y == 0.0 {
        let x = branch_x(t, 0.0, sign)?;
        return Ok(g_eval(t, Complex64::new(x, 0.0))?.re);
    }
    if y < 0.0 {
        return Err(CurveError::Domain(format!("need 0 <= y <= y_t, got y = {y}")));
    }
    let x = branch_x(t, y, sign)?;
    let u = t * y;
    Ok(-y * (-t * (x + 0.5)).exp() / (u.sin() * (x * x + y * y)))
}

// ---- partial derivatives of k_t(x, y) = e^{t/2} g_t(x + iy) -------------
//
// Used to verify the branch monotonicity of g along the curve; not part of
// the public surface.

pub(crate) fn k_partial_x(t: f64, x: f64, y: f64) -> f64 {
    let w = x + y_cot_ty(t, y);
    let s = (t * y).sin();
    -y * (-t * x).exp() / (w * w * s) * (t * w + 1.0)
}

pub(crate) fn k_partial_y(t: f64, x: f64, y: f64) -> f64 {
    let w = x + y_cot_ty(t, y);
    let s = (t * y).sin();
    (-t * x).exp() / (w * w * s) * ((t * y * y + x) - t * x * y_cot_ty(t, y))
}

/// d/dy of g_t along a branch, from the chain rule through k_t.
pub(crate) fn g_curve_deriv(t: f64, y: f64, sign: BranchSign) -> Result<f64, CurveError> {
    let x = branch_x(t, y, sign)?;
    let dx = branch_x_deriv(t, y, sign)?;
    Ok((-t / 2.0).exp() * (dx * k_partial_x(t, x, y) + k_partial_y(t, x, y)))
}

/// Build the curve model: solve for a_t and y_t, then sample both branches
/// on a cosine-spaced grid over [0, y_t] (clustered at both ends, where the
/// curve flattens and where it has a vertical tangent) and validate every
/// model invariant.
pub fn build_curve(t: f64, n_samples: usize) -> Result<CurveModel, CurveError> {
    require_negative_t(t)?;
    if n_samples < 16 {
        return Err(CurveError::InvalidInput(format!(
            "n_samples must be >= 16, got {n_samples}"
        )));
    }
    let a_t = critical_point(t)?;
    let y_t = half_height(t)?;
    let g_mid = {
        let z = Complex64::new(-0.5, y_t);
        let g = g_eval(t, z)?;
        let bound = 1e-10 * (1.0 + g.re.abs());
        if g.im.abs() > bound {
            return Err(CurveError::InvariantViolation(format!(
                "g at the junction is not real: Im = {:.3e}",
                g.im
            )));
        }
        g.re
    };
    let junction = Junction { y: y_t, x: -0.5, g: g_mid };

    let m = n_samples - 1;
    let mut samples = Vec::with_capacity(n_samples);
    for j in 0..n_samples {
        if j == m {
            // the closing height: both abscissas equal -1/2 exactly
            samples.push(CurveSample {
                y: y_t,
                x_minus: -0.5,
                x_plus: -0.5,
                g_minus: g_mid,
                g_plus: g_mid,
            });
            break;
        }
        let y = y_t * 0.5 * (1.0 - (PI * j as f64 / m as f64).cos());
        samples.push(CurveSample {
            y,
            x_minus: branch_x(t, y, BranchSign::Minus)?,
            x_plus: branch_x(t, y, BranchSign::Plus)?,
            g_minus: g_on_curve(t, y, BranchSign::Minus)?,
            g_plus: g_on_curve(t, y, BranchSign::Plus)?,
        });
    }

    let model = CurveModel { t, y_t, a_t, samples, junction };
    model.validate()?;
    Ok(model)
}

impl CurveModel {
    /// Check every invariant of the model: the root bracket chain, branch
    /// ordering with equality only at the junction, strict monotonicity of g
    /// along each branch, positivity, and the curve constraints at every
    /// sample (reality of g_t to 1e-10 and the algebraic constraint
    /// residual to 1e-10).
    pub fn validate(&self) -> Result<(), CurveError> {
        let t = self.t;
        if !(0.0 < self.y_t && self.y_t < self.a_t && self.a_t < -PI / t) {
            return Err(CurveError::InvariantViolation(format!(
                "bracket chain 0 < y_t < a_t < -pi/t broken: y_t = {}, a_t = {}, -pi/t = {}",
                self.y_t,
                self.a_t,
                -PI / t
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            let last = i + 1 == self.samples.len();
            let ordered = if last {
                s.x_minus == -0.5 && s.x_plus == -0.5
            } else {
                s.x_minus < -0.5 && -0.5 < s.x_plus
            };
            if !ordered {
                return Err(CurveError::InvariantViolation(format!(
                    "sample {i}: branch ordering x_minus <= -1/2 <= x_plus broken ({}, {})",
                    s.x_minus, s.x_plus
                )));
            }
            if !(s.g_minus > 0.0 && s.g_plus > 0.0) {
                return Err(CurveError::InvariantViolation(format!(
                    "sample {i}: g must be positive, got ({}, {})",
                    s.g_minus, s.g_plus
                )));
            }
            for (x, g) in [(s.x_minus, s.g_minus), (s.x_plus, s.g_plus)] {
                let u = t * s.y;
                let const1 = s.y * u.cos() + (x * x + s.y * s.y + x) * u.sin();
                if const1.abs() > 1e-10 {
                    return Err(CurveError::InvariantViolation(format!(
                        "sample {i}: reality constraint residual {const1:.3e}"
                    )));
                }
                let const2 = -s.y * s.y - y_cot_ty(t, s.y) - x * x - x;
                if const2.abs() > 1e-10 {
                    return Err(CurveError::InvariantViolation(format!(
                        "sample {i}: curve constraint residual {const2:.3e}"
                    )));
                }
                let gz = g_eval(t, Complex64::new(x, s.y))?;
                if gz.im.abs() > 1e-10 * (1.0 + gz.re.abs()) {
                    return Err(CurveError::InvariantViolation(format!(
                        "sample {i}: Im g = {:.3e} too large",
                        gz.im
                    )));
                }
                if (gz.re - g).abs() > 1e-10 * (1.0 + g.abs()) {
                    return Err(CurveError::InvariantViolation(format!(
                        "sample {i}: real-form g {g} disagrees with g_t = {}",
                        gz.re
                    )));
                }
            }
        }
        for w in self.samples.windows(2) {
            if !(w[1].g_minus > w[0].g_minus) {
                return Err(CurveError::InvariantViolation(format!(
                    "g_minus not strictly increasing at y = {}",
                    w[1].y
                )));
            }
            if !(w[1].g_plus < w[0].g_plus) {
                return Err(CurveError::InvariantViolation(format!(
                    "g_plus not strictly decreasing at y = {}",
                    w[1].y
                )));
            }
        }
        let lastg = self.samples.last().expect(">= 16 samples").g_minus;
        if lastg != self.junction.g {
            return Err(CurveError::InvariantViolation(
                "junction g differs from the last sample".into(),
            ));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,x_minus,x_plus,g_minus,g_plus\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.y, s.x_minus, s.x_plus, s.g_minus, s.g_plus
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Y_T1: f64 = 0.9601888739147828;
    const A_T1: f64 = 2.17462602868888;

    #[test]
    fn gate_function_values() {
        assert_eq!(f_osc(-1.0, 0.0).unwrap(), 1.0);
        let v = f_osc(-1.0, 1.0).unwrap();
        assert!((v - (-1.1426396637476532)).abs() < 1e-15, "v = {v}");
        let v = f_osc(-2.0, PI / 4.0).unwrap();
        assert!((v - (-PI / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn gate_function_domain() {
        assert!(f_osc(-1.0, PI).is_err());
        assert!(f_osc(-1.0, -PI).is_err());
        assert!(f_osc(1.0, 0.1).is_err());
    }

    #[test]
    fn gate_derivative_limit_and_root() {
        assert_eq!(f_osc_deriv(-1.0, 0.0).unwrap(), 0.0);
        let at_crit = f_osc_deriv(-1.0, A_T1).unwrap();
        assert!(at_crit.abs() < 1e-10, "f'(a_t) = {at_crit}");
    }

    #[test]
    fn gate_derivative_matches_finite_difference() {
        let h = 1e-6;
        for &y in &[0.3, 0.5, 1.0, 2.0] {
            let fd = (f_osc(-1.0, y + h).unwrap() - f_osc(-1.0, y - h).unwrap()) / (2.0 * h);
            let an = f_osc_deriv(-1.0, y).unwrap();
            assert!((an - fd).abs() < 1e-8, "y = {y}: {an} vs {fd}");
        }
        assert!(f_osc_deriv(-1.0, 0.5).unwrap() < 0.0);
    }

    #[test]
    fn critical_point_location() {
        let a = critical_point(-1.0).unwrap();
        assert!((a - A_T1).abs() < 1e-10, "a = {a}");
        // paper bracket: a_t in [-pi/(2t), -pi/t)
        assert!(a >= PI / 2.0 && a < PI);
    }

    #[test]
    fn gate_at_critical_point_is_below_minus_one() {
        for &t in &[-0.25, -1.0, -2.0, -4.0, -10.0] {
            let a = critical_point(t).unwrap();
            assert!(f_osc(t, a).unwrap() < -1.0, "t = {t}");
        }
    }

    #[test]
    fn half_height_location_and_residual() {
        let y = half_height(-1.0).unwrap();
        assert!((y - Y_T1).abs() < 1e-12, "y = {y}");
        assert!((f_osc(-1.0, y).unwrap() + 1.0).abs() < 1e-12);
        for &t in &[-0.25, -1.0, -2.0, -4.0, -10.0] {
            let y = half_height(t).unwrap();
            assert!(y > 0.0 && y < -PI / t);
            assert!((f_osc(t, y).unwrap() + 1.0).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn gate_bound_inside_half_height() {
        let y_t = half_height(-1.0).unwrap();
        for k in 0..=100 {
            let y = y_t * k as f64 / 100.0;
            assert!(f_osc(-1.0, y).unwrap().abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn half_width_values() {
        let v0 = half_width(-1.0, 0.0).unwrap();
        assert!((v0 - 1.118033988749895).abs() < 1e-15); // sqrt(5)/2
        let vt = half_width(-1.0, Y_T1).unwrap();
        assert!(vt < 2e-7, "v(y_t) = {vt}");
        let v = half_width(-1.0, 0.5).unwrap();
        assert!((v - 0.9566837831050686).abs() < 1e-14, "v = {v}");
    }

    #[test]
    fn half_width_two_formula_consistency() {
        // identity form vs the radicand as written, t = -1
        fn cot(u: f64) -> f64 {
            u.cos() / u.sin()
        }
        for &y in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let d = (0.25 - y * y - y * cot(-y)).sqrt();
            let v = half_width(-1.0, y).unwrap();
            assert!((v - d).abs() < 1e-12, "y = {y}: {v} vs {d}");
        }
    }

    #[test]
    fn half_width_domain_error_past_half_height() {
        let err = half_width(-1.0, Y_T1 * 1.05).unwrap_err();
        assert!(matches!(err, CurveError::Domain(_)));
    }

    #[test]
    fn gate_identity_on_grid() {
        // 4 sin^2(ty) v^2 + f^2 = 1
        for &t in &[-0.25, -1.0, -4.0] {
            let y_t = half_height(t).unwrap();
            for k in 1..100 {
                let y = y_t * k as f64 / 100.0;
                let v = half_width(t, y).unwrap();
                let f = f_osc(t, y).unwrap();
                let s = (t * y).sin();
                let lhs = 4.0 * s * s * v * v + f * f;
                assert!((lhs - 1.0).abs() < 1e-12, "t = {t}, y = {y}: {lhs}");
            }
        }
    }

    #[test]
    fn gate_equivalence_sign_grid() {
        // sign(1/4 - y^2 - y cot(ty)) = sign(1 - f^2) across (0, -pi/t)
        let t = -1.0;
        for k in 1..1000 {
            let y = -PI / t * k as f64 / 1000.0;
            let radicand = 0.25 - y * y - y_cot_ty(t, y);
            let f = f_osc(t, y).unwrap();
            let gate = 1.0 - f * f;
            if radicand.abs() > 1e-12 && gate.abs() > 1e-12 {
                assert_eq!(radicand > 0.0, gate > 0.0, "y = {y}");
            }
        }
    }

    #[test]
    fn variation_table_on_grid() {
        // f decreases from 1 on (0, a_t), increases on (a_t, -pi/t), -> -1
        let t = -1.0;
        let a = critical_point(t).unwrap();
        let n = 1000;
        let mut prev = f_osc(t, 0.0).unwrap();
        assert_eq!(prev, 1.0);
        for k in 1..n {
            let y = a * k as f64 / n as f64;
            let f = f_osc(t, y).unwrap();
            assert!(f < prev, "not decreasing at y = {y}");
            prev = f;
        }
        let mut prev = f_osc(t, a).unwrap();
        for k in 1..n {
            let y = a + (-PI / t - a) * k as f64 / n as f64;
            let f = f_osc(t, y).unwrap();
            assert!(f > prev, "not increasing at y = {y}");
            prev = f;
        }
        let near_end = f_osc(t, -PI / t * (1.0 - 1e-9)).unwrap();
        assert!((near_end + 1.0).abs() < 1e-6);
    }

    #[test]
    fn branch_points_at_zero_height() {
        let xp = branch_x(-1.0, 0.0, BranchSign::Plus).unwrap();
        let xm = branch_x(-1.0, 0.0, BranchSign::Minus).unwrap();
        assert!((xp - 0.618033988749895).abs() < 1e-15);
        assert!((xm + 1.618033988749895).abs() < 1e-15);
    }

    #[test]
    fn branches_meet_at_junction() {
        for sign in [BranchSign::Plus, BranchSign::Minus] {
            let x = branch_x(-1.0, Y_T1, sign).unwrap();
            assert!((x + 0.5).abs() < 2e-7, "x = {x}");
        }
    }

    #[test]
    fn branch_deriv_matches_finite_difference() {
        let h = 1e-6;
        for &y in &[0.2, 0.5, 0.8] {
            let fd = (branch_x(-1.0, y + h, BranchSign::Plus).unwrap()
                - branch_x(-1.0, y - h, BranchSign::Plus).unwrap())
                / (2.0 * h);
            let an = branch_x_deriv(-1.0, y, BranchSign::Plus).unwrap();
            assert!((an - fd).abs() < 1e-7, "y = {y}: {an} vs {fd}");
        }
        let an = branch_x_deriv(-1.0, 0.5, BranchSign::Plus).unwrap();
        assert!((an - (-0.7028732752177683)).abs() < 1e-12);
        assert!(an < 0.0);
    }

    #[test]
    fn branch_deriv_antisymmetry_and_limits() {
        let p = branch_x_deriv(-1.0, 0.5, BranchSign::Plus).unwrap();
        let m = branch_x_deriv(-1.0, 0.5, BranchSign::Minus).unwrap();
        assert_eq!(p, -m);
        // -> 0 as y -> 0+
        let small = branch_x_deriv(-1.0, 1e-5, BranchSign::Plus).unwrap();
        assert!(small.abs() < 1e-4, "deriv = {small}");
        assert!(branch_x_deriv(-1.0, 0.0, BranchSign::Plus).is_err());
        assert!(branch_x_deriv(-1.0, Y_T1, BranchSign::Plus).is_err());
    }

    #[test]
    fn g_eval_special_points() {
        let z = g_eval(-3.7, Complex64::new(-1.0, 0.0)).unwrap();
        assert!(z.norm() < 1e-15);
        let z = g_eval(0.0, Complex64::new(1.0, 0.0)).unwrap();
        assert!((z.re - 2.0).abs() < 1e-15 && z.im == 0.0);
        assert!(matches!(
            g_eval(-1.0, Complex64::new(0.0, 0.0)),
            Err(CurveError::PoleAtOrigin)
        ));
    }

    #[test]
    fn g_eval_at_plus_branch_endpoint() {
        let x = branch_x(-1.0, 0.0, BranchSign::Plus).unwrap();
        let g = g_eval(-1.0, Complex64::new(x, 0.0)).unwrap();
        assert!((g.re - 8.008132908727238).abs() < 1e-12, "g = {g}");
    }

    #[test]
    fn g_on_curve_values() {
        let g = g_on_curve(-1.0, 0.0, BranchSign::Minus).unwrap();
        assert!((g - 0.12487305235783526).abs() < 1e-14, "g = {g}");
        let g = g_on_curve(-1.0, 0.5, BranchSign::Plus).unwrap();
        assert!((g - 5.9201823673541245).abs() < 1e-12, "g = {g}");
    }

    #[test]
    fn g_on_curve_agrees_with_complex_route() {
        for &y in &[0.1, 0.25, 0.4, 0.7, 0.9] {
            for sign in [BranchSign::Plus, BranchSign::Minus] {
                let g = g_on_curve(-1.0, y, sign).unwrap();
                let x = branch_x(-1.0, y, sign).unwrap();
                let gz = g_eval(-1.0, Complex64::new(x, y)).unwrap();
                assert!((g - gz.re).abs() < 1e-12 * g, "y = {y}");
                assert!(gz.im.abs() < 1e-12 * g);
                assert!(g > 0.0);
            }
        }
    }

    #[test]
    fn g_at_junction_equals_complex_route() {
        let y_t = half_height(-1.0).unwrap();
        let gz = g_eval(-1.0, Complex64::new(-0.5, y_t)).unwrap();
        assert!(gz.im.abs() < 1e-12);
        // the junction value is 1 for every t: |g| = 1 on the line
        // Re z = -1/2 and g is real positive there
        assert!((gz.re - 1.0).abs() < 1e-12, "g_mid = {}", gz.re);
    }

    #[test]
    fn junction_value_is_one_for_every_t() {
        for &t in &[-0.05, -0.25, -1.0, -2.0, -4.0, -8.0] {
            let y_t = half_height(t).unwrap();
            let gz = g_eval(t, Complex64::new(-0.5, y_t)).unwrap();
            assert!((gz.re - 1.0).abs() < 1e-11, "t = {t}: {}", gz.re);
        }
    }

    #[test]
    fn conjugation_symmetry_of_g() {
        let z = Complex64::new(0.3, 0.6);
        let g = g_eval(-1.7, z).unwrap();
        let gc = g_eval(-1.7, z.conj()).unwrap();
        assert!((g.conj() - gc).norm() < 1e-14);
    }

    #[test]
    fn monotone_branches_via_derivative_formulas() {
        // dg/dy from the closed-form partials of k_t: positive on the minus
        // branch, negative on the plus branch
        for &t in &[-0.25, -1.0, -4.0] {
            let y_t = half_height(t).unwrap();
            for k in 1..60 {
                let y = y_t * k as f64 / 60.0;
                let dm = g_curve_deriv(t, y, BranchSign::Minus).unwrap();
                let dp = g_curve_deriv(t, y, BranchSign::Plus).unwrap();
                assert!(dm > 0.0, "t = {t}, y = {y}: dg-/dy = {dm}");
                assert!(dp < 0.0, "t = {t}, y = {y}: dg+/dy = {dp}");
            }
        }
    }

    #[test]
    fn g_curve_deriv_matches_finite_difference() {
        let h = 1e-6;
        for sign in [BranchSign::Plus, BranchSign::Minus] {
            let fd = (g_on_curve(-1.0, 0.5 + h, sign).unwrap()
                - g_on_curve(-1.0, 0.5 - h, sign).unwrap())
                / (2.0 * h);
            let an = g_curve_deriv(-1.0, 0.5, sign).unwrap();
            assert!((an - fd).abs() < 1e-6 * an.abs().max(1.0), "{an} vs {fd}");
        }
    }

    #[test]
    fn build_curve_t_minus_one() {
        let model = build_curve(-1.0, 64).unwrap();
        assert_eq!(model.samples.len(), 64);
        assert!((model.y_t - Y_T1).abs() < 1e-12);
        assert!((model.a_t - A_T1).abs() < 1e-10);
        let g_lo = model.samples[0].g_minus;
        let g_hi = model.samples[0].g_plus;
        assert!((g_lo - 0.12487305235783526).abs() < 1e-12);
        assert!((g_hi - 8.008132908727238).abs() < 1e-11);
        assert!((model.junction.g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn build_curve_small_t_product_identity() {
        let model = build_curve(-0.01, 64).unwrap();
        let g_lo = model.samples[0].g_minus;
        let g_hi = model.samples[0].g_plus;
        assert!((g_lo - 0.8186625539183515).abs() < 1e-10);
        assert!((g_hi - 1.2215045078264737).abs() < 1e-10);
        assert!((g_lo * g_hi - 1.0).abs() < 1e-10);
    }

    #[test]
    fn build_curve_validates_many_times() {
        for &t in &[-0.25, -1.0, -4.0] {
            let model = build_curve(t, 1000).unwrap();
            model.validate().unwrap();
        }
    }

    #[test]
    fn build_curve_rejects_small_sample_count() {
        assert!(matches!(build_curve(-1.0, 8), Err(CurveError::InvalidInput(_))));
        assert!(matches!(build_curve(0.5, 64), Err(CurveError::Domain(_))));
    }

    #[test]
    fn curve_csv_shape() {
        let model = build_curve(-1.0, 32).unwrap();
        let csv = model.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "y,x_minus,x_plus,g_minus,g_plus");
        assert_eq!(lines.len(), 33);
    }

    #[test]
    fn curve_json_round_trip() {
        let model = build_curve(-1.0, 16).unwrap();
        let parsed: CurveModel = serde_json::from_str(&model.to_json()).unwrap();
        assert_eq!(parsed.samples.len(), model.samples.len());
        assert_eq!(parsed.y_t, model.y_t);
    }
}
