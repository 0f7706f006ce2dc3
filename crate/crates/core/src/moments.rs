//! Moments m_n(t) of the limiting squared-singular-value distribution, by
//! two independent routes:
//!
//! * the closed-form sum
//!   `m_n(t) = e^{-nt/2}/n * sum_{k=0}^{n-1} (-tn)^k/k! * C(n, k+1)`,
//!   with `m_0 = 1`, evaluated in the log domain for t < 0 where every term
//!   is positive;
//! * the contour integral
//!   `m_n(t) = e^{-nt/2}/(2 pi i n) * \oint e^{-ntz} (1 + 1/z)^n dz`
//!   over a circle around the origin, evaluated by the periodic trapezoid
//!   rule.
//!
//! The two routes share no code path past the scalar library and serve as
//! mutual oracles.

use crate::numerics::{self, NumericsError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Largest x with e^x finite in f64.
const MAX_EXP_ARG: f64 = 709.782712893384;
/// Condition-number threshold past which the alternating (t > 0) sum is
/// reported as catastrophically cancelled rather than returned.
const CANCEL_LIMIT: f64 = 1e6;

#[derive(Debug, Error)]
pub enum MomentError {
    #[error("moment overflows f64: log value {log_value:.6} exceeds exponent range")]
    Overflow { log_value: f64 },
    #[error("alternating sum lost too many digits: condition ratio {condition:.3e} exceeds 1e6")]
    CatastrophicCancellation { condition: f64 },
    #[error("contour result is not real: |Im| = {imag:.3e} vs bound {bound:.3e}; increase nodes or change radius")]
    NonRealResult { imag: f64, bound: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("table invariant violated: {0}")]
    InvariantViolation(String),
}

/// Which evaluation route produced a [`MomentTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Contour,
    Density,
}

/// Moments m_0..m_{n_max} at a fixed time, tagged with the route used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentTable {
    pub t: f64,
    pub method: Method,
    /// (n, m_n(t)) pairs in increasing n, starting at n = 0.
    pub values: Vec<(u32, f64)>,
}

impl MomentTable {
    /// Check the type invariants: m_0 = 1 exactly and, for t < 0, entries
    /// at least 1 and nondecreasing in n.
    pub fn validate(&self) -> Result<(), MomentError> {
        match self.values.first() {
            Some(&(0, m0)) if m0 == 1.0 => {}
            other => {
                return Err(MomentError::InvariantViolation(format!(
                    "first entry must be (0, 1), got {other:?}"
                )))
            }
        }
        if self.t < 0.0 {
            let mut prev = 1.0;
            for &(n, m) in &self.values {
                if m < 1.0 || m < prev {
                    return Err(MomentError::InvariantViolation(format!(
                        "entry n = {n}: {m} breaks monotone growth (prev {prev})"
                    )));
                }
                prev = m;
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,m\n");
        for &(n, m) in &self.values {
            out.push_str(&format!("{n},{m}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    // C(n, k) through log-gamma; exact enough for n well past f64 overflow
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Natural log of m_n(t) for t <= 0, where every term of the closed-form
/// sum is positive and a log-sum-exp is exact to rounding.
///
/// Stays accurate far past the f64 overflow point of m_n itself (n ~ 1e4).
pub fn log_moment_closed_form(n: u32, t: f64) -> Result<f64, MomentError> {
    if t > 0.0 {
        return Err(MomentError::InvalidInput(format!(
            "log-domain evaluation requires t <= 0, got t = {t}"
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    if t == 0.0 {
        // only the k = 0 term survives: C(n,1)/n = 1
        return Ok(0.0);
    }
    let nf = n as f64;
    let ln_tn = (-t * nf).ln();
    let mut logs = Vec::with_capacity(n as usize);
    let mut lgk = 0.0; // ln k!
    for k in 0..n {
        if k > 0 {
            lgk += (k as f64).ln();
        }
        logs.push(k as f64 * ln_tn - lgk + ln_binomial(n, k + 1));
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|&l| (l - max).exp()).sum();
    Ok(-nf * t / 2.0 - nf.ln() + max + sum.ln())
}

/// Closed-form moment m_n(t).
///
/// For t <= 0 the sum is positive-term and computed in the log domain; the
/// result is returned as long as it fits in f64, otherwise the overflow is
/// reported together with the log value. For t > 0 the sum alternates and is
/// evaluated with compensated summation, rejecting results whose condition
/// ratio exceeds 1e6.
pub fn moment_closed_form(n: u32, t: f64) -> Result<f64, MomentError> {
    if n == 0 {
        return Ok(1.0);
    }
    if t <= 0.0 {
        let log = log_moment_closed_form(n, t)?;
        if log > MAX_EXP_ARG {
            return Err(MomentError::Overflow { log_value: log });
        }
        return Ok(log.exp());
    }
    // t > 0: alternating terms, Neumaier-compensated
    let nf = n as f64;
    let mut term = nf; // k = 0: C(n, 1)
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut sum_abs = 0.0;
    for k in 0..n {
        if k > 0 {
            // term_k = term_{k-1} * (-tn)/k * (n-k)/(k+1)
            term *= (-t * nf) / k as f64 * (nf - k as f64) / (k as f64 + 1.0);
        }
        if !term.is_finite() {
            return Err(MomentError::Overflow { log_value: f64::INFINITY });
        }
        sum_abs += term.abs();
        let y = term;
        let s = sum + y;
        comp += if sum.abs() >= y.abs() { (sum - s) + y } else { (y - s) + sum };
        sum = s;
    }
    sum += comp;
    let condition = sum_abs / sum.abs().max(f64::MIN_POSITIVE);
    if condition > CANCEL_LIMIT {
        return Err(MomentError::CatastrophicCancellation { condition });
    }
    let pref = (-nf * t / 2.0).exp() / nf;
    let value = pref * sum;
    if !value.is_finite() {
        return Err(MomentError::Overflow { log_value: -nf * t / 2.0 + sum.abs().ln() - nf.ln() });
    }
    Ok(value)
}

/// Contour radius on which the circle passes through the critical points of
/// `g_t` on the positive axis, keeping the trapezoid sum well conditioned
/// for large n|t|. Falls back to 1/2 when t >= 0.
pub fn default_contour_radius(t: f64) -> f64 {
    if t < 0.0 {
        -0.5 + (0.25 - 1.0 / t).sqrt()
    } else {
        0.5
    }
}

/// Moment m_n(t) by the residue contour
/// `e^{-nt/2}/(2 pi i n) \oint e^{-ntz} (1 + 1/z)^n dz` on |z| = radius.
///
/// The raw trapezoid result must be real up to `1e-10 * (1 + |Re|)`; a larger
/// imaginary residual signals an underresolved or ill-conditioned sum and is
/// reported as [`MomentError::NonRealResult`].
pub fn moment_contour(n: u32, t: f64, radius: f64, nodes: usize) -> Result<f64, MomentError> {
    if n == 0 {
        return Err(MomentError::InvalidInput("contour route requires n >= 1".into()));
    }
    if !(radius > 0.0) {
        return Err(MomentError::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    if nodes < 32 {
        return Err(MomentError::InvalidInput(format!("nodes must be >= 32, got {nodes}")));
    }
    let nf = n as f64;
    let integrand = |theta: f64| -> Complex64 {
        let z = Complex64::from_polar(radius, theta);
        let dz = Complex64::new(0.0, 1.0) * z; // dz/dtheta
        (-nf * t * z).exp() * (1.0 + 1.0 / z).powu(n) * dz
    };
    let integral = numerics::integrate_periodic(integrand, 2.0 * PI, nodes)?;
    // 1/(2 pi i) * integral = integral * (-i) / (2 pi)
    let rotated = integral * Complex64::new(0.0, -1.0) / (2.0 * PI * nf);
    let pref = (-nf * t / 2.0).exp();
    if !pref.is_finite() {
        return Err(MomentError::Overflow { log_value: -nf * t / 2.0 });
    }
    let value = rotated * pref;
    if !value.re.is_finite() {
        return Err(MomentError::Overflow { log_value: nf * t.abs() * radius });
    }
    let bound = 1e-10 * (1.0 + value.re.abs());
    if value.im.abs() > bound {
        return Err(MomentError::NonRealResult { imag: value.im.abs(), bound });
    }
    Ok(value.re)
}

/// Contour moment with the default radius and automatic node doubling until
/// two consecutive doublings agree to 1e-13 relative.
pub fn moment_contour_auto(n: u32, t: f64) -> Result<f64, MomentError> {
    let radius = default_contour_radius(t);
    let mut nodes = 256;
    let mut prev = moment_contour(n, t, radius, nodes)?;
    while nodes <= (1 << 17) {
        nodes *= 2;
        let cur = moment_contour(n, t, radius, nodes)?;
        if (cur - prev).abs() <= 1e-13 * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(MomentError::Numerics(NumericsError::NoConvergence {
        what: "contour node doubling",
        limit: 1 << 17,
    }))
}

/// Assemble m_0..m_{n_max} by the requested route. The n = 0 entry is 1 by
/// definition on every route.
pub fn moment_table(n_max: u32, t: f64, method: Method) -> Result<MomentTable, MomentError> {
    if n_max < 1 {
        return Err(MomentError::InvalidInput("n_max must be >= 1".into()));
    }
    let mut values = Vec::with_capacity(n_max as usize + 1);
    values.push((0u32, 1.0));
    for n in 1..=n_max {
        let m = match method {
            Method::ClosedForm => moment_closed_form(n, t)?,
            Method::Contour => moment_contour_auto(n, t)?,
            Method::Density => crate::density::moment_from_density(t, n, 1e-9)
                .map_err(|e| MomentError::InvalidInput(e.to_string()))?,
        };
        values.push((n, m));
    }
    let table = MomentTable { t, method, values };
    table.validate()?;
    Ok(table)
}
