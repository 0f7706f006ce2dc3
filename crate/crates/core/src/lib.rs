//! Large-dimension limiting spectral distribution nu_t (t < 0) of Z*Z for
//! Brownian motion on the complex linear group GL(d, C).
//!
//! The library computes the moments of nu_t by three independent routes —
//! a closed-form sum, a residue contour integral, and quadrature against the
//! reconstructed density — builds the Jordan curve on which the generating
//! map g_t(z) = e^{-t(z+1/2)}(1 + 1/z) is real and positive, recovers the
//! density by monotone inversion of g_t along that curve, and validates the
//! limit against finite-d Monte Carlo of the matrix Brownian motion.
//!
//! Modules:
//! * [`numerics`] — bracketed root finding and 1-d quadrature
//! * [`moments`] — closed-form and contour evaluation of m_n(t)
//! * [`curve`] — the curve gamma_t: gate function, branches, g on the curve
//! * [`density`] — support, inversion, density, CDF/quantiles, moment recovery
//! * [`simulate`] — GL(d, C) Monte Carlo and comparison reports

extern crate blas_src;

pub mod curve;
pub mod density;
pub mod moments;
pub mod numerics;
pub mod simulate;
