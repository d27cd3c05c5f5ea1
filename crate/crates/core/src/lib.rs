//! Monte Carlo laboratory for Bessel flows of dimension `δ > 1`.
//!
//! The crate simulates coupled families `x ↦ ρ^x` of Bessel processes driven
//! by one Brownian path, computes flow derivatives both from the closed-form
//! exponential representation and from pathwise variational equations, and
//! checks distributional limit laws (Dufresne, first zero, Spitzer-type
//! limits) with Kolmogorov–Smirnov tests, slope fits and bootstrap moments.
//!
//! Modules:
//! - [`sde`]: noise, Euler-type schemes with singular drift, flow bundles,
//!   hitting times, exact squared-Bessel marginals.
//! - [`flow`]: `h`, `Y`, increment ratios, the differential polynomials
//!   `P_n`, higher derivatives by two routes, bound statistics.
//! - [`laws`]: analytic samplers and distribution functions.
//! - [`stats`]: KS tests, slope regression, bootstrap moment estimates.
//! - [`experiments`]: one config-driven experiment per limit theorem, and
//!   the acceptance suite.

pub mod error;
pub mod experiments;
pub mod flow;
pub mod laws;
pub mod sde;
pub mod stats;

mod par;

pub use error::{Error, Result};
