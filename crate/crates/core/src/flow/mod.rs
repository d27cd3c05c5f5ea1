//! Flow calculus: `h`, `Y`, increment ratios, the polynomials `P_n`,
//! derivatives of every order along a path and the bound statistics.

mod bell;
mod bounds;
mod quadrature;
mod stack;

pub use bell::{bell_polynomials, partition_coefficients, BellPolynomial, MultiIndex};
pub use bounds::{
    bound_statistics, majoration_ratio, u_statistics, BoundStatistics, TruncationRule, UStatistics,
};
pub use quadrature::{
    first_derivative, h_process, increment_ratio, integral_inverse_square, power_integral,
    IncrementRatio,
};
pub use stack::{variational_stack, variational_stack_at, variational_stack_with, DerivativeStack, ROUTE_TOLERANCE};
