//! Exact algebra of iterated-logarithm monomials: evaluation,
//! differentiation, asymptotic comparison, and integral-convergence
//! classification. All coefficients and exponents are exact fractions so
//! identities are decided by equality, not tolerance; floating evaluation
//! is derived from the exact form.

mod poly;
mod scalar;
pub mod text;

pub use poly::{
    integral_converges, iter_exp, iter_log, log_derivative, radial_laplacian_ratio, LogAlgError,
    LogMonomial, LogPolynomial, Sign, DOMAIN_MARGIN,
};
pub use scalar::{ExactScalar, ParseScalarError};
pub use text::{format_poly, parse_poly, ParsePolyError};
