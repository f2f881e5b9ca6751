//! Exact scalars: big rationals, prime-exponent logarithms, and outward-rounded intervals.

mod interval;
mod logvec;
mod rational;

pub use interval::Interval;
pub use logvec::{discrete_span, log_vector, numeric_dependence, LogVector, Span, FACTOR_BOUND};
pub use rational::Rational;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("logarithm of a non-positive value")]
    NonPositive,
    #[error("prime factor above {bound} in {value}; exact mode unavailable")]
    Undecidable { value: String, bound: u64 },
}
