use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{ArithError, Interval};

/// Arbitrary-precision rational, always in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self, ArithError> {
        if den == 0 {
            return Err(ArithError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(num.into(), den.into())))
    }

    /// Panicking constructor for literals known to be valid.
    pub fn frac(num: i64, den: i64) -> Self {
        Self::new(num, den).expect("nonzero denominator")
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Result<Self, ArithError> {
        if den.is_zero() {
            return Err(ArithError::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(num, den)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// Parses `"a/b"` or `"a"`.
    pub fn parse(text: &str) -> Result<Self, ArithError> {
        let bad = || ArithError::Malformed(text.to_string());
        let t = text.trim();
        let (n, d) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let num: BigInt = n.parse().map_err(|_| bad())?;
        if d.starts_with('-') || d.starts_with('+') {
            return Err(bad());
        }
        let den: BigInt = d.parse().map_err(|_| bad())?;
        Self::from_big(num, den)
    }

    /// Exact value of a finite float.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Rational)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Result<Self, ArithError> {
        if self.is_zero() {
            return Err(ArithError::ZeroDenominator);
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn checked_div(&self, other: &Rational) -> Result<Self, ArithError> {
        if other.is_zero() {
            return Err(ArithError::ZeroDenominator);
        }
        Ok(Rational(&self.0 / &other.0))
    }

    pub fn pow(&self, k: i32) -> Self {
        Rational(num_traits::Pow::pow(&self.0, k))
    }

    pub fn min(a: &Rational, b: &Rational) -> Rational {
        if a <= b { a.clone() } else { b.clone() }
    }

    pub fn max(a: &Rational, b: &Rational) -> Rational {
        if a >= b { a.clone() } else { b.clone() }
    }

    /// Nearest float (num-rational handles huge numerators and denominators).
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or_else(|| {
            if self.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY }
        })
    }

    /// Float enclosure, one ulp outward.
    pub fn to_interval(&self) -> Interval {
        let x = self.to_f64();
        match Rational::from_f64(x) {
            Some(back) if back == *self => Interval::point(x),
            _ => Interval::new(x.next_down(), x.next_up()),
        }
    }

    /// Natural log of a positive rational, accurate even when the value underflows f64.
    pub fn ln(&self) -> f64 {
        assert!(self.is_positive(), "ln of non-positive rational");
        big_ln(self.numer()) - big_ln(self.denom())
    }

    /// Largest multiple of `2^-bits` not above the value.
    pub fn floor_dyadic(&self, bits: u32) -> Rational {
        let scale = BigInt::one() << bits;
        let n = (self.numer() * &scale).div_floor(self.denom());
        Rational(BigRational::new(n, scale))
    }

    /// Smallest multiple of `2^-bits` not below the value.
    pub fn ceil_dyadic(&self, bits: u32) -> Rational {
        -(-self).floor_dyadic(bits)
    }

    /// Square root when numerator and denominator are perfect squares.
    pub fn sqrt_exact(&self) -> Option<Rational> {
        if self.is_negative() {
            return None;
        }
        let (a, b) = (self.numer().sqrt(), self.denom().sqrt());
        (&(&a * &a) == self.numer() && &(&b * &b) == self.denom()).then(|| Rational(BigRational::new(a, b)))
    }

    /// Rational upper bound on the square root of a nonnegative rational.
    pub fn sqrt_upper(&self) -> Rational {
        if self.is_zero() {
            return Rational::zero();
        }
        if let Some(r) = self.sqrt_exact() {
            return r;
        }
        let s = self.to_f64().sqrt();
        let mut cand = Rational::from_f64(s.next_up().next_up()).expect("finite");
        while &(&cand * &cand) < self {
            cand = &cand * &Rational::frac(1025, 1024);
        }
        cand
    }

    /// Rational lower bound on the square root of a nonnegative rational.
    pub fn sqrt_lower(&self) -> Rational {
        if self.is_zero() {
            return Rational::zero();
        }
        if let Some(r) = self.sqrt_exact() {
            return r;
        }
        let s = self.to_f64().sqrt();
        let mut cand = Rational::from_f64(s.next_down().next_down().max(0.0)).expect("finite");
        while &(&cand * &cand) > self {
            cand = &cand * &Rational::frac(1023, 1024);
        }
        cand
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }
}

fn big_ln(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().expect("fits").ln();
    }
    let shift = bits - 60;
    let top: BigInt = n >> shift;
    top.to_f64().expect("fits").ln() + shift as f64 * std::f64::consts::LN_2
}

impl FromStr for Rational {
    type Err = ArithError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rational::parse(s)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational($tr::$m(&self.0, &rhs.0))
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational($tr::$m(self.0, rhs.0))
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational($tr::$m(self.0, &rhs.0))
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational($tr::$m(&self.0, rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
// Division by zero panics; use `checked_div` on untrusted operands.
binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

impl std::iter::Product for Rational {
    fn product<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::one(), |a, b| a * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_reduce() {
        assert_eq!(Rational::parse("1/3").unwrap(), Rational::frac(1, 3));
        assert_eq!(Rational::parse("2/6").unwrap(), Rational::frac(1, 3));
        assert_eq!(Rational::parse(" 5 ").unwrap(), Rational::from_integer(5));
        assert_eq!(Rational::parse("-4/8").unwrap(), Rational::frac(-1, 2));
        assert_eq!(Rational::parse("3/0"), Err(ArithError::ZeroDenominator));
        assert!(matches!(Rational::parse("1/x"), Err(ArithError::Malformed(_))));
        assert!(matches!(Rational::parse("1/-3"), Err(ArithError::Malformed(_))));
        assert!(matches!(Rational::parse(""), Err(ArithError::Malformed(_))));
    }

    #[test]
    fn display_round_trip() {
        for s in ["1/3", "7", "-2/5", "10000000000000000000000000001/3"] {
            assert_eq!(Rational::parse(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn deep_products_stay_exact() {
        let third = Rational::frac(1, 3);
        let p = third.pow(60);
        assert_eq!(p.denom().to_string(), "42391158275216203514294433201");
        assert!((p.ln() + 60.0 * 3f64.ln()).abs() < 1e-9);
        let tiny = Rational::frac(1, 7).pow(500);
        assert!((tiny.ln() + 500.0 * 7f64.ln()).abs() < 1e-9);
        assert_eq!(tiny.to_f64(), 0.0);
    }

    #[test]
    fn dyadic_rounding_brackets() {
        let x = Rational::frac(1, 3);
        let lo = x.floor_dyadic(10);
        let hi = x.ceil_dyadic(10);
        assert!(lo < x && x < hi);
        assert_eq!(&hi - &lo, Rational::frac(1, 1024));
    }

    #[test]
    fn sqrt_bounds() {
        for v in [Rational::frac(2, 1), Rational::frac(1, 9), Rational::frac(5, 7)] {
            let lo = v.sqrt_lower();
            let hi = v.sqrt_upper();
            assert!(&lo * &lo <= v && v <= &hi * &hi);
            assert!((hi.to_f64() - lo.to_f64()) < 1e-14);
        }
        assert_eq!(Rational::frac(1, 4).sqrt_upper(), Rational::frac(1, 2));
        assert_eq!(Rational::frac(1, 36).sqrt_lower(), Rational::frac(1, 6));
        assert_eq!(Rational::frac(2, 9).sqrt_exact(), None);
    }

    #[test]
    fn interval_encloses() {
        let x = Rational::frac(1, 3);
        let iv = x.to_interval();
        assert!(iv.lo < iv.hi);
        assert!(Rational::from_f64(iv.lo).unwrap() <= x);
        assert!(Rational::from_f64(iv.hi).unwrap() >= x);
        assert_eq!(Rational::frac(1, 4).to_interval(), Interval::point(0.25));
    }
}
