use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{ArithError, Rational};

/// Trial-division bound for exact factorization.
pub const FACTOR_BOUND: u64 = 1_000_000;

/// `ln x` of a positive rational as an integer combination of prime logs.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LogVector {
    exps: BTreeMap<u64, i64>,
}

impl LogVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (u64, i64)>>(pairs: I) -> Self {
        let mut v = LogVector::zero();
        for (p, e) in pairs {
            v.bump(p, e);
        }
        v
    }

    fn bump(&mut self, p: u64, e: i64) {
        let slot = self.exps.entry(p).or_insert(0);
        *slot += e;
        if *slot == 0 {
            self.exps.remove(&p);
        }
    }

    pub fn exponents(&self) -> &BTreeMap<u64, i64> {
        &self.exps
    }

    pub fn exponent(&self, p: u64) -> i64 {
        self.exps.get(&p).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn scale(&self, k: i64) -> Self {
        if k == 0 {
            return LogVector::zero();
        }
        LogVector { exps: self.exps.iter().map(|(&p, &e)| (p, e * k)).collect() }
    }

    /// Float value of the represented logarithm.
    pub fn ln(&self) -> f64 {
        self.exps.iter().map(|(&p, &e)| e as f64 * (p as f64).ln()).sum()
    }

    /// The rational `exp` of this vector.
    pub fn to_rational(&self) -> Rational {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (&p, &e) in &self.exps {
            let pp = num_traits::pow(BigInt::from(p), e.unsigned_abs() as usize);
            if e > 0 { num *= pp } else { den *= pp }
        }
        Rational::from_big(num, den).expect("nonzero")
    }

    /// `k` with `self == k * other`, if one exists.
    pub fn multiple_of(&self, other: &LogVector) -> Option<i64> {
        let (&p, &d) = other.exps.iter().next()?;
        let e = self.exponent(p);
        if e % d != 0 {
            return None;
        }
        let k = e / d;
        (other.scale(k) == *self).then_some(k)
    }

    fn content(&self) -> i64 {
        self.exps.values().fold(0i64, |g, &e| g.gcd(&e))
    }
}

impl Add for &LogVector {
    type Output = LogVector;
    fn add(self, rhs: &LogVector) -> LogVector {
        let mut out = self.clone();
        for (&p, &e) in &rhs.exps {
            out.bump(p, e);
        }
        out
    }
}

impl Sub for &LogVector {
    type Output = LogVector;
    fn sub(self, rhs: &LogVector) -> LogVector {
        self + &(-rhs)
    }
}

impl Neg for &LogVector {
    type Output = LogVector;
    fn neg(self) -> LogVector {
        self.scale(-1)
    }
}

impl fmt::Debug for LogVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.exps.iter()).finish()
    }
}

impl fmt::Display for LogVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&p, &e) in &self.exps {
            if !first {
                write!(f, "{}", if e < 0 { " - " } else { " + " })?;
            } else if e < 0 {
                write!(f, "-")?;
            }
            first = false;
            match e.abs() {
                1 => write!(f, "ln{p}")?,
                k => write!(f, "{k}ln{p}")?,
            }
        }
        Ok(())
    }
}

fn factor_into(n: &BigInt, sign: i64, out: &mut LogVector, original: &Rational) -> Result<(), ArithError> {
    let mut n: BigUint = n.magnitude().clone();
    if let Some(mut small) = n.to_u64() {
        let mut p = 2u64;
        while p <= FACTOR_BOUND && p.saturating_mul(p) <= small {
            while small % p == 0 {
                small /= p;
                out.bump(p, sign);
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if small > 1 {
            if small > FACTOR_BOUND {
                return Err(undecidable(original));
            }
            out.bump(small, sign);
        }
        return Ok(());
    }
    let mut p = 2u64;
    while p <= FACTOR_BOUND {
        if (&n % p).is_zero() {
            n /= p;
            out.bump(p, sign);
            continue;
        }
        if let Some(small) = n.to_u64() {
            let mut rest = LogVector::zero();
            factor_into(&BigInt::from(small), sign, &mut rest, original)?;
            *out = &*out + &rest;
            return Ok(());
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n.is_one() { Ok(()) } else { Err(undecidable(original)) }
}

fn undecidable(x: &Rational) -> ArithError {
    ArithError::Undecidable { value: x.to_string(), bound: FACTOR_BOUND }
}

/// Exact `ln x` of a positive rational.
pub fn log_vector(x: &Rational) -> Result<LogVector, ArithError> {
    if !x.is_positive() {
        return Err(ArithError::NonPositive);
    }
    let mut out = LogVector::zero();
    factor_into(x.numer(), 1, &mut out, x)?;
    factor_into(x.denom(), -1, &mut out, x)?;
    Ok(out)
}

/// Generator of a discrete additive group, with each input's integer multiplier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub generator: LogVector,
    pub multipliers: Vec<i64>,
}

/// Span of the group generated by `vs`, or `None` when that group is dense.
///
/// Prime logs are independent over the rationals, so the group is discrete exactly
/// when all vectors are parallel. The generator is oriented to have positive log.
pub fn discrete_span(vs: &[LogVector]) -> Option<Span> {
    let first = vs.iter().find(|v| !v.is_zero())?;
    let c = first.content();
    let mut dir = LogVector { exps: first.exps.iter().map(|(&p, &e)| (p, e / c)).collect() };
    if dir.ln() < 0.0 {
        dir = -&dir;
    }
    let ks: Vec<i64> = vs.iter().map(|v| v.multiple_of(&dir)).collect::<Option<_>>()?;
    let g = ks.iter().fold(0i64, |g, &k| g.gcd(&k));
    if g == 0 {
        return None;
    }
    Some(Span { generator: dir.scale(g), multipliers: ks.iter().map(|k| k / g).collect() })
}

/// Floating fallback: detects a common span among positive reals by continued fractions.
///
/// Returns the span and integer multipliers when every ratio to the first value is a
/// rational with denominator at most `10^4` within relative tolerance `tol`.
pub fn numeric_dependence(values: &[f64], tol: f64) -> Option<(f64, Vec<i64>)> {
    let base = *values.first()?;
    if base == 0.0 || !base.is_finite() {
        return None;
    }
    let mut fracs = Vec::with_capacity(values.len());
    for &v in values {
        fracs.push(best_fraction(v / base, tol, 10_000)?);
    }
    let lcm = fracs.iter().try_fold(1i64, |l, &(_, q)| {
        let m = l.lcm(&q);
        (m <= 1_000_000_000).then_some(m)
    })?;
    let ns: Vec<i64> = fracs.iter().map(|&(p, q)| p * (lcm / q)).collect();
    let g = ns.iter().fold(0i64, |g, &n| g.gcd(&n));
    if g == 0 {
        return None;
    }
    let mut span = g as f64 * base / lcm as f64;
    let mut mult: Vec<i64> = ns.iter().map(|n| n / g).collect();
    if span < 0.0 {
        span = -span;
        mult.iter_mut().for_each(|m| *m = -*m);
    }
    Some((span, mult))
}

fn best_fraction(x: f64, tol: f64, max_den: i64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a.abs() > 1e12 {
            return None;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol * x.abs().max(1e-300) {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a as f64;
        if frac == 0.0 {
            return None;
        }
        y = 1.0 / frac;
    }
    None
}
