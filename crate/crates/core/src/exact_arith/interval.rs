use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Closed float interval; every operation widens by one ulp on each side.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64) -> f64 {
    if x.is_finite() { x.next_down() } else { x }
}

fn up(x: f64) -> f64 {
    if x.is_finite() { x.next_up() } else { x }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Interval around a float result whose true value is within one rounding.
    pub fn around(x: f64) -> Self {
        Interval { lo: down(x), hi: up(x) }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, o: &Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    pub fn intersects(&self, o: &Interval) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }

    pub fn hull(&self, o: &Interval) -> Interval {
        Interval { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    pub fn scale(&self, k: f64) -> Interval {
        let (a, b) = (self.lo * k, self.hi * k);
        Interval { lo: down(a.min(b)), hi: up(a.max(b)) }
    }

    /// Monotone increasing image.
    fn inc(&self, f: impl Fn(f64) -> f64) -> Interval {
        Interval { lo: down(f(self.lo)), hi: up(f(self.hi)) }
    }

    pub fn exp(&self) -> Interval {
        let mut r = self.inc(f64::exp);
        r.lo = r.lo.max(0.0);
        r
    }

    pub fn ln(&self) -> Interval {
        self.inc(f64::ln)
    }

    /// `x^p` for `x >= 0`; `0^p` is treated as `+inf` when `p < 0`.
    pub fn powf(&self, p: f64) -> Interval {
        assert!(self.lo >= 0.0, "powf of interval with negative part");
        if p == 0.0 {
            return Interval::point(1.0);
        }
        let (a, b) = (self.lo.powf(p), self.hi.powf(p));
        let r = Interval { lo: down(a.min(b)).max(0.0), hi: up(a.max(b)) };
        r
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo + o.lo), hi: up(self.hi + o.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo - o.hi), hi: up(self.hi - o.lo) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: down(lo), hi: up(hi) }
    }
}

impl std::iter::Sum for Interval {
    fn sum<I: Iterator<Item = Interval>>(iter: I) -> Self {
        iter.fold(Interval::point(0.0), |a, b| a + b)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_encloses() {
        let a = Interval::new(0.1, 0.2);
        let b = Interval::new(-0.3, 0.4);
        let s = a + b;
        assert!(s.lo <= -0.2 && s.hi >= 0.6);
        let p = a * b;
        assert!(p.lo <= -0.06 && p.hi >= 0.08);
        assert!((a - a).contains(0.0));
        assert!(Interval::point(1.0).exp().contains(std::f64::consts::E));
    }

    #[test]
    fn powers() {
        let x = Interval::new(0.25, 0.5);
        assert!(x.powf(2.0).contains(0.0625) && x.powf(2.0).contains(0.25));
        assert!(x.powf(-1.0).contains(2.0) && x.powf(-1.0).contains(4.0));
        assert_eq!(x.powf(0.0), Interval::point(1.0));
        assert_eq!(Interval::new(0.0, 1.0).powf(-1.0).hi, f64::INFINITY);
    }
}
