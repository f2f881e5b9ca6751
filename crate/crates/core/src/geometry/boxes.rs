use crate::exact_arith::Rational;

/// Axis-aligned box with exact rational bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertifiedBox {
    pub lo: Vec<Rational>,
    pub hi: Vec<Rational>,
}

fn sq(x: &Rational) -> Rational {
    x * x
}

impl CertifiedBox {
    pub fn new(lo: Vec<Rational>, hi: Vec<Rational>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        CertifiedBox { lo, hi }
    }

    pub fn point(x: &[Rational]) -> Self {
        CertifiedBox { lo: x.to_vec(), hi: x.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// `lo < hi` on every axis.
    pub fn is_proper(&self) -> bool {
        self.lo.iter().zip(&self.hi).all(|(l, h)| l < h)
    }

    pub fn hull(&self, o: &CertifiedBox) -> CertifiedBox {
        CertifiedBox {
            lo: self.lo.iter().zip(&o.lo).map(|(a, b)| Rational::min(a, b)).collect(),
            hi: self.hi.iter().zip(&o.hi).map(|(a, b)| Rational::max(a, b)).collect(),
        }
    }

    pub fn intersect(&self, o: &CertifiedBox) -> Option<CertifiedBox> {
        let lo: Vec<Rational> = self.lo.iter().zip(&o.lo).map(|(a, b)| Rational::max(a, b)).collect();
        let hi: Vec<Rational> = self.hi.iter().zip(&o.hi).map(|(a, b)| Rational::min(a, b)).collect();
        lo.iter().zip(&hi).all(|(l, h)| l <= h).then_some(CertifiedBox { lo, hi })
    }

    /// Squared length of the diagonal.
    pub fn diagonal_sq(&self) -> Rational {
        self.lo.iter().zip(&self.hi).map(|(l, h)| sq(&(h - l))).sum()
    }

    pub fn max_side(&self) -> Rational {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).max().unwrap_or_default()
    }

    /// Closed containment of `o` in `self`.
    pub fn contains_box(&self, o: &CertifiedBox) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= o.lo[i] && o.hi[i] <= self.hi[i])
    }

    /// Distance from `inner` to the complement of this box read as an open set
    /// (nonpositive when `inner` is not strictly inside).
    pub fn margin(&self, inner: &CertifiedBox) -> Rational {
        (0..self.dim())
            .flat_map(|i| [&inner.lo[i] - &self.lo[i], &self.hi[i] - &inner.hi[i]])
            .min()
            .unwrap_or_default()
    }

    /// Squared minimal distance between two boxes.
    pub fn gap_sq(&self, o: &CertifiedBox) -> Rational {
        (0..self.dim())
            .map(|i| {
                if self.hi[i] < o.lo[i] {
                    sq(&(&o.lo[i] - &self.hi[i]))
                } else if o.hi[i] < self.lo[i] {
                    sq(&(&self.lo[i] - &o.hi[i]))
                } else {
                    Rational::zero()
                }
            })
            .sum()
    }

    /// Squared maximal distance between points of two boxes.
    pub fn far_sq(&self, o: &CertifiedBox) -> Rational {
        (0..self.dim())
            .map(|i| Rational::max(&(&o.hi[i] - &self.lo[i]).abs(), &(&self.hi[i] - &o.lo[i]).abs()))
            .map(|d| sq(&d))
            .sum()
    }

    pub fn gap_sq_point(&self, x: &[Rational]) -> Rational {
        self.gap_sq(&CertifiedBox::point(x))
    }

    pub fn far_sq_point(&self, x: &[Rational]) -> Rational {
        self.far_sq(&CertifiedBox::point(x))
    }

    pub fn to_f64(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo.iter().map(Rational::to_f64).collect(), self.hi.iter().map(Rational::to_f64).collect())
    }
}
