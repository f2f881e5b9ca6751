//! Self-similar measures: exact cylinder masses and certified ball brackets.

use crate::exact_arith::{Interval, Rational};
use crate::geometry::{Attractor, Cylinder};
use crate::graph_ifs::Path;

pub const DEPTH_CAP: usize = 40;

/// Certified bracket on `μ_u(B(x,r))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_exact: Rational,
    pub hi_exact: Rational,
    /// Number of halvings of the refinement scale that were used.
    pub refinement_depth: usize,
    pub converged: bool,
}

impl MeasureInterval {
    fn new(lo: Rational, hi: Rational, depth: usize, converged: bool) -> Self {
        MeasureInterval {
            lo: lo.to_interval().lo.max(0.0),
            hi: hi.to_interval().hi.min(1.0),
            lo_exact: lo,
            hi_exact: hi,
            refinement_depth: depth,
            converged,
        }
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        (&(&self.lo_exact + &self.hi_exact) * &Rational::frac(1, 2)).to_f64()
    }
}

/// Mass of a cylinder: the product of edge probabilities.
pub fn cylinder_measure(path: &Path) -> Rational {
    path.prob.clone()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Inside,
    Outside,
    Straddles,
}

fn classify(c: &Cylinder, x: &[Rational], r2: &Rational) -> Side {
    if &c.bx.far_sq_point(x) <= r2 {
        Side::Inside
    } else if &c.bx.gap_sq_point(x) > r2 {
        Side::Outside
    } else {
        Side::Straddles
    }
}

/// Bracket on the measure of the closed ball `B(x, r)` under `μ_u`.
///
/// Cylinders whose enclosing box lies in the ball count toward the lower end;
/// cylinders whose box meets the ball count toward the upper end. The refinement
/// scale halves each round until the bracket width is at most `tol` or
/// `depth_cap` rounds have run.
pub fn ball_measure(att: &Attractor, u: usize, x: &[Rational], r: &Rational, tol: &Rational, depth_cap: usize) -> MeasureInterval {
    let r2 = r * r;
    let hull = &att.hulls().boxes[u];
    if hull.far_sq_point(x) <= r2 {
        return MeasureInterval::new(Rational::one(), Rational::one(), 0, true);
    }
    if hull.gap_sq_point(x) > r2 {
        return MeasureInterval::new(Rational::zero(), Rational::zero(), 0, true);
    }
    let mut inside = Rational::zero();
    let mut frontier = att.roots(u);
    let mut rho = r.clone();
    let half = Rational::frac(1, 2);
    for depth in 0..=depth_cap {
        let mut next = Vec::with_capacity(frontier.len());
        let mut pending = frontier;
        // Refine every straddling cylinder down to the current scale.
        while let Some(c) = pending.pop() {
            match classify(&c, x, &r2) {
                Side::Inside => inside = &inside + &c.prob,
                Side::Outside => {}
                Side::Straddles if c.diam.1 >= rho => pending.extend(att.children(&c)),
                Side::Straddles => next.push(c),
            }
        }
        let open: Rational = next.iter().map(|c| &c.prob).sum();
        if &open <= tol {
            return MeasureInterval::new(inside.clone(), &inside + &open, depth, true);
        }
        if depth == depth_cap {
            return MeasureInterval::new(inside.clone(), &inside + &open, depth, false);
        }
        frontier = next;
        rho = &rho * &half;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn q(a: i64, b: i64) -> Rational {
        Rational::frac(a, b)
    }

    #[test]
    fn cylinder_examples() {
        let c = fixtures::cantor();
        assert_eq!(cylinder_measure(&Path::from_ids(&c, &["e1"]).unwrap()), q(1, 2));
        let w = fixtures::cantor_biased();
        assert_eq!(cylinder_measure(&Path::from_ids(&w, &["e1", "e2"]).unwrap()), q(3, 16));
        let total: Rational = w.enumerate_paths(0, 5, None).unwrap().iter().map(cylinder_measure).sum();
        assert_eq!(total, Rational::one());
    }

    #[test]
    fn ball_examples() {
        let c = Attractor::new(fixtures::cantor()).unwrap();
        let m = ball_measure(&c, 0, &[q(0, 1)], &q(1, 3), &q(1, 1000), DEPTH_CAP);
        assert_eq!((m.lo_exact.clone(), m.hi_exact.clone()), (q(1, 2), q(1, 2)));
        let t = Attractor::new(fixtures::halves()).unwrap();
        let m = ball_measure(&t, 0, &[q(1, 4)], &q(1, 10), &q(1, 1000), DEPTH_CAP);
        assert!(m.lo <= 0.2 && 0.2 <= m.hi && m.width() <= 1e-3 && m.converged);
        let m = ball_measure(&c, 0, &[q(2, 3)], &q(3, 2), &q(1, 1000), DEPTH_CAP);
        assert_eq!(m.lo, 1.0);
    }

    #[test]
    fn cantor_quarter() {
        let c = Attractor::new(fixtures::cantor()).unwrap();
        let m = ball_measure(&c, 0, &[q(0, 1)], &q(1, 6), &q(1, 10_000), DEPTH_CAP);
        assert_eq!(m.lo_exact, q(1, 4));
        assert_eq!(m.hi_exact, q(1, 4));
    }

    #[test]
    fn refinement_narrows() {
        let t = Attractor::new(fixtures::two_vertex()).unwrap();
        let x = [q(3, 10)];
        let r = q(1, 7);
        let mut last = f64::INFINITY;
        for cap in 0..12 {
            let m = ball_measure(&t, 0, &x, &r, &q(0, 1), cap);
            assert!(m.width() <= last);
            last = m.width();
        }
        assert!(last < 1e-2);
    }
}
