use num_traits::{One, ToPrimitive};

use crate::exact_arith::Rational;

use super::CertifiedBox;

/// Per-entry error bound on float-evaluated rotation matrices.
fn trig_eta() -> Rational {
    Rational::frac(1, 1 << 40)
}

/// Grid for outward rounding of inexact 2-D data.
const ROUND_BITS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Orthogonal {
    /// `x -> -x` when `flip`.
    Line { flip: bool },
    /// Rotation by `angle` degrees (in `[0, 360)`) after an optional reflection in the x-axis.
    Plane { angle: Rational, reflect: bool },
}

/// `x -> scale * O x + translation`, with `slack` bounding translation error in the sup norm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Similarity {
    pub scale: Rational,
    pub orth: Orthogonal,
    pub translation: Vec<Rational>,
    pub slack: Rational,
}

fn norm_angle(a: &Rational) -> Rational {
    let turns = a.checked_div(&Rational::from_integer(360)).expect("nonzero");
    let fl = turns.floor_dyadic(0);
    a - &(fl * Rational::from_integer(360))
}

pub(crate) type Mat = [[Rational; 2]; 2];

impl Similarity {
    pub fn line(scale: Rational, flip: bool, t: Rational) -> Self {
        Similarity { scale, orth: Orthogonal::Line { flip }, translation: vec![t], slack: Rational::zero() }
    }

    pub fn plane(scale: Rational, angle_deg: Rational, reflect: bool, t: [Rational; 2]) -> Self {
        Similarity {
            scale,
            orth: Orthogonal::Plane { angle: norm_angle(&angle_deg), reflect },
            translation: t.to_vec(),
            slack: Rational::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        match self.orth {
            Orthogonal::Line { .. } => 1,
            Orthogonal::Plane { .. } => 2,
        }
    }

    /// Whether points and boxes are mapped without any approximation.
    pub fn is_exact(&self) -> bool {
        self.slack.is_zero() && self.matrix().1.is_zero()
    }

    /// Orthogonal part as a matrix, with a per-entry error bound (zero for quarter turns).
    pub(crate) fn matrix(&self) -> (Mat, Rational) {
        let z = Rational::zero;
        match &self.orth {
            Orthogonal::Line { flip } => {
                let s = if *flip { -1 } else { 1 };
                ([[Rational::from_integer(s), z()], [z(), z()]], z())
            }
            Orthogonal::Plane { angle, reflect } => {
                let quarter = if angle.denom().is_one() { angle.numer().to_i64() } else { None };
                let (c, s, eta) = match quarter {
                    Some(0) => (Rational::one(), z(), z()),
                    Some(90) => (z(), Rational::one(), z()),
                    Some(180) => (Rational::from_integer(-1), z(), z()),
                    Some(270) => (z(), Rational::from_integer(-1), z()),
                    _ => {
                        let th = angle.to_f64().to_radians();
                        (Rational::from_f64(th.cos()).unwrap(), Rational::from_f64(th.sin()).unwrap(), trig_eta())
                    }
                };
                let sign = if *reflect { Rational::from_integer(-1) } else { Rational::one() };
                ([[c.clone(), -&s * &sign], [s, &c * &sign]], eta)
            }
        }
    }

    fn mat_vec(m: &Mat, x: &[Rational]) -> Vec<Rational> {
        if x.len() == 1 {
            vec![&m[0][0] * &x[0]]
        } else {
            vec![&m[0][0] * &x[0] + &m[0][1] * &x[1], &m[1][0] * &x[0] + &m[1][1] * &x[1]]
        }
    }

    fn l1(x: &[Rational]) -> Rational {
        x.iter().map(|v| v.abs()).sum()
    }

    /// Image of a point (approximate for inexact maps; see [`Similarity::error_radius`]).
    pub fn apply(&self, x: &[Rational]) -> Vec<Rational> {
        let (m, _) = self.matrix();
        Self::mat_vec(&m, x)
            .into_iter()
            .zip(&self.translation)
            .map(|(mx, t)| &self.scale * &mx + t)
            .collect()
    }

    /// Sup-norm bound on `|S(x) - apply(x)|`.
    pub fn error_radius(&self, x: &[Rational]) -> Rational {
        let (_, eta) = self.matrix();
        &self.scale * &eta * Self::l1(x) + &self.slack
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        let s = self.scale.to_f64();
        match &self.orth {
            Orthogonal::Line { flip } => {
                let y = if *flip { -x[0] } else { x[0] };
                vec![s * y + self.translation[0].to_f64()]
            }
            Orthogonal::Plane { angle, reflect } => {
                let th = angle.to_f64().to_radians();
                let (c, sn) = (th.cos(), th.sin());
                let y1 = if *reflect { -x[1] } else { x[1] };
                vec![
                    s * (c * x[0] - sn * y1) + self.translation[0].to_f64(),
                    s * (sn * x[0] + c * y1) + self.translation[1].to_f64(),
                ]
            }
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Similarity) -> Similarity {
        let orth = match (&self.orth, &other.orth) {
            (Orthogonal::Line { flip: a }, Orthogonal::Line { flip: b }) => Orthogonal::Line { flip: a ^ b },
            (Orthogonal::Plane { angle: a, reflect: f }, Orthogonal::Plane { angle: b, reflect: g }) => {
                let b = if *f { -b } else { b.clone() };
                Orthogonal::Plane { angle: norm_angle(&(a + &b)), reflect: f ^ g }
            }
            _ => panic!("composing maps of different dimension"),
        };
        let (m, eta) = self.matrix();
        let mut translation: Vec<Rational> = Self::mat_vec(&m, &other.translation)
            .into_iter()
            .zip(&self.translation)
            .map(|(mt, t)| &self.scale * &mt + t)
            .collect();
        let mut slack = if eta.is_zero() {
            &self.scale * &other.slack + &self.slack
        } else {
            let two = Rational::from_integer(2);
            &self.slack + &self.scale * (&two * &other.slack + &eta * Self::l1(&other.translation))
        };
        if !eta.is_zero() || !slack.is_zero() {
            translation = translation.iter().map(|t| t.floor_dyadic(ROUND_BITS)).collect();
            slack = (slack + Rational::from_integer(2).pow(-(ROUND_BITS as i32))).ceil_dyadic(ROUND_BITS);
        }
        Similarity { scale: &self.scale * &other.scale, orth, translation, slack }
    }

    /// Certified enclosure of the image of a box.
    pub fn apply_box(&self, b: &CertifiedBox) -> CertifiedBox {
        if let Orthogonal::Line { flip } = self.orth {
            let (lo, hi) = (&b.lo[0], &b.hi[0]);
            let t = &self.translation[0];
            let (a, c) = if flip {
                (t - &(&self.scale * hi), t - &(&self.scale * lo))
            } else {
                (&self.scale * lo + t, &self.scale * hi + t)
            };
            return CertifiedBox::new(vec![a - &self.slack], vec![c + &self.slack]);
        }
        let (m, eta) = self.matrix();
        let two = Rational::from_integer(2);
        let c: Vec<Rational> = b.lo.iter().zip(&b.hi).map(|(l, h)| (l + h) / &two).collect();
        let w: Vec<Rational> = b.lo.iter().zip(&b.hi).map(|(l, h)| (h - l) / &two).collect();
        let center = self.apply(&c);
        let err = &self.scale * &eta * (Self::l1(&c) + Self::l1(&w)) + &self.slack;
        let exact = eta.is_zero() && self.slack.is_zero();
        let mut lo = Vec::with_capacity(2);
        let mut hi = Vec::with_capacity(2);
        for i in 0..2 {
            let hw = &self.scale * (m[i][0].abs() * &w[0] + m[i][1].abs() * &w[1]) + &err;
            let (a, z) = (&center[i] - &hw, &center[i] + &hw);
            if exact {
                lo.push(a);
                hi.push(z);
            } else {
                lo.push(a.floor_dyadic(ROUND_BITS));
                hi.push(z.ceil_dyadic(ROUND_BITS));
            }
        }
        CertifiedBox::new(lo, hi)
    }

    /// The unique fixed point (approximate for inexact maps).
    pub fn fixed_point(&self) -> Vec<Rational> {
        let (m, _) = self.matrix();
        let one = Rational::one();
        if self.dim() == 1 {
            let d = &one - &(&self.scale * &m[0][0]);
            return vec![&self.translation[0] / &d];
        }
        // Solve (I - sM) x = t.
        let a = &one - &(&self.scale * &m[0][0]);
        let b = -(&self.scale * &m[0][1]);
        let c = -(&self.scale * &m[1][0]);
        let d = &one - &(&self.scale * &m[1][1]);
        let det = &a * &d - &b * &c;
        let (t0, t1) = (&self.translation[0], &self.translation[1]);
        vec![(&d * t0 - &b * t1) / &det, (&a * t1 - &c * t0) / &det]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Rational {
        Rational::frac(a, b)
    }

    #[test]
    fn line_composition() {
        let s1 = Similarity::line(q(1, 3), false, q(0, 1));
        let s2 = Similarity::line(q(1, 3), false, q(2, 3));
        let c = s1.compose(&s2);
        assert_eq!(c, Similarity::line(q(1, 9), false, q(2, 9)));
        let f = Similarity::line(q(1, 2), true, q(1, 1));
        let ff = f.compose(&f);
        assert_eq!(ff, Similarity::line(q(1, 4), false, q(1, 2)));
        assert_eq!(f.fixed_point(), vec![q(2, 3)]);
    }

    #[test]
    fn quarter_turns_are_exact() {
        let r = Similarity::plane(q(1, 2), q(90, 1), false, [q(1, 1), q(0, 1)]);
        assert!(r.is_exact());
        assert_eq!(r.apply(&[q(1, 1), q(0, 1)]), vec![q(1, 1), q(1, 2)]);
        let rr = r.compose(&r);
        assert_eq!(rr.orth, Orthogonal::Plane { angle: q(180, 1), reflect: false });
        assert_eq!(rr.apply(&[q(0, 1), q(0, 1)]), r.apply(&r.apply(&[q(0, 1), q(0, 1)])));
        let refl = Similarity::plane(q(1, 2), q(0, 1), true, [q(0, 1), q(0, 1)]);
        assert_eq!(refl.apply(&[q(1, 1), q(1, 1)]), vec![q(1, 2), q(-1, 2)]);
    }

    #[test]
    fn orthogonal_composition_rule() {
        let a = Similarity::plane(q(1, 2), q(30, 1), true, [q(0, 1), q(0, 1)]);
        let b = Similarity::plane(q(1, 3), q(45, 1), false, [q(1, 5), q(1, 7)]);
        let ab = a.compose(&b);
        let x = [0.3, -0.7];
        let direct = a.apply_f64(&b.apply_f64(&x));
        let composed = ab.apply_f64(&x);
        assert!((direct[0] - composed[0]).abs() < 1e-14 && (direct[1] - composed[1]).abs() < 1e-14);
        assert!(!ab.is_exact());
    }

    #[test]
    fn rotated_box_is_enclosure() {
        let s = Similarity::plane(q(1, 2), q(30, 1), false, [q(1, 4), q(0, 1)]);
        let b = CertifiedBox::new(vec![q(0, 1), q(0, 1)], vec![q(1, 1), q(1, 1)]);
        let img = s.apply_box(&b);
        for &(x, y) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.5, 0.5)] {
            let p = s.apply_f64(&[x, y]);
            for i in 0..2 {
                assert!(img.lo[i].to_f64() <= p[i] && p[i] <= img.hi[i].to_f64());
            }
        }
    }
}
