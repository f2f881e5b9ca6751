//! Similarities, certified boxes, component hulls, cylinders and point clouds.

mod boxes;
mod hull;
mod similarity;

pub use boxes::CertifiedBox;
pub use hull::{component_hulls, Hulls};
pub use similarity::{Orthogonal, Similarity};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{GifsError, Result};
use crate::exact_arith::{Interval, Rational};
use crate::graph_ifs::{GraphIfs, Path, PATH_CAP};

pub type Point = Vec<Rational>;

/// Hull tolerance used by [`Attractor::new`].
pub const HULL_TOL: f64 = 1e-12;

/// Composition of the maps along a path.
pub fn compose(g: &GraphIfs, path: &Path) -> Similarity {
    let mut it = path.edges.iter();
    let first = g.edge(*it.next().expect("nonempty path")).map.clone();
    it.fold(first, |acc, &i| acc.compose(&g.edge(i).map))
}

/// The image of a component under a path map, with cached data.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub edges: Vec<usize>,
    pub to: usize,
    pub ratio: Rational,
    pub prob: Rational,
    pub map: Similarity,
    pub bx: CertifiedBox,
    pub diam: (Rational, Rational),
}

/// A validated system together with its hulls and anchor points.
#[derive(Debug, Clone)]
pub struct Attractor {
    g: GraphIfs,
    hulls: Hulls,
    anchors: Vec<Point>,
}

/// Enclosing boxes plus points known to lie in the set.
#[derive(Debug, Clone, Default)]
pub struct Cover {
    pub boxes: Vec<CertifiedBox>,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudMode {
    Deterministic,
    Chaos { points: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct Cloud {
    pub depth: usize,
    pub points: Vec<Vec<f64>>,
    /// Exact coordinates (deterministic mode only).
    pub exact: Option<Vec<Point>>,
    pub paths: Vec<Vec<usize>>,
    /// Every point of the component lies within this distance of some cloud point
    /// (deterministic mode only).
    pub resolution: Option<Rational>,
}

impl Attractor {
    pub fn new(g: GraphIfs) -> Result<Self> {
        let report = g.validate();
        if !report.is_valid() {
            return Err(GifsError::Invalid(report));
        }
        let anchors = anchors(&g)?;
        let samples: Vec<Vec<Point>> = if g.dim() == 1 {
            vec![Vec::new(); g.vertex_count()]
        } else {
            (0..g.vertex_count())
                .map(|u| {
                    let mut k = 1;
                    while k < 12 && g.path_count(u, k + 1, None) <= 512 {
                        k += 1;
                    }
                    g.enumerate_paths(u, k, None)
                        .map(|ps| ps.iter().map(|p| compose(&g, p).apply(&anchors[p.to])).collect())
                })
                .collect::<Result<_>>()?
        };
        let hulls = component_hulls(&g, HULL_TOL, &samples)?;
        Ok(Attractor { g, hulls, anchors })
    }

    pub fn graph(&self) -> &GraphIfs {
        &self.g
    }

    pub fn hulls(&self) -> &Hulls {
        &self.hulls
    }

    pub fn is_exact(&self) -> bool {
        self.hulls.exact
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn anchor(&self, v: usize) -> &Point {
        &self.anchors[v]
    }

    pub fn diameter(&self, v: usize) -> &(Rational, Rational) {
        &self.hulls.diameters[v]
    }

    fn cylinder_of_edge(&self, i: usize) -> Cylinder {
        let e = self.g.edge(i);
        let (lo, hi) = &self.hulls.diameters[e.to];
        Cylinder {
            edges: vec![i],
            to: e.to,
            ratio: e.ratio.clone(),
            prob: e.prob.clone(),
            map: e.map.clone(),
            bx: e.map.apply_box(&self.hulls.boxes[e.to]),
            diam: (&e.ratio * lo, &e.ratio * hi),
        }
    }

    /// Length-one cylinders of vertex `u`, in edge-id order.
    pub fn roots(&self, u: usize) -> Vec<Cylinder> {
        self.g.out_edges(u).iter().map(|&i| self.cylinder_of_edge(i)).collect()
    }

    pub fn child(&self, c: &Cylinder, i: usize) -> Cylinder {
        let e = self.g.edge(i);
        debug_assert_eq!(e.from, c.to);
        let map = c.map.compose(&e.map);
        let ratio = &c.ratio * &e.ratio;
        let (lo, hi) = &self.hulls.diameters[e.to];
        let mut edges = c.edges.clone();
        edges.push(i);
        Cylinder {
            bx: map.apply_box(&self.hulls.boxes[e.to]),
            diam: (&ratio * lo, &ratio * hi),
            edges,
            to: e.to,
            prob: &c.prob * &e.prob,
            ratio,
            map,
        }
    }

    pub fn children(&self, c: &Cylinder) -> Vec<Cylinder> {
        self.g.out_edges(c.to).iter().map(|&i| self.child(c, i)).collect()
    }

    pub fn cylinder(&self, path: &Path) -> Cylinder {
        let mut c = self.cylinder_of_edge(path.edges[0]);
        for &i in &path.edges[1..] {
            c = self.child(&c, i);
        }
        c
    }

    /// A point of the set inside the cylinder: the image of the anchor.
    pub fn representative(&self, c: &Cylinder) -> Point {
        c.map.apply(&self.anchors[c.to])
    }

    /// Points of the set known exactly for this cylinder.
    pub fn known_points(&self, c: &Cylinder) -> Vec<Point> {
        if self.is_exact() && self.dim() == 1 {
            vec![c.bx.lo.clone(), c.bx.hi.clone()]
        } else {
            vec![self.representative(c)]
        }
    }

    /// Cylinders of `u` whose certified diameter is below `rho`, lexicographic order.
    /// Never returns the whole component, even when `rho` exceeds its diameter.
    pub fn cover(&self, u: usize, rho: &Rational) -> Result<Vec<Cylinder>> {
        self.cover_from(self.roots(u), rho)
    }

    pub fn cover_from(&self, roots: Vec<Cylinder>, rho: &Rational) -> Result<Vec<Cylinder>> {
        let mut out = Vec::new();
        let mut stack: Vec<Cylinder> = roots.into_iter().rev().collect();
        let mut visits = 0u64;
        while let Some(c) = stack.pop() {
            visits += 1;
            if visits > PATH_CAP {
                return Err(GifsError::PathCap { count: visits as u128, cap: PATH_CAP });
            }
            if &c.diam.1 < rho {
                out.push(c);
            } else {
                let mut kids = self.children(&c);
                kids.reverse();
                stack.extend(kids);
            }
        }
        Ok(out)
    }

    pub fn cover_set(&self, cyls: &[Cylinder]) -> Cover {
        Cover {
            boxes: cyls.iter().map(|c| c.bx.clone()).collect(),
            points: cyls.iter().flat_map(|c| self.known_points(c)).collect(),
        }
    }

    /// Point of the coding map for a finite prefix, with an error radius.
    pub fn code_to_point(&self, path: &Path) -> (Point, Rational) {
        let c = self.cylinder(path);
        let radius = &c.diam.1 + &c.map.error_radius(&self.anchors[c.to]);
        (self.representative(&c), radius)
    }

    /// Depth-`k` point cloud of component `u`.
    pub fn attractor_points(&self, u: usize, depth: usize, mode: CloudMode) -> Result<Cloud> {
        if depth == 0 {
            return Err(GifsError::Domain("depth must be at least 1".into()));
        }
        match mode {
            CloudMode::Deterministic => {
                let paths = self.g.enumerate_paths(u, depth, None)?;
                let exact: Vec<Point> = paths
                    .par_iter()
                    .map(|p| compose(&self.g, p).apply(&self.anchors[p.to]))
                    .collect();
                let (_, r_max) = self.g.ratio_bounds();
                Ok(Cloud {
                    depth,
                    points: exact.iter().map(|p| p.iter().map(Rational::to_f64).collect()).collect(),
                    exact: Some(exact),
                    paths: paths.into_iter().map(|p| p.edges).collect(),
                    resolution: Some(r_max.pow(depth as i32) * self.hulls.d_max()),
                })
            }
            CloudMode::Chaos { points, seed } => {
                let anchors_f: Vec<Vec<f64>> = self.anchors.iter().map(|a| a.iter().map(Rational::to_f64).collect()).collect();
                let probs: Vec<f64> = self.g.edges().iter().map(|e| e.prob.to_f64()).collect();
                let sampled: Vec<(Vec<f64>, Vec<usize>)> = (0..points)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(i as u64);
                        let mut at = u;
                        let mut path = Vec::with_capacity(depth);
                        for _ in 0..depth {
                            let out = self.g.out_edges(at);
                            let mut x: f64 = rng.gen();
                            let mut pick = *out.last().unwrap();
                            for &e in out {
                                if x < probs[e] {
                                    pick = e;
                                    break;
                                }
                                x -= probs[e];
                            }
                            path.push(pick);
                            at = self.g.edge(pick).to;
                        }
                        let mut x = anchors_f[at].clone();
                        for &e in path.iter().rev() {
                            x = self.g.edge(e).map.apply_f64(&x);
                        }
                        (x, path)
                    })
                    .collect();
                let (pts, paths) = sampled.into_iter().unzip();
                Ok(Cloud { depth, points: pts, exact: None, paths, resolution: None })
            }
        }
    }
}

/// Anchor of `u`: fixed point of the lexicographically first shortest cycle at `u`.
fn anchors(g: &GraphIfs) -> Result<Vec<Point>> {
    (0..g.vertex_count())
        .map(|u| {
            for len in 1..=g.vertex_count() {
                if let Some(p) = g.enumerate_paths(u, len, Some(u))?.into_iter().next() {
                    return Ok(compose(g, &p).fixed_point());
                }
            }
            Err(GifsError::Domain(format!("vertex {} lies on no cycle", g.vertex_name(u))))
        })
        .collect()
}

/// Bracket on the distance between two sets given by covers.
///
/// The lower end is the least box-to-box gap; the upper end the least distance
/// between known points (or farthest box corners when no points are known).
pub fn set_distance(a: &Cover, b: &Cover) -> Interval {
    let (lo_sq, hi_sq) = set_distance_sq(a, b);
    Interval::new(lo_sq.sqrt_lower().to_interval().lo, hi_sq.sqrt_upper().to_interval().hi)
}

/// Squared distance bracket in exact arithmetic.
pub fn set_distance_sq(a: &Cover, b: &Cover) -> (Rational, Rational) {
    let lo = a
        .boxes
        .iter()
        .flat_map(|x| b.boxes.iter().map(move |y| x.gap_sq(y)))
        .min()
        .unwrap_or_default();
    let far = a.boxes.iter().flat_map(|x| b.boxes.iter().map(move |y| x.far_sq(y))).min();
    let pts = a
        .points
        .iter()
        .flat_map(|x| b.points.iter().map(move |y| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<Rational>()))
        .min();
    let hi = match (far, pts) {
        (Some(f), Some(p)) => Rational::min(&f, &p),
        (Some(f), None) => f,
        (None, Some(p)) => p,
        (None, None) => Rational::zero(),
    };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn q(a: i64, b: i64) -> Rational {
        Rational::frac(a, b)
    }

    #[test]
    fn compose_examples() {
        let c = fixtures::cantor();
        let p = Path::from_ids(&c, &["e1", "e2"]).unwrap();
        assert_eq!(compose(&c, &p), Similarity::line(q(1, 9), false, q(2, 9)));
        let t = fixtures::halves();
        let p = Path::from_ids(&t, &["e1", "e2"]).unwrap();
        assert_eq!(compose(&t, &p), Similarity::line(q(1, 4), false, q(1, 4)));
    }

    #[test]
    fn hull_examples() {
        for g in [fixtures::cantor(), fixtures::halves(), fixtures::two_vertex(), fixtures::nonlattice()] {
            let a = Attractor::new(g).unwrap();
            for v in 0..a.graph().vertex_count() {
                assert_eq!(a.hulls().boxes[v], CertifiedBox::new(vec![q(0, 1)], vec![q(1, 1)]));
                assert_eq!(a.diameter(v), &(q(1, 1), q(1, 1)));
            }
        }
    }

    #[test]
    fn flipped_hull_is_exact() {
        let g = fixtures::flipped();
        let a = Attractor::new(g).unwrap();
        let b = &a.hulls().boxes[0];
        // x -> -x/3 + 1/3 and x -> x/3 + 2/3 fix [0, 1].
        assert_eq!(b, &CertifiedBox::new(vec![q(0, 1)], vec![q(1, 1)]));
    }

    #[test]
    fn clouds() {
        let a = Attractor::new(fixtures::cantor()).unwrap();
        let c = a.attractor_points(0, 2, CloudMode::Deterministic).unwrap();
        assert_eq!(c.exact.unwrap(), vec![vec![q(0, 1)], vec![q(2, 9)], vec![q(2, 3)], vec![q(8, 9)]]);
        assert_eq!(c.resolution.unwrap(), q(1, 9));
        let c1 = a.attractor_points(0, 1, CloudMode::Deterministic).unwrap();
        assert_eq!(c1.exact.unwrap(), vec![vec![q(0, 1)], vec![q(2, 3)]]);
        let ch = a.attractor_points(0, 12, CloudMode::Chaos { points: 50, seed: 7 }).unwrap();
        let ch2 = a.attractor_points(0, 12, CloudMode::Chaos { points: 50, seed: 7 }).unwrap();
        assert_eq!(ch.points, ch2.points);
        assert!(ch.points.iter().all(|p| (0.0..=1.0).contains(&p[0])));
    }

    #[test]
    fn coding_map() {
        let g = fixtures::cantor();
        let a = Attractor::new(g.clone()).unwrap();
        let ids = |v: &[&str]| Path::from_ids(&g, v).unwrap();
        let (x, r) = a.code_to_point(&ids(&["e1"; 8]));
        assert_eq!((x, r), (vec![q(0, 1)], q(1, 3).pow(8)));
        let (x, r) = a.code_to_point(&ids(&["e2"; 8]));
        assert!((&x[0] - &q(1, 1)).abs() <= r);
        let mut v = vec!["e1"];
        v.extend(["e2"; 10]);
        let (x, r) = a.code_to_point(&ids(&v));
        assert!((&x[0] - &q(1, 3)).abs() <= r);
    }

    #[test]
    fn distance_examples() {
        let a = Attractor::new(fixtures::cantor()).unwrap();
        let roots = a.roots(0);
        let left = a.cover_set(&roots[..1]);
        let right = a.cover_set(&roots[1..]);
        assert_eq!(set_distance_sq(&left, &right), (q(1, 9), q(1, 9)));
        let same = set_distance_sq(&left, &left);
        assert_eq!(same.0, q(0, 1));
        let nl = Attractor::new(fixtures::nonlattice()).unwrap();
        let r = nl.roots(0);
        let d = set_distance_sq(&nl.cover_set(&r[..1]), &nl.cover_set(&r[1..]));
        assert_eq!(d, (q(1, 36), q(1, 36)));
    }

    #[test]
    fn rotated_system_hull_encloses_points() {
        let g = fixtures::rotated_pair();
        let a = Attractor::new(g).unwrap();
        let b = &a.hulls().boxes[0];
        let cloud = a.attractor_points(0, 8, CloudMode::Deterministic).unwrap();
        for p in cloud.exact.unwrap() {
            for i in 0..2 {
                assert!(b.lo[i] <= p[i] && p[i] <= b.hi[i]);
            }
        }
        let (lo, hi) = a.diameter(0);
        assert!(lo <= hi && lo.is_positive());
    }
}
