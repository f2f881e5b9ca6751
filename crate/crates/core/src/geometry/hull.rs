use crate::error::{GifsError, Result};
use crate::exact_arith::{Interval, Rational};
use crate::graph_ifs::GraphIfs;

use super::{CertifiedBox, Orthogonal, Point};

/// Per-vertex enclosing boxes and diameter brackets.
#[derive(Debug, Clone)]
pub struct Hulls {
    pub boxes: Vec<CertifiedBox>,
    /// `(lower, upper)` rational bounds on `|F_v|`.
    pub diameters: Vec<(Rational, Rational)>,
    /// True when boxes are the exact convex hulls and diameters are exact.
    pub exact: bool,
}

impl Hulls {
    pub fn diameter_interval(&self, v: usize) -> Interval {
        let (lo, hi) = &self.diameters[v];
        Interval::new(lo.to_interval().lo, hi.to_interval().hi)
    }

    pub fn d_min(&self) -> Rational {
        self.diameters.iter().map(|d| d.0.clone()).min().expect("vertices")
    }

    pub fn d_max(&self) -> Rational {
        self.diameters.iter().map(|d| d.1.clone()).max().expect("vertices")
    }
}

/// Enclosing boxes of the components, as the fixed point of the hull operator.
///
/// In one dimension the result is the exact convex hull. In two dimensions the
/// boxes are certified enclosures and the diameter lower bound comes from the
/// sample points in `samples`; the bracket width there is not controlled by `tol`.
pub fn component_hulls(g: &GraphIfs, tol: f64, samples: &[Vec<Point>]) -> Result<Hulls> {
    if g.dim() == 1 {
        hulls_1d(g)
    } else {
        hulls_2d(g, tol, samples)
    }
}

struct Affine {
    // value = c + s * var
    c: Rational,
    s: Rational,
    var: usize,
}

/// Index of the lower (or upper) bound of `axis` at vertex `v` among `2 * dim * n` unknowns.
fn var(n: usize, axis: usize, upper: bool, v: usize) -> usize {
    (2 * axis + upper as usize) * n + v
}

/// Lower and upper bound of the image box along `axis`, as affine terms. Exact maps only.
fn hull_terms(g: &GraphIfs, e: usize, axis: usize) -> (Affine, Affine) {
    let n = g.vertex_count();
    let edge = g.edge(e);
    let m = &edge.map;
    let (mat, _) = m.matrix();
    let j = (0..g.dim()).find(|&j| !mat[axis][j].is_zero()).expect("orthogonal row");
    let a = &m.scale * &mat[axis][j];
    let t = m.translation[axis].clone();
    let v = edge.to;
    let (l, h) = if a.is_positive() { (false, true) } else { (true, false) };
    (Affine { c: t.clone(), s: a.clone(), var: var(n, j, l, v) }, Affine { c: t, s: a, var: var(n, j, h, v) })
}

fn eval(a: &Affine, x: &[Rational]) -> Rational {
    &a.c + &(&a.s * &x[a.var])
}

fn boxes_of(n: usize, dim: usize, x: &[Rational]) -> Vec<CertifiedBox> {
    (0..n)
        .map(|u| CertifiedBox::new((0..dim).map(|i| x[var(n, i, false, u)].clone()).collect(), (0..dim).map(|i| x[var(n, i, true, u)].clone()).collect()))
        .collect()
}

/// Exact bounding boxes by policy iteration, started from approximate values `x`.
fn exact_boxes(g: &GraphIfs, x: Vec<Rational>) -> Result<Vec<CertifiedBox>> {
    let (n, dim) = (g.vertex_count(), g.dim());
    let picks = |x: &[Rational]| -> Vec<(usize, usize)> { (0..dim).flat_map(|a| (0..n).map(move |u| (a, u))).map(|(a, u)| pick(g, u, a, x)).collect() };
    let mut policy = picks(&x);
    for _ in 0..200 {
        let x = solve_policy(g, &policy)?;
        let next = picks(&x);
        let value = |p: (usize, usize), a: usize| (eval(&hull_terms(g, p.0, a).0, &x), eval(&hull_terms(g, p.1, a).1, &x));
        let stable = (0..dim * n).all(|k| value(policy[k], k / n) == value(next[k], k / n));
        if stable {
            return Ok(boxes_of(n, dim, &x));
        }
        policy = next;
    }
    Err(GifsError::NoConvergence("hull policy iteration".into()))
}

fn hulls_1d(g: &GraphIfs) -> Result<Hulls> {
    let n = g.vertex_count();
    // Float iteration to pick the extremal edges.
    let mut lo = vec![0.0f64; n];
    let mut hi = vec![0.0f64; n];
    for _ in 0..20_000 {
        let mut nlo = vec![f64::INFINITY; n];
        let mut nhi = vec![f64::NEG_INFINITY; n];
        for u in 0..n {
            for &e in g.out_edges(u) {
                let m = &g.edge(e).map;
                let v = g.edge(e).to;
                let s = m.scale.to_f64();
                let t = m.translation[0].to_f64();
                let (a, b) = if matches!(m.orth, Orthogonal::Line { flip: true }) {
                    (t - s * hi[v], t - s * lo[v])
                } else {
                    (t + s * lo[v], t + s * hi[v])
                };
                nlo[u] = nlo[u].min(a);
                nhi[u] = nhi[u].max(b);
            }
        }
        let delta = (0..n).map(|u| (nlo[u] - lo[u]).abs().max((nhi[u] - hi[u]).abs())).fold(0.0, f64::max);
        lo = nlo;
        hi = nhi;
        if delta == 0.0 {
            break;
        }
    }
    let float_x: Vec<Rational> = lo.iter().chain(&hi).map(|&x| Rational::from_f64(x).unwrap()).collect();
    let boxes = exact_boxes(g, float_x)?;
    let diameters = boxes.iter().map(|b| {
        let d = &b.hi[0] - &b.lo[0];
        (d.clone(), d)
    }).collect();
    Ok(Hulls { boxes, diameters, exact: true })
}

fn pick(g: &GraphIfs, u: usize, axis: usize, x: &[Rational]) -> (usize, usize) {
    let mut best_lo: Option<(Rational, usize)> = None;
    let mut best_hi: Option<(Rational, usize)> = None;
    for &e in g.out_edges(u) {
        let (a, b) = hull_terms(g, e, axis);
        let (va, vb) = (eval(&a, x), eval(&b, x));
        if best_lo.as_ref().is_none_or(|(v, _)| va < *v) {
            best_lo = Some((va, e));
        }
        if best_hi.as_ref().is_none_or(|(v, _)| vb > *v) {
            best_hi = Some((vb, e));
        }
    }
    (best_lo.unwrap().1, best_hi.unwrap().1)
}

/// Solves `lo = term(lo-edge)`, `hi = term(hi-edge)` exactly for every vertex and axis.
fn solve_policy(g: &GraphIfs, policy: &[(usize, usize)]) -> Result<Vec<Rational>> {
    let n = g.vertex_count();
    let m = 2 * n * g.dim();
    let mut a = vec![vec![Rational::zero(); m + 1]; m];
    for (k, p) in policy.iter().enumerate() {
        let (axis, u) = (k / n, k % n);
        let (t_lo, _) = hull_terms(g, p.0, axis);
        let (_, t_hi) = hull_terms(g, p.1, axis);
        for (row, t) in [(var(n, axis, false, u), t_lo), (var(n, axis, true, u), t_hi)] {
            a[row][row] = Rational::one();
            a[row][t.var] = &a[row][t.var] - &t.s;
            a[row][m] = t.c;
        }
    }
    for col in 0..m {
        let piv = (col..m).find(|&r| !a[r][col].is_zero()).ok_or_else(|| GifsError::NoConvergence("singular hull system".into()))?;
        a.swap(col, piv);
        let p = a[col][col].clone();
        for k in col..=m {
            a[col][k] = &a[col][k] / &p;
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for k in col..=m {
                    let sub = &f * &a[col][k];
                    a[r][k] = &a[r][k] - &sub;
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[m].clone()).collect())
}

fn hulls_2d(g: &GraphIfs, tol: f64, samples: &[Vec<Point>]) -> Result<Hulls> {
    let n = g.vertex_count();
    let one = Rational::one();
    let mut radius = Rational::zero();
    for e in g.edges() {
        let m = &e.map;
        let t_sq: Rational = m.translation.iter().map(|t| t * t).sum();
        let bound = (t_sq.sqrt_upper() + &m.slack * Rational::from_integer(2)) / (&one - &m.scale);
        radius = Rational::max(&radius, &bound);
    }
    let radius = radius.ceil_dyadic(20) + Rational::one();
    let start = CertifiedBox::new(vec![-&radius, -&radius], vec![radius.clone(), radius.clone()]);
    let mut boxes = vec![start; n];
    let step_tol = Rational::from_f64((tol / 8.0).max(1e-15)).unwrap();
    let mut converged = false;
    for _ in 0..10_000 {
        let mut next = Vec::with_capacity(n);
        for u in 0..n {
            let mut acc: Option<CertifiedBox> = None;
            for &e in g.out_edges(u) {
                let img = g.edge(e).map.apply_box(&boxes[g.edge(e).to]);
                acc = Some(match acc {
                    None => img,
                    Some(b) => b.hull(&img),
                });
            }
            let b = acc.expect("out-edges");
            next.push(b.intersect(&boxes[u]).unwrap_or(b));
        }
        let change = (0..n)
            .flat_map(|u| (0..2).flat_map(move |i| [(u, i, true), (u, i, false)]))
            .map(|(u, i, low)| if low { (&next[u].lo[i] - &boxes[u].lo[i]).abs() } else { (&next[u].hi[i] - &boxes[u].hi[i]).abs() })
            .max()
            .unwrap();
        boxes = next;
        if change <= step_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(GifsError::NoConvergence("2-D hull iteration".into()));
    }
    if g.edges().iter().all(|e| e.map.is_exact()) {
        // Axis-preserving maps: the bounding boxes solve a max-plus linear system.
        let mut x = vec![Rational::zero(); 4 * n];
        for (u, b) in boxes.iter().enumerate() {
            for i in 0..2 {
                x[var(n, i, false, u)] = b.lo[i].clone();
                x[var(n, i, true, u)] = b.hi[i].clone();
            }
        }
        let exact = exact_boxes(g, x)?;
        if exact.iter().zip(&boxes).all(|(e, b)| b.contains_box(e)) {
            boxes = exact;
        }
    }
    let slack = Rational::frac(1, 1 << 30);
    let diameters = (0..n)
        .map(|u| {
            let upper = boxes[u].diagonal_sq().sqrt_upper();
            let pts = &samples[u];
            let fl: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(Rational::to_f64).collect()).collect();
            let mut pair = (0, 0);
            let mut far = -1.0;
            for i in 0..fl.len() {
                for j in i + 1..fl.len() {
                    let d = (fl[i][0] - fl[j][0]).powi(2) + (fl[i][1] - fl[j][1]).powi(2);
                    if d > far {
                        far = d;
                        pair = (i, j);
                    }
                }
            }
            let best: Rational = if pts.is_empty() {
                Rational::zero()
            } else {
                pts[pair.0].iter().zip(&pts[pair.1]).map(|(a, b)| (a - b) * (a - b)).sum()
            };
            let lower = Rational::max(&(best.sqrt_lower() - &slack), &Rational::zero());
            (Rational::min(&lower, &upper), upper)
        })
        .collect();
    Ok(Hulls { boxes, diameters, exact: false })
}
