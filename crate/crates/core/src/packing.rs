//! Separated packings and packing-moment estimators, plus two counting bounds.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::Result;
use crate::exact_arith::{Interval, Rational};
use crate::geometry::{Attractor, Cylinder, Point};
use crate::graph_ifs::label;
use crate::measure::{ball_measure, MeasureInterval, DEPTH_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Exact,
    LowerBound,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Exact => "exact",
            Kind::LowerBound => "lower_bound",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PackingEstimate {
    pub centers: Vec<Point>,
    pub r: f64,
    pub q: f64,
    /// Sum over centers of bracket midpoints raised to `q`.
    pub value: f64,
    pub value_interval: Interval,
    pub kind: Kind,
    /// Some measure bracket stopped at the depth cap above tolerance.
    pub unconverged: bool,
    pub candidates: usize,
}

#[derive(Debug, Clone)]
pub struct PackingOptions {
    /// Candidates are representatives of cylinders of diameter below `candidate_scale * r`.
    pub candidate_scale: Rational,
    /// Measure bracket tolerance relative to the candidate's own cylinder mass.
    pub measure_rel_tol: Rational,
    pub depth_cap: usize,
}

impl Default for PackingOptions {
    fn default() -> Self {
        PackingOptions { candidate_scale: Rational::frac(1, 2), measure_rel_tol: Rational::frac(1, 1000), depth_cap: DEPTH_CAP }
    }
}

#[derive(Debug, Clone)]
pub struct PackingCount {
    pub count: usize,
    pub centers: Vec<Point>,
    pub kind: Kind,
}

fn dist_sq(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Strict separation `|x - y| > 2r` for every pair.
pub fn is_separated(points: &[Point], r: &Rational) -> bool {
    let four_r2 = Rational::from_integer(4) * r * r;
    (0..points.len()).all(|i| (i + 1..points.len()).all(|j| dist_sq(&points[i], &points[j]) > four_r2))
}

/// Least point of `F_u` strictly right of `a`, found by cylinder descent (1-D only).
///
/// When the infimum is not attained the returned point is within `eps` of it.
fn next_point(att: &Attractor, roots: &[Cylinder], a: &Rational, eps: &Rational) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    let mut stack: Vec<Cylinder> = roots.to_vec();
    while let Some(c) = stack.pop() {
        let (lo, hi) = (&c.bx.lo[0], &c.bx.hi[0]);
        if hi <= a || best.as_ref().is_some_and(|b| lo >= b) {
            continue;
        }
        if lo > a {
            best = Some(lo.clone());
            continue;
        }
        if &(hi - lo) < eps {
            best = Some(match best {
                Some(b) => Rational::min(&b, hi),
                None => hi.clone(),
            });
            continue;
        }
        let mut kids = att.children(&c);
        // Visit leftmost boxes first.
        kids.sort_by(|x, y| y.bx.lo[0].cmp(&x.bx.lo[0]));
        stack.extend(kids);
    }
    best
}

/// Maximal cardinality of an `r`-separated subset of `F_u`.
///
/// Exact on the line (greedy sweep); a greedy-plus-exchange lower bound in the plane.
pub fn packing_number(att: &Attractor, u: usize, r: &Rational) -> Result<PackingCount> {
    if att.dim() == 1 && att.is_exact() {
        let roots = att.roots(u);
        let two_r = r * &Rational::from_integer(2);
        let eps = r * &Rational::frac(1, 1_000_000_000);
        let mut x = att.hulls().boxes[u].lo[0].clone();
        let mut centers = vec![vec![x.clone()]];
        while let Some(y) = next_point(att, &roots, &(&x + &two_r), &eps) {
            centers.push(vec![y.clone()]);
            x = y;
        }
        return Ok(PackingCount { count: centers.len(), centers, kind: Kind::Exact });
    }
    let cands = candidates(att, att.roots(u), r, &PackingOptions::default())?;
    let pts: Vec<Point> = cands.iter().map(|c| c.1.clone()).collect();
    let w = vec![1.0; pts.len()];
    let chosen = greedy_exchange(&pts, &w, r);
    let centers: Vec<Point> = chosen.iter().map(|&i| pts[i].clone()).collect();
    Ok(PackingCount { count: centers.len(), centers, kind: Kind::LowerBound })
}

/// Candidate centers: representatives of small cylinders under `roots`, deduplicated.
fn candidates(att: &Attractor, roots: Vec<Cylinder>, r: &Rational, opts: &PackingOptions) -> Result<Vec<(Cylinder, Point)>> {
    let rho = r * &opts.candidate_scale;
    let cyls = att.cover_from(roots, &rho)?;
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(cyls.len());
    for c in cyls {
        let p = att.representative(&c);
        if seen.insert(p.clone(), ()).is_none() {
            out.push((c, p));
        }
    }
    Ok(out)
}

fn weights(att: &Attractor, u: usize, q: f64, r: &Rational, cands: &[(Cylinder, Point)], opts: &PackingOptions) -> Vec<MeasureInterval> {
    cands
        .par_iter()
        .map(|(c, x)| {
            if q == 0.0 {
                return MeasureInterval {
                    lo: 1.0,
                    hi: 1.0,
                    lo_exact: Rational::one(),
                    hi_exact: Rational::one(),
                    refinement_depth: 0,
                    converged: true,
                };
            }
            let tol = &c.prob * &opts.measure_rel_tol;
            ball_measure(att, u, x, r, &tol, opts.depth_cap)
        })
        .collect()
}

/// Maximum-weight selection on the line with gaps strictly above `2r`.
fn interval_dp(xs: &[Rational], w: &[f64], r: &Rational) -> (f64, Vec<usize>) {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].cmp(&xs[b]));
    let two_r = r * &Rational::from_integer(2);
    let sorted: Vec<&Rational> = order.iter().map(|&i| &xs[i]).collect();
    let mut best = vec![0.0f64; n + 1];
    let mut take = vec![false; n + 1];
    let mut prev = vec![0usize; n + 1];
    for k in 1..=n {
        let x = sorted[k - 1];
        let bound = x - &two_r;
        // Number of sorted points strictly below x - 2r.
        let p = sorted[..k - 1].partition_point(|y| *y < &bound);
        let with = w[order[k - 1]] + best[p];
        if with > best[k - 1] {
            best[k] = with;
            take[k] = true;
            prev[k] = p;
        } else {
            best[k] = best[k - 1];
        }
    }
    let mut chosen = Vec::new();
    let mut k = n;
    while k > 0 {
        if take[k] {
            chosen.push(order[k - 1]);
            k = prev[k];
        } else {
            k -= 1;
        }
    }
    chosen.reverse();
    (best[n], chosen)
}

fn conflicts(pts: &[Point], r: &Rational) -> Vec<Vec<usize>> {
    let four_r2 = Rational::from_integer(4) * r * r;
    let cell = 2.0 * r.to_f64();
    let key = |p: &Point| -> Vec<i64> { p.iter().map(|c| (c.to_f64() / cell).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let dim = pts.first().map_or(1, |p| p.len());
    let offsets: Vec<Vec<i64>> = if dim == 1 {
        (-1..=1).map(|a| vec![a]).collect()
    } else {
        (-1..=1).flat_map(|a| (-1..=1).map(move |b| vec![a, b])).collect()
    };
    pts.par_iter()
        .enumerate()
        .map(|(i, p)| {
            let k = key(p);
            let mut out = Vec::new();
            for off in &offsets {
                let nk: Vec<i64> = k.iter().zip(off).map(|(a, b)| a + b).collect();
                if let Some(list) = grid.get(&nk) {
                    for &j in list {
                        if j != i && dist_sq(p, &pts[j]) <= four_r2 {
                            out.push(j);
                        }
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

/// Greedy insertion by weight, then 1-for-1 and 1-for-2 exchange passes, then saturation.
fn greedy_exchange(pts: &[Point], w: &[f64], r: &Rational) -> Vec<usize> {
    let n = pts.len();
    let conf = conflicts(pts, r);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut chosen = vec![false; n];
    let mut blocked = vec![0usize; n];
    let add = |i: usize, chosen: &mut Vec<bool>, blocked: &mut Vec<usize>| {
        chosen[i] = true;
        for &j in &conf[i] {
            blocked[j] += 1;
        }
    };
    let remove = |i: usize, chosen: &mut Vec<bool>, blocked: &mut Vec<usize>| {
        chosen[i] = false;
        for &j in &conf[i] {
            blocked[j] -= 1;
        }
    };
    for &i in &order {
        if blocked[i] == 0 {
            add(i, &mut chosen, &mut blocked);
        }
    }
    for _ in 0..20 {
        let mut improved = false;
        for c in 0..n {
            if !chosen[c] {
                continue;
            }
            // Unused candidates that become free once c leaves.
            let free: Vec<usize> = conf[c].iter().copied().filter(|&d| !chosen[d] && blocked[d] == 1).collect();
            let mut best: Option<(f64, Vec<usize>)> = None;
            for (a, &d) in free.iter().enumerate() {
                if w[d] > w[c] + 1e-15 * w[c].abs() && best.as_ref().is_none_or(|b| w[d] > b.0) {
                    best = Some((w[d], vec![d]));
                }
                for &e in &free[a + 1..] {
                    if conf[d].binary_search(&e).is_err() {
                        let s = w[d] + w[e];
                        if s > w[c] + 1e-15 * w[c].abs() && best.as_ref().is_none_or(|b| s > b.0) {
                            best = Some((s, vec![d, e]));
                        }
                    }
                }
            }
            if let Some((_, adds)) = best {
                remove(c, &mut chosen, &mut blocked);
                for d in adds {
                    add(d, &mut chosen, &mut blocked);
                }
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    for &i in &order {
        if !chosen[i] && blocked[i] == 0 {
            add(i, &mut chosen, &mut blocked);
        }
    }
    (0..n).filter(|&i| chosen[i]).collect()
}

fn estimate(
    att: &Attractor,
    u: usize,
    q: f64,
    r: &Rational,
    cands: Vec<(Cylinder, Point)>,
    opts: &PackingOptions,
) -> PackingEstimate {
    let n = cands.len();
    if n == 0 {
        return PackingEstimate {
            centers: vec![],
            r: r.to_f64(),
            q,
            value: 0.0,
            value_interval: Interval::point(0.0),
            kind: Kind::LowerBound,
            unconverged: false,
            candidates: 0,
        };
    }
    let brackets = weights(att, u, q, r, &cands, opts);
    let unconverged = brackets.iter().any(|b| !b.converged);
    let pow = |x: f64| if q == 0.0 { 1.0 } else { x.powf(q) };
    let mid: Vec<f64> = brackets.iter().map(|b| pow(b.mid())).collect();
    let (w_lo, w_hi): (Vec<f64>, Vec<f64>) = brackets
        .iter()
        .map(|b| {
            let iv = b.interval().powf(q);
            (iv.lo, iv.hi)
        })
        .unzip();
    let pts: Vec<Point> = cands.iter().map(|c| c.1.clone()).collect();
    let (chosen, lo, hi) = if att.dim() == 1 {
        let xs: Vec<Rational> = pts.iter().map(|p| p[0].clone()).collect();
        let (_, chosen) = interval_dp(&xs, &mid, r);
        let (lo, _) = interval_dp(&xs, &w_lo, r);
        let (hi, _) = interval_dp(&xs, &w_hi, r);
        (chosen, lo, hi)
    } else {
        let chosen = greedy_exchange(&pts, &mid, r);
        let lo: f64 = chosen.iter().map(|&i| w_lo[i]).sum();
        let hi: f64 = chosen.iter().map(|&i| w_hi[i]).sum();
        (chosen, lo, hi)
    };
    let value: f64 = chosen.iter().map(|&i| mid[i]).sum();
    // Float summation error; counts are exact.
    let slack = if q == 0.0 { 0.0 } else { 1e-12 * value.abs().max(hi.abs()) };
    PackingEstimate {
        centers: chosen.iter().map(|&i| pts[i].clone()).collect(),
        r: r.to_f64(),
        q,
        value,
        value_interval: Interval::new((lo - slack).min(value), (hi + slack).max(value)),
        kind: Kind::LowerBound,
        unconverged,
        candidates: n,
    }
}

/// Estimator for the `q`-th packing moment `M_u^q(F_u, r)`.
pub fn packing_moment(att: &Attractor, u: usize, q: f64, r: &Rational, opts: &PackingOptions) -> Result<PackingEstimate> {
    if q == 0.0 && att.dim() == 1 && att.is_exact() {
        let n = packing_number(att, u, r)?;
        let c = n.count as f64;
        return Ok(PackingEstimate {
            centers: n.centers,
            r: r.to_f64(),
            q,
            value: c,
            value_interval: Interval::point(c),
            kind: Kind::Exact,
            unconverged: false,
            candidates: 0,
        });
    }
    let cands = candidates(att, att.roots(u), r, opts)?;
    Ok(estimate(att, u, q, r, cands, opts))
}

/// Certifies `dist(x, set under roots) <= r`: `Some(true)`, `Some(false)`, or `None` if undecided.
fn within(att: &Attractor, roots: Vec<Cylinder>, x: &[Rational], r: &Rational) -> Option<bool> {
    let r2 = r * r;
    let mut frontier = roots;
    for _ in 0..64 {
        let mut next = Vec::new();
        for c in frontier {
            if c.bx.gap_sq_point(x) > r2 {
                continue;
            }
            if c.bx.far_sq_point(x) <= r2 || att.known_points(&c).iter().any(|p| dist_sq(p, x) <= r2) {
                return Some(true);
            }
            next.extend(att.children(&c));
        }
        if next.is_empty() {
            return Some(false);
        }
        if next.len() > 4096 {
            return None;
        }
        frontier = next;
    }
    None
}

/// Estimator for the overlap moment `Q_{e,f}^q(r)`: packings of `S_e(F)` inside the
/// closed `r`-neighbourhood of `S_f(F)`, weighted by `μ_u`.
pub fn overlap_moment(att: &Attractor, u: usize, e: usize, f: usize, q: f64, r: &Rational, opts: &PackingOptions) -> Result<PackingEstimate> {
    let g = att.graph();
    if g.edge(e).from != u || g.edge(f).from != u || e == f {
        return Err(crate::GifsError::Domain("overlap needs two distinct out-edges of the vertex".into()));
    }
    let cyl_e = att.roots(u).into_iter().find(|c| c.edges == [e]).expect("edge cylinder");
    let cyl_f = att.roots(u).into_iter().find(|c| c.edges == [f]).expect("edge cylinder");
    let r2 = r * r;
    if cyl_e.bx.gap_sq(&cyl_f.bx) > r2 {
        return Ok(estimate(att, u, q, r, vec![], opts));
    }
    // Only cylinders of piece e that come within r of piece f matter.
    let rho = r * &opts.candidate_scale;
    let mut all = Vec::new();
    let mut seen = HashMap::new();
    let mut stack = vec![cyl_e];
    while let Some(c) = stack.pop() {
        if c.bx.gap_sq(&cyl_f.bx) > r2 {
            continue;
        }
        if c.diam.1 < rho {
            let p = att.representative(&c);
            if seen.insert(p.clone(), ()).is_none() {
                all.push((c, p));
            }
            continue;
        }
        if all.len() as u64 > crate::graph_ifs::PATH_CAP {
            return Err(crate::GifsError::PathCap { count: all.len() as u128, cap: crate::graph_ifs::PATH_CAP });
        }
        let mut kids = att.children(&c);
        kids.reverse();
        stack.extend(kids);
    }
    let keep: Vec<bool> = all
        .par_iter()
        .map(|(_, x)| within(att, vec![cyl_f.clone()], x, r) == Some(true))
        .collect();
    let cands: Vec<(Cylinder, Point)> = all.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect();
    Ok(estimate(att, u, q, r, cands, opts))
}

/// Labels of the cylinders whose representatives are the centers, for reporting.
pub fn center_labels(att: &Attractor, u: usize, est: &PackingEstimate, r: &Rational, opts: &PackingOptions) -> Result<Vec<String>> {
    let cands = candidates(att, att.roots(u), r, opts)?;
    let index: HashMap<&Point, &Cylinder> = cands.iter().map(|(c, p)| (p, c)).collect();
    Ok(est
        .centers
        .iter()
        .map(|p| index.get(p).map(|c| label(att.graph(), &c.edges)).unwrap_or_default())
        .collect())
}

/// `((1 + 2 c2) / c1)^m`: how many disjoint sets, each containing a ball of radius
/// `c1 r` and inside a ball of radius `c2 r`, can meet a ball of radius `r`.
pub fn ball_count_bound(c1: f64, c2: f64, m: u32) -> f64 {
    ((1.0 + 2.0 * c2) / c1).powi(m as i32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSumCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// `(Σ a_i)^p <= max(1, C^(p-1)) Σ a_i^p` for `C` at least the number of terms.
pub fn power_sum_check(p: f64, values: &[f64], c: f64) -> PowerSumCheck {
    let lhs = values.iter().sum::<f64>().powf(p);
    let rhs = 1f64.max(c.powf(p - 1.0)) * values.iter().map(|a| a.powf(p)).sum::<f64>();
    PowerSumCheck { holds: lhs <= rhs * (1.0 + 1e-12), lhs, rhs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn q(a: i64, b: i64) -> Rational {
        Rational::frac(a, b)
    }

    #[test]
    fn packing_number_examples() {
        let c = Attractor::new(fixtures::cantor()).unwrap();
        assert_eq!(packing_number(&c, 0, &q(1, 2)).unwrap().count, 1);
        assert_eq!(packing_number(&c, 0, &q(3, 5)).unwrap().count, 1);
        assert_eq!(packing_number(&c, 0, &q(1, 6)).unwrap().count, 2);
        let t = Attractor::new(fixtures::halves()).unwrap();
        assert_eq!(packing_number(&t, 0, &q(1, 5)).unwrap().count, 3);
        assert_eq!(packing_number(&t, 0, &q(1, 4)).unwrap().count, 2);
        let p = packing_number(&c, 0, &q(1, 100)).unwrap();
        assert!(is_separated(&p.centers, &q(1, 100)));
    }

    #[test]
    fn packing_number_matches_brute_force() {
        // Brute force over the depth-9 endpoints of the Cantor intervals.
        let c = Attractor::new(fixtures::cantor()).unwrap();
        let mut pts: Vec<Rational> = Vec::new();
        for p in c.graph().enumerate_paths(0, 9, None).unwrap() {
            let cyl = c.cylinder(&p);
            pts.push(cyl.bx.lo[0].clone());
            pts.push(cyl.bx.hi[0].clone());
        }
        pts.sort();
        pts.dedup();
        for r in [q(1, 7), q(1, 20), q(2, 45), q(1, 50), q(1, 81)] {
            let two_r = &r * &q(2, 1);
            let mut last: Option<Rational> = None;
            let mut count = 0;
            for x in &pts {
                if last.as_ref().is_none_or(|l| &(x - l) > &two_r) {
                    count += 1;
                    last = Some(x.clone());
                }
            }
            assert_eq!(packing_number(&c, 0, &r).unwrap().count, count, "r = {r}");
        }
    }

    #[test]
    fn moment_examples() {
        let opts = PackingOptions::default();
        let t = Attractor::new(fixtures::halves()).unwrap();
        let m = packing_moment(&t, 0, 0.0, &q(1, 5), &opts).unwrap();
        assert_eq!((m.value, m.kind), (3.0, Kind::Exact));
        let c = Attractor::new(fixtures::cantor()).unwrap();
        let m = packing_moment(&c, 0, 1.0, &q(1, 6), &opts).unwrap();
        assert!(m.value >= 0.5 - 1e-12 && m.value_interval.lo >= 0.5 - 1e-12, "{m:?}");
        assert!(is_separated(&m.centers, &q(1, 6)));
        let g = Attractor::new(fixtures::gasket()).unwrap();
        let m = packing_moment(&g, 0, 0.0, &q(1, 10), &opts).unwrap();
        assert_eq!(m.kind, Kind::LowerBound);
        assert_eq!(m.value, m.centers.len() as f64);
        assert!(is_separated(&m.centers, &q(1, 10)));
    }

    #[test]
    fn overlap_examples() {
        let opts = PackingOptions::default();
        let c = Attractor::new(fixtures::cantor()).unwrap();
        for qq in [0.0, 1.0, 2.0] {
            let m = overlap_moment(&c, 0, 0, 1, qq, &q(1, 4), &opts).unwrap();
            assert_eq!(m.value, 0.0);
        }
        let t = Attractor::new(fixtures::halves()).unwrap();
        let m = overlap_moment(&t, 0, 0, 1, 0.0, &q(1, 10), &opts).unwrap();
        assert!(m.value >= 1.0);
        let m = overlap_moment(&t, 0, 0, 1, 0.0, &q(1, 1), &opts).unwrap();
        assert_eq!(m.value, packing_number(&t, 0, &q(1, 1)).unwrap().count as f64);
    }

    #[test]
    fn bounds() {
        assert_eq!(ball_count_bound(1.0, 1.0, 2), 9.0);
        assert_eq!(ball_count_bound(0.5, 1.0, 1), 6.0);
        assert_eq!(ball_count_bound(1.0, 1.0, 1), 3.0);
        let c = power_sum_check(2.0, &[1.0, 1.0], 2.0);
        assert!(c.holds && c.lhs == 4.0 && c.rhs == 4.0);
        assert!(power_sum_check(0.5, &[1.0, 1.0], 2.0).holds);
        let c = power_sum_check(-1.0, &[2.0, 2.0], 2.0);
        assert!(c.holds && c.lhs == 0.25);
    }
}
