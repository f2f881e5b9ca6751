//! Separation conditions (strong, convex-strong, open set) and the open-set constants.

use std::fmt;

use rayon::prelude::*;

use crate::error::{GifsError, Result};
use crate::exact_arith::Rational;
use crate::geometry::{compose, Attractor, CertifiedBox, Cylinder, Point};
use crate::graph_ifs::{label, GraphIfs, Path};
use crate::spectral::{build_a, build_b, is_irreducible, primitivity_index};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Ssc,
    Cssc,
    Osc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Half the least distance between sibling pieces, with the squared-distance bracket.
    Gap { epsilon: Rational, dist_sq: (Rational, Rational) },
    /// Offending sibling edges at a vertex, with a shared point when one is known.
    Pair { vertex: usize, e: usize, f: usize, point: Option<Point>, reason: String },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub witness: Witness,
    pub notes: Vec<String>,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Ssc => "SSC",
            Condition::Cssc => "CSSC",
            Condition::Osc => "OSC",
        })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Undecided => "undecided",
        })
    }
}

impl SeparationReport {
    pub fn epsilon(&self) -> Option<&Rational> {
        match &self.witness {
            Witness::Gap { epsilon, .. } => Some(epsilon),
            _ => None,
        }
    }

    pub fn describe(&self, g: &GraphIfs) -> String {
        let mut s = format!("{}: {}", self.condition, self.verdict);
        match &self.witness {
            Witness::Gap { epsilon, .. } => s += &format!(" (epsilon = {epsilon} ~ {:.16e})", epsilon.to_f64()),
            Witness::Pair { vertex, e, f, point, reason } => {
                s += &format!(" at vertex {}: edges {} and {}: {reason}", g.vertex_name(*vertex), g.edge(*e).id, g.edge(*f).id);
                if let Some(p) = point {
                    let xs: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                    s += &format!(" (shared point {})", xs.join(","));
                }
            }
            Witness::None => {}
        }
        for n in &self.notes {
            s += &format!("\n  note: {n}");
        }
        s
    }
}

/// Pair-refinement budget for the strong separation check.
const PAIR_CAP: usize = 200_000;

fn dist_sq(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact points of each component: fixed points of its cycles of length at most two.
fn vertex_points(att: &Attractor) -> Vec<Vec<Point>> {
    let g = att.graph();
    (0..g.vertex_count())
        .map(|v| {
            let mut pts = vec![att.anchor(v).clone()];
            for len in 1..=2 {
                for p in g.enumerate_paths(v, len, Some(v)).unwrap_or_default() {
                    let m = compose(g, &p);
                    if m.is_exact() {
                        pts.push(m.fixed_point());
                    }
                }
            }
            pts.sort();
            pts.dedup();
            pts
        })
        .collect()
}

fn cylinder_points(att: &Attractor, special: &[Vec<Point>], c: &Cylinder) -> Vec<Point> {
    let mut pts = att.known_points(c);
    if c.map.is_exact() {
        pts.extend(special[c.to].iter().map(|p| c.map.apply(p)));
    }
    pts
}

enum PairOutcome {
    Gap(Rational, Rational),
    Touch(Point),
    Open(Rational),
}

fn refine_pair(att: &Attractor, special: &[Vec<Point>], a: Cylinder, b: Cylinder, tol: &Rational) -> PairOutcome {
    let exact = att.graph().edges().iter().all(|e| e.map.is_exact());
    let tol2 = tol * tol;
    let mut hi: Option<(Rational, Point)> = None;
    let update = |x: &Cylinder, y: &Cylinder, hi: &mut Option<(Rational, Point)>| {
        for p in cylinder_points(att, special, x) {
            for q in cylinder_points(att, special, y) {
                let d = dist_sq(&p, &q);
                if hi.as_ref().is_none_or(|h| d < h.0) {
                    *hi = Some((d, p.clone()));
                }
            }
        }
    };
    update(&a, &b, &mut hi);
    let mut pairs = vec![(a, b)];
    loop {
        let h = hi.as_ref().map(|h| h.0.clone());
        if exact {
            if let Some((d, p)) = &hi {
                if d.is_zero() {
                    return PairOutcome::Touch(p.clone());
                }
            }
        }
        if let Some(h) = &h {
            pairs.retain(|(x, y)| &x.bx.gap_sq(&y.bx) <= h);
        }
        let lo = pairs.iter().map(|(x, y)| x.bx.gap_sq(&y.bx)).min().unwrap_or_default();
        let hi_sq = h.clone().unwrap_or_else(|| pairs.iter().map(|(x, y)| x.bx.far_sq(&y.bx)).min().unwrap_or_default());
        if lo.is_positive() && &hi_sq - &lo <= tol2 {
            return PairOutcome::Gap(lo, hi_sq);
        }
        if pairs.len() > PAIR_CAP {
            return if lo.is_positive() { PairOutcome::Gap(lo, hi_sq) } else { PairOutcome::Open(hi_sq) };
        }
        let mut next = Vec::with_capacity(pairs.len() * 2);
        let mut split = false;
        for (x, y) in pairs {
            let big_x = x.diam.1 >= y.diam.1;
            let (s, o) = if big_x { (&x, &y) } else { (&y, &x) };
            if &s.diam.1 < tol {
                next.push((x, y));
                continue;
            }
            split = true;
            for k in att.children(s) {
                let pair = if big_x { (k, o.clone()) } else { (o.clone(), k) };
                update(&pair.0, &pair.1, &mut hi);
                next.push(pair);
            }
        }
        pairs = next;
        if !split {
            let lo = pairs.iter().map(|(x, y)| x.bx.gap_sq(&y.bx)).min().unwrap_or_default();
            let hi_sq = hi.map(|h| h.0).unwrap_or(hi_sq);
            return if lo.is_positive() { PairOutcome::Gap(lo, hi_sq) } else { PairOutcome::Open(hi_sq) };
        }
    }
}

fn sibling_pairs(g: &GraphIfs) -> Vec<(usize, usize, usize)> {
    (0..g.vertex_count())
        .flat_map(|u| {
            let out = g.out_edges(u);
            (0..out.len()).flat_map(move |i| (i + 1..out.len()).map(move |j| (u, out[i], out[j])))
        })
        .collect()
}

/// Strong separation: sibling pieces at every vertex are at positive distance.
///
/// `tol` bounds the cylinder diameter at which refinement stops.
pub fn check_ssc(att: &Attractor, tol: &Rational) -> SeparationReport {
    let g = att.graph();
    let special = vertex_points(att);
    let outcomes: Vec<_> = sibling_pairs(g)
        .par_iter()
        .map(|&(u, e, f)| {
            let root = |i: usize| att.roots(u).into_iter().find(|c| c.edges == [i]).expect("edge cylinder");
            (u, e, f, refine_pair(att, &special, root(e), root(f), tol))
        })
        .collect();
    let mut best: Option<(Rational, Rational)> = None;
    let mut undecided = None;
    for (u, e, f, o) in outcomes {
        match o {
            PairOutcome::Touch(p) => {
                return SeparationReport {
                    condition: Condition::Ssc,
                    verdict: Verdict::Fails,
                    witness: Witness::Pair { vertex: u, e, f, point: Some(p), reason: "pieces intersect".into() },
                    notes: vec![],
                }
            }
            PairOutcome::Gap(lo, hi) => {
                if best.as_ref().is_none_or(|b| lo < b.0) {
                    best = Some((lo, hi));
                }
            }
            PairOutcome::Open(hi) => {
                undecided.get_or_insert((u, e, f, hi));
            }
        }
    }
    if let Some((u, e, f, hi)) = undecided {
        return SeparationReport {
            condition: Condition::Ssc,
            verdict: Verdict::Undecided,
            witness: Witness::Pair {
                vertex: u,
                e,
                f,
                point: None,
                reason: format!("distance bracket [0, {:.3e}] straddles 0 at the refinement limit", hi.sqrt_upper().to_f64()),
            },
            notes: vec![],
        };
    }
    let (lo, hi) = best.expect("every vertex has two out-edges");
    let epsilon = &lo.sqrt_lower() * &Rational::frac(1, 2);
    SeparationReport { condition: Condition::Ssc, verdict: Verdict::Holds, witness: Witness::Gap { epsilon, dist_sq: (lo, hi) }, notes: vec![] }
}

/// Convex strong separation: images of the component hulls are disjoint.
pub fn check_cssc(att: &Attractor) -> SeparationReport {
    let g = att.graph();
    let exact_hull = att.is_exact() && att.dim() == 1;
    let mut undecided = None;
    for (u, e, f) in sibling_pairs(g) {
        let bx = |i: usize| g.edge(i).map.apply_box(&att.hulls().boxes[g.edge(i).to]);
        let (a, b) = (bx(e), bx(f));
        if a.gap_sq(&b).is_positive() {
            continue;
        }
        // Pieces sharing a certified point have intersecting hulls.
        let shared = if exact_hull { None } else { shared_point(att, e, f) };
        if exact_hull || shared.is_some() {
            let point = shared.or_else(|| a.intersect(&b).map(|i| i.lo));
            return SeparationReport {
                condition: Condition::Cssc,
                verdict: Verdict::Fails,
                witness: Witness::Pair { vertex: u, e, f, point, reason: "hull images intersect".into() },
                notes: vec![],
            };
        }
        undecided.get_or_insert((u, e, f));
    }
    match undecided {
        None => SeparationReport { condition: Condition::Cssc, verdict: Verdict::Holds, witness: Witness::None, notes: vec![] },
        Some((u, e, f)) => SeparationReport {
            condition: Condition::Cssc,
            verdict: Verdict::Undecided,
            witness: Witness::Pair { vertex: u, e, f, point: None, reason: "hull enclosures overlap".into() },
            notes: vec![],
        },
    }
}

fn shared_point(att: &Attractor, e: usize, f: usize) -> Option<Point> {
    let g = att.graph();
    let (me, mf) = (&g.edge(e).map, &g.edge(f).map);
    if !(me.is_exact() && mf.is_exact()) {
        return None;
    }
    let special = vertex_points(att);
    let pe: Vec<Point> = special[g.edge(e).to].iter().map(|p| me.apply(p)).collect();
    special[g.edge(f).to].iter().map(|p| mf.apply(p)).find(|p| pe.contains(p))
}

/// Open sets configured on the system, falling back to hull interiors.
pub fn default_open_sets(att: &Attractor) -> Vec<CertifiedBox> {
    let g = att.graph();
    (0..g.vertex_count()).map(|v| g.open_set(v).cloned().unwrap_or_else(|| att.hulls().boxes[v].clone())).collect()
}

/// Open set condition for the interiors of the given boxes.
pub fn check_osc(att: &Attractor, open_sets: &[CertifiedBox]) -> SeparationReport {
    let g = att.graph();
    let report = |verdict, witness, notes| SeparationReport { condition: Condition::Osc, verdict, witness, notes };
    if open_sets.len() != g.vertex_count() || open_sets.iter().any(|b| b.dim() != g.dim() || !b.is_proper()) {
        return report(
            Verdict::Fails,
            Witness::None,
            vec!["open sets must be non-empty boxes, one per vertex".into()],
        );
    }
    let mut undecided = None;
    for u in 0..g.vertex_count() {
        let out = g.out_edges(u);
        let images: Vec<(CertifiedBox, bool)> = out
            .iter()
            .map(|&i| {
                let e = g.edge(i);
                (e.map.apply_box(&open_sets[e.to]), e.map.is_exact())
            })
            .collect();
        for (k, &i) in out.iter().enumerate() {
            if !open_sets[u].contains_box(&images[k].0) {
                let w = Witness::Pair { vertex: u, e: i, f: i, point: None, reason: "image leaves the open set".into() };
                if images[k].1 {
                    return report(Verdict::Fails, w, vec![]);
                }
                undecided.get_or_insert(w);
            }
        }
        for a in 0..out.len() {
            for b in a + 1..out.len() {
                let (x, y) = (&images[a].0, &images[b].0);
                // Open boxes are disjoint iff their closures meet in a set with empty interior.
                let disjoint = (0..g.dim()).any(|i| x.hi[i] <= y.lo[i] || y.hi[i] <= x.lo[i]);
                if !disjoint {
                    let w = Witness::Pair { vertex: u, e: out[a], f: out[b], point: None, reason: "images of the open set overlap".into() };
                    if images[a].1 && images[b].1 {
                        return report(Verdict::Fails, w, vec![]);
                    }
                    undecided.get_or_insert(w);
                }
            }
        }
    }
    if let Some(w) = undecided {
        return report(Verdict::Undecided, w, vec![]);
    }
    let mut notes = Vec::new();
    let strong = (0..g.vertex_count()).all(|v| vertex_points(att)[v].iter().any(|p| open_sets[v].margin(&CertifiedBox::point(p)).is_positive()));
    if strong {
        notes.push("each open set meets its component, so the strong open set condition holds too".into());
    }
    report(Verdict::Holds, Witness::None, notes)
}

/// Maximum path length searched for a cylinder strictly inside an open set.
const ELL_DEPTH: usize = 24;

fn interior_path(att: &Attractor, u: usize, open: &CertifiedBox) -> Result<Path> {
    let g = att.graph();
    let mut level: Vec<Cylinder> = att.roots(u);
    for _ in 0..ELL_DEPTH {
        if let Some(c) = level.iter().find(|c| open.margin(&c.bx).is_positive()) {
            return Path::new(g, c.edges.clone());
        }
        level = level.iter().flat_map(|c| att.children(c)).collect();
        if level.len() as u64 > crate::graph_ifs::PATH_CAP {
            break;
        }
    }
    Err(GifsError::Domain(format!("no cylinder of vertex {} lies strictly inside its open set", g.vertex_name(u))))
}

fn pad(g: &GraphIfs, p: &Path, l: usize) -> Result<Path> {
    let mut p = p.clone();
    while p.len() < l {
        p = p.extend(g, g.out_edges(p.to)[0])?;
    }
    Ok(p)
}

/// Distinguished paths of a common length `l >= min_l`, each cylinder strictly inside
/// its open set, with `gcd(l, h) = 1` and the reduced matrix irreducible.
pub fn construct_ell_paths(att: &Attractor, open_sets: &[CertifiedBox], q: f64, min_l: usize) -> Result<(usize, Vec<Path>)> {
    let g = att.graph();
    let base: Vec<Path> = (0..g.vertex_count())
        .into_par_iter()
        .map(|u| interior_path(att, u, &open_sets[u]))
        .collect::<Result<_>>()?;
    let h = primitivity_index(&build_a(g, 0.0, 0.0, 1)?)?;
    let mut l = min_l.max(1).max(base.iter().map(Path::len).max().unwrap_or(1));
    for _ in 0..64 {
        if num_integer::gcd(l, h) == 1 {
            let ell: Vec<Path> = base.iter().map(|p| pad(g, p, l)).collect::<Result<_>>()?;
            if is_irreducible(&build_b(g, q, 0.0, l, &ell)?) {
                return Ok((l, ell));
            }
        }
        l += 1;
    }
    Err(GifsError::Domain("no admissible length for the distinguished paths".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConstants {
    pub l: usize,
    pub ell_paths: Vec<Path>,
    /// Lower bound on the distance from each distinguished cylinder to the complement of its open set.
    pub c: Vec<Rational>,
    pub c_min: Rational,
    pub r_min: Rational,
    pub r_max: Rational,
    pub d_min: Rational,
    pub d_max: Rational,
    pub n: u32,
    pub delta: Rational,
    pub alpha: Rational,
    pub beta_scale: Rational,
}

/// Open-set constants: margins, the integer `N`, the threshold scale and the path-ratio window.
pub fn compute_constants(att: &Attractor, open_sets: &[CertifiedBox], l: usize, ell_paths: &[Path]) -> Result<SystemConstants> {
    let g = att.graph();
    let c: Vec<Rational> = ell_paths.iter().map(|p| open_sets[p.from].margin(&att.cylinder(p).bx)).collect();
    if let Some((v, _)) = c.iter().enumerate().find(|(_, x)| !x.is_positive()) {
        return Err(GifsError::Domain(format!("distinguished cylinder of vertex {} touches the boundary of its open set", g.vertex_name(v))));
    }
    let c_min = c.iter().min().cloned().expect("at least one vertex");
    let (r_min, r_max) = g.ratio_bounds();
    let (d_min, d_max) = (att.hulls().d_min(), att.hulls().d_max());
    let need = &(&d_max * &Rational::from_integer(2)) / &c_min;
    let inv = r_max.recip()?;
    let mut n = 1u32;
    while inv.pow(n as i32 - 1) < need {
        n += 1;
    }
    let delta = &r_min.pow((n as usize + l + 1) as i32) * &d_min;
    if !(delta.is_positive() && delta < Rational::one()) {
        return Err(GifsError::Domain(format!("threshold scale {delta} outside (0, 1)")));
    }
    let alpha = (&r_max.pow(n as i32) * &d_max).recip()?;
    let beta_scale = (&r_min.pow(n as i32 + 1) * &d_min).recip()?;
    Ok(SystemConstants { l, ell_paths: ell_paths.to_vec(), c, c_min, r_min, r_max, d_min, d_max, n, delta, alpha, beta_scale })
}

impl SystemConstants {
    /// Plain-text table of the constants.
    pub fn table(&self, g: &GraphIfs) -> String {
        let row = |k: &str, x: &Rational| format!("{k:<12} {:<24} {:.16e}\n", x.to_string(), x.to_f64());
        let mut s = format!("{:<12} {}\n", "l", self.l);
        for p in &self.ell_paths {
            s += &format!("{:<12} {}\n", format!("ell[{}]", g.vertex_name(p.from)), label(g, &p.edges));
        }
        for (v, c) in self.c.iter().enumerate() {
            s += &row(&format!("c[{}]", g.vertex_name(v)), c);
        }
        s += &row("c_min", &self.c_min);
        s += &row("r_min", &self.r_min);
        s += &row("r_max", &self.r_max);
        s += &row("d_min", &self.d_min);
        s += &row("d_max", &self.d_max);
        s += &format!("{:<12} {}\n", "N", self.n);
        s += &row("delta", &self.delta);
        s += &row("alpha", &self.alpha);
        s += &row("beta", &self.beta_scale);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn q(a: i64, b: i64) -> Rational {
        Rational::frac(a, b)
    }

    fn unit() -> Vec<CertifiedBox> {
        vec![CertifiedBox::new(vec![q(0, 1)], vec![q(1, 1)])]
    }

    fn tol() -> Rational {
        q(1, 1_000_000_000)
    }

    #[test]
    fn ssc_examples() {
        let c = Attractor::new(fixtures::cantor()).unwrap();
        let r = check_ssc(&c, &tol());
        assert_eq!((r.verdict, r.epsilon()), (Verdict::Holds, Some(&q(1, 6))));
        let t = Attractor::new(fixtures::halves()).unwrap();
        let r = check_ssc(&t, &tol());
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(matches!(r.witness, Witness::Pair { point: Some(ref p), .. } if p == &vec![q(1, 2)]));
        let nl = Attractor::new(fixtures::nonlattice()).unwrap();
        assert_eq!(check_ssc(&nl, &tol()).epsilon(), Some(&q(1, 12)));
        let v = Attractor::new(fixtures::two_vertex()).unwrap();
        assert_eq!(check_ssc(&v, &tol()).verdict, Verdict::Holds);
        let gk = Attractor::new(fixtures::gasket()).unwrap();
        assert_eq!(check_ssc(&gk, &tol()).verdict, Verdict::Fails);
        assert_eq!(check_cssc(&gk).verdict, Verdict::Fails);
        let rp = Attractor::new(fixtures::rotated_pair()).unwrap();
        assert_eq!(check_ssc(&rp, &tol()).verdict, Verdict::Holds);
    }

    #[test]
    fn cssc_examples() {
        for (g, v) in [(fixtures::cantor(), Verdict::Holds), (fixtures::halves(), Verdict::Fails), (fixtures::two_vertex(), Verdict::Holds)] {
            assert_eq!(check_cssc(&Attractor::new(g).unwrap()).verdict, v);
        }
    }

    #[test]
    fn osc_examples() {
        let t = Attractor::new(fixtures::halves()).unwrap();
        assert_eq!(check_osc(&t, &unit()).verdict, Verdict::Holds);
        let wide = vec![CertifiedBox::new(vec![q(0, 1)], vec![q(2, 1)])];
        let r = check_osc(&t, &wide);
        assert_eq!(r.verdict, Verdict::Fails);
        let c = Attractor::new(fixtures::cantor()).unwrap();
        assert_eq!(check_osc(&c, &unit()).verdict, Verdict::Holds);
        let gk = Attractor::new(fixtures::gasket()).unwrap();
        assert_eq!(check_osc(&gk, &default_open_sets(&gk)).verdict, Verdict::Holds);
    }

    #[test]
    fn ell_paths_and_constants() {
        let c = Attractor::new(fixtures::cantor()).unwrap();
        let (l, ell) = construct_ell_paths(&c, &unit(), 1.0, 2).unwrap();
        assert_eq!((l, ell[0].label(c.graph())), (2, "e1-e2".to_string()));
        let k = compute_constants(&c, &unit(), l, &ell).unwrap();
        assert_eq!((k.c_min.clone(), k.n, k.delta.clone()), (q(2, 9), 3, q(1, 729)));

        let t = Attractor::new(fixtures::halves()).unwrap();
        let (l, ell) = construct_ell_paths(&t, &unit(), 1.0, 2).unwrap();
        assert_eq!((l, ell[0].label(t.graph())), (2, "e1-e2".to_string()));
        let k = compute_constants(&t, &unit(), l, &ell).unwrap();
        assert_eq!((k.c_min.clone(), k.n, k.delta.clone()), (q(1, 4), 4, q(1, 128)));
        assert_eq!((k.alpha.clone(), k.beta_scale.clone()), (q(16, 1), q(32, 1)));

        let v = Attractor::new(fixtures::two_vertex()).unwrap();
        let open = default_open_sets(&v);
        let (l, ell) = construct_ell_paths(&v, &open, 1.0, 2).unwrap();
        let labels: Vec<String> = ell.iter().map(|p| p.label(v.graph())).collect();
        assert_eq!((l, labels), (2, vec!["e1-e2".to_string(), "e3-e2".to_string()]));
        let k = compute_constants(&v, &open, l, &ell).unwrap();
        assert!(k.delta.is_positive() && k.delta < q(1, 1) && k.alpha < k.beta_scale);
        assert!(is_irreducible(&build_b(v.graph(), 1.0, 0.0, l, &ell).unwrap()));
    }
}
