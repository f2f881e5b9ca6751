//! Directed-graph IFS data model, validation and path machinery.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{GifsError, Result};
use crate::exact_arith::Rational;
use crate::geometry::{CertifiedBox, Similarity};

/// Default refusal threshold for path enumeration.
pub const PATH_CAP: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub ratio: Rational,
    pub prob: Rational,
    /// Maps the component at `to` into the component at `from`.
    pub map: Similarity,
}

#[derive(Debug, Clone)]
pub struct GraphIfs {
    dim: usize,
    vertices: Vec<String>,
    edges: Vec<Edge>,
    open_sets: Vec<Option<CertifiedBox>>,
    out: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

impl GraphIfs {
    /// Assembles a system without checking it; see [`GraphIfs::validate`].
    pub fn new(dim: usize, vertices: Vec<String>, edges: Vec<Edge>, open_sets: Vec<Option<CertifiedBox>>) -> Self {
        let n = vertices.len();
        let mut out = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.from < n {
                out[e.from].push(i);
            }
        }
        for list in &mut out {
            list.sort_by(|&a, &b| edges[a].id.cmp(&edges[b].id));
        }
        let mut open_sets = open_sets;
        open_sets.resize(n, None);
        GraphIfs { dim, vertices, edges, open_sets, out }
    }

    /// Builds and validates.
    pub fn checked(dim: usize, vertices: Vec<String>, edges: Vec<Edge>, open_sets: Vec<Option<CertifiedBox>>) -> Result<Self> {
        let g = Self::new(dim, vertices, edges, open_sets);
        let report = g.validate();
        if report.is_valid() { Ok(g) } else { Err(GifsError::Invalid(report)) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Out-edges of `u`, sorted by id.
    pub fn out_edges(&self, u: usize) -> &[usize] {
        &self.out[u]
    }

    pub fn open_set(&self, v: usize) -> Option<&CertifiedBox> {
        self.open_sets[v].as_ref()
    }

    pub fn with_open_sets(&self, sets: Vec<Option<CertifiedBox>>) -> GraphIfs {
        GraphIfs::new(self.dim, self.vertices.clone(), self.edges.clone(), sets)
    }

    pub fn ratio_bounds(&self) -> (Rational, Rational) {
        let mut lo = self.edges[0].ratio.clone();
        let mut hi = lo.clone();
        for e in &self.edges {
            lo = Rational::min(&lo, &e.ratio);
            hi = Rational::max(&hi, &e.ratio);
        }
        (lo, hi)
    }

    /// Lists every violated structural invariant.
    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        let n = self.vertices.len();
        if !(1..=2).contains(&self.dim) {
            v.push(format!("ambient dimension {} not in {{1, 2}}", self.dim));
        }
        if n == 0 {
            v.push("no vertices".to_string());
        }
        let mut seen = BTreeSet::new();
        for name in &self.vertices {
            if !seen.insert(name) {
                v.push(format!("duplicate vertex id {name}"));
            }
        }
        let mut ids = BTreeSet::new();
        let zero = Rational::zero();
        let one = Rational::one();
        for e in &self.edges {
            if !ids.insert(&e.id) {
                v.push(format!("duplicate edge id {}", e.id));
            }
            if e.from >= n || e.to >= n {
                v.push(format!("edge {}: unknown endpoint vertex", e.id));
            }
            if !(e.ratio > zero && e.ratio < one) {
                v.push(format!("edge {}: ratio outside (0,1): {}", e.id, e.ratio));
            }
            if !(e.prob > zero && e.prob < one) {
                v.push(format!("edge {}: probability outside (0,1): {}", e.id, e.prob));
            }
            if e.map.scale != e.ratio {
                v.push(format!("edge {}: ratio {} differs from map scale {}", e.id, e.ratio, e.map.scale));
            }
            if e.map.dim() != self.dim {
                v.push(format!("edge {}: map dimension {} differs from ambient dimension {}", e.id, e.map.dim(), self.dim));
            }
        }
        for u in 0..n {
            let k = self.out[u].len();
            if k < 2 {
                v.push(format!("vertex {} has {} < 2 out-edges", self.vertices[u], k));
            }
            let s: Rational = self.out[u].iter().map(|&i| &self.edges[i].prob).sum();
            if k > 0 && s != one {
                v.push(format!("vertex {}: probabilities sum {} ≠ 1", self.vertices[u], s));
            }
            if let Some(b) = &self.open_sets[u] {
                if b.dim() != self.dim || !b.is_proper() {
                    v.push(format!("vertex {}: open set is not a nonempty box of dimension {}", self.vertices[u], self.dim));
                }
            }
        }
        if n > 0 && self.edges.iter().all(|e| e.from < n && e.to < n) {
            let reach: Vec<Vec<bool>> = (0..n).map(|u| self.reachable_from(u)).collect();
            for u in 0..n {
                for w in 0..n {
                    if !reach[u][w] {
                        v.push(format!(
                            "not strongly connected: {} cannot reach {}",
                            self.vertices[u], self.vertices[w]
                        ));
                    }
                }
            }
        }
        ValidationReport { violations: v }
    }

    fn reachable_from(&self, u: usize) -> Vec<bool> {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([u]);
        seen[u] = true;
        while let Some(x) = queue.pop_front() {
            for &i in &self.out[x] {
                let t = self.edges[i].to;
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// Number of paths of length `k` from `u` (to `v` if given), saturating.
    pub fn path_count(&self, u: usize, k: usize, v: Option<usize>) -> u128 {
        let n = self.vertices.len();
        let mut cur = vec![0u128; n];
        cur[u] = 1;
        for _ in 0..k {
            let mut next = vec![0u128; n];
            for (x, &c) in cur.iter().enumerate() {
                for &i in &self.out[x] {
                    let t = self.edges[i].to;
                    next[t] = next[t].saturating_add(c);
                }
            }
            cur = next;
        }
        match v {
            Some(v) => cur[v],
            None => cur.iter().fold(0u128, |a, &b| a.saturating_add(b)),
        }
    }

    /// All paths of length `k` from `u` (ending at `v` if given), in lexicographic edge-id order.
    pub fn enumerate_paths(&self, u: usize, k: usize, v: Option<usize>) -> Result<Vec<Path>> {
        self.enumerate_paths_capped(u, k, v, PATH_CAP)
    }

    pub fn enumerate_paths_capped(&self, u: usize, k: usize, v: Option<usize>, cap: u64) -> Result<Vec<Path>> {
        if k == 0 {
            return Err(GifsError::Domain("path length must be at least 1".into()));
        }
        let count = self.path_count(u, k, v);
        if count > cap as u128 {
            return Err(GifsError::PathCap { count, cap });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut stack = Vec::with_capacity(k);
        self.walk(u, k, v, &mut stack, Rational::one(), Rational::one(), &mut out);
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(&self, x: usize, left: usize, v: Option<usize>, stack: &mut Vec<usize>, r: Rational, p: Rational, out: &mut Vec<Path>) {
        if left == 0 {
            if v.is_none_or(|v| v == x) {
                let from = self.edges[stack[0]].from;
                out.push(Path { edges: stack.clone(), from, to: x, ratio: r, prob: p });
            }
            return;
        }
        for &i in &self.out[x] {
            let e = &self.edges[i];
            if let Some(v) = v {
                if self.path_count(e.to, left - 1, Some(v)) == 0 {
                    continue;
                }
            }
            stack.push(i);
            self.walk(e.to, left - 1, v, stack, &r * &e.ratio, &p * &e.prob, out);
            stack.pop();
        }
    }

    /// Stopping set: paths `e` from `u` with `r_e |F_t(e)| < r <= r_{e-} |F_t(e-)|`.
    ///
    /// `diameters[v]` is a `(lower, upper)` bracket on `|F_v|`; equal bounds give exact
    /// comparisons. Returns an empty list when `r` exceeds `|F_u|`.
    pub fn stopping_paths(&self, u: usize, r: &Rational, diameters: &[(Rational, Rational)]) -> Result<Vec<Path>> {
        let small = |ratio: &Rational, v: usize| -> Result<bool> {
            let (lo, hi) = &diameters[v];
            if &(ratio * hi) < r {
                Ok(true)
            } else if &(ratio * lo) >= r {
                Ok(false)
            } else {
                Err(GifsError::Ambiguous { r: r.to_string() })
            }
        };
        if small(&Rational::one(), u)? {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        let mut stack: Vec<(Vec<usize>, Rational, Rational)> = Vec::new();
        for &i in self.out[u].iter().rev() {
            let e = &self.edges[i];
            stack.push((vec![i], e.ratio.clone(), e.prob.clone()));
        }
        let mut visited = 0u64;
        while let Some((edges, ratio, prob)) = stack.pop() {
            visited += 1;
            if visited > PATH_CAP {
                return Err(GifsError::PathCap { count: visited as u128, cap: PATH_CAP });
            }
            let to = self.edges[*edges.last().unwrap()].to;
            if small(&ratio, to)? {
                out.push(Path { from: u, to, edges, ratio, prob });
            } else {
                for &i in self.out[to].iter().rev() {
                    let e = &self.edges[i];
                    let mut next = edges.clone();
                    next.push(i);
                    stack.push((next, &ratio * &e.ratio, &prob * &e.prob));
                }
            }
        }
        Ok(out)
    }
}

/// A nonempty chain of consecutive edges with cached products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub edges: Vec<usize>,
    pub from: usize,
    pub to: usize,
    pub ratio: Rational,
    pub prob: Rational,
}

impl Path {
    pub fn new(g: &GraphIfs, edges: Vec<usize>) -> Result<Path> {
        let first = *edges.first().ok_or_else(|| GifsError::Domain("empty path".into()))?;
        let mut ratio = Rational::one();
        let mut prob = Rational::one();
        let mut at = g.edge(first).from;
        for &i in &edges {
            let e = g.edges.get(i).ok_or_else(|| GifsError::Domain(format!("unknown edge index {i}")))?;
            if e.from != at {
                return Err(GifsError::Domain(format!("edge {} does not start where the previous edge ends", e.id)));
            }
            ratio = ratio * &e.ratio;
            prob = prob * &e.prob;
            at = e.to;
        }
        Ok(Path { from: g.edge(first).from, to: at, edges, ratio, prob })
    }

    pub fn from_ids(g: &GraphIfs, ids: &[&str]) -> Result<Path> {
        let edges = ids
            .iter()
            .map(|id| g.edge_index(id).ok_or_else(|| GifsError::Input(format!("unknown edge id {id}"))))
            .collect::<Result<Vec<_>>>()?;
        Path::new(g, edges)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Dash-joined edge ids.
    pub fn label(&self, g: &GraphIfs) -> String {
        label(g, &self.edges)
    }

    pub fn extend(&self, g: &GraphIfs, i: usize) -> Result<Path> {
        let e = g.edge(i);
        if e.from != self.to {
            return Err(GifsError::Domain(format!("edge {} does not continue the path", e.id)));
        }
        let mut edges = self.edges.clone();
        edges.push(i);
        Ok(Path { from: self.from, to: e.to, edges, ratio: &self.ratio * &e.ratio, prob: &self.prob * &e.prob })
    }
}

pub fn label(g: &GraphIfs, edges: &[usize]) -> String {
    edges.iter().map(|&i| g.edge(i).id.as_str()).collect::<Vec<_>>().join("-")
}

/// True when `f` occurs contiguously inside `g`.
pub fn is_subpath(f: &[usize], g: &[usize]) -> bool {
    f.len() <= g.len() && (f.is_empty() || g.windows(f.len()).any(|w| w == f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn labels(g: &GraphIfs, ps: &[Path]) -> Vec<String> {
        ps.iter().map(|p| p.label(g)).collect()
    }

    #[test]
    fn fixtures_validate() {
        for g in fixtures::all() {
            assert!(g.validate().is_valid(), "{}", g.validate());
        }
    }

    #[test]
    fn probability_violation() {
        let g = fixtures::cantor_weighted(Rational::frac(1, 2), Rational::frac(1, 3));
        let r = g.validate();
        assert!(r.violations.iter().any(|v| v == "vertex u: probabilities sum 5/6 ≠ 1"), "{r}");
    }

    #[test]
    fn missing_edge_violation() {
        let g = fixtures::cantor();
        let edges = vec![g.edge(0).clone()];
        let h = GraphIfs::new(1, vec!["u".into()], edges, vec![]);
        let r = h.validate();
        assert!(r.violations.iter().any(|v| v == "vertex u has 1 < 2 out-edges"), "{r}");
    }

    #[test]
    fn not_strongly_connected() {
        let g = fixtures::two_vertex();
        let edges: Vec<Edge> = g.edges().iter().filter(|e| e.id != "e3").cloned().collect();
        let h = GraphIfs::new(1, vec!["u".into(), "v".into()], edges, vec![]);
        let r = h.validate();
        assert!(r.violations.iter().any(|v| v == "not strongly connected: v cannot reach u"), "{r}");
    }

    #[test]
    fn enumeration_examples() {
        let c = fixtures::cantor();
        assert_eq!(labels(&c, &c.enumerate_paths(0, 2, None).unwrap()), ["e1-e1", "e1-e2", "e2-e1", "e2-e2"]);
        let t = fixtures::two_vertex();
        assert_eq!(labels(&t, &t.enumerate_paths(0, 1, Some(1)).unwrap()), ["e2"]);
        assert_eq!(labels(&t, &t.enumerate_paths(0, 2, Some(0)).unwrap()), ["e1-e1", "e2-e3"]);
        assert!(matches!(c.enumerate_paths_capped(0, 10, None, 1000), Err(GifsError::PathCap { count: 1024, .. })));
    }

    #[test]
    fn stopping_examples() {
        let c = fixtures::cantor();
        let d = vec![(Rational::one(), Rational::one())];
        let p = c.stopping_paths(0, &Rational::frac(1, 5), &d).unwrap();
        assert_eq!(labels(&c, &p), ["e1-e1", "e1-e2", "e2-e1", "e2-e2"]);
        let p = c.stopping_paths(0, &Rational::frac(1, 2), &d).unwrap();
        assert_eq!(labels(&c, &p), ["e1", "e2"]);
        let t = fixtures::halves();
        assert_eq!(t.stopping_paths(0, &Rational::frac(3, 10), &d).unwrap().len(), 4);
        // r = 1/3 sits exactly on a threshold: 1/3 is not < 1/3, so length 2.
        assert_eq!(c.stopping_paths(0, &Rational::frac(1, 3), &d).unwrap().len(), 4);
        let fuzzy = vec![(Rational::frac(99, 100), Rational::frac(101, 100))];
        assert!(matches!(c.stopping_paths(0, &Rational::frac(1, 3), &fuzzy), Err(GifsError::Ambiguous { .. })));
        assert!(c.stopping_paths(0, &Rational::from_integer(2), &d).unwrap().is_empty());
    }

    #[test]
    fn subpaths() {
        assert!(is_subpath(&[0, 1], &[0, 0, 1, 1]));
        assert!(!is_subpath(&[1, 0], &[0, 0, 1, 1]));
        assert!(is_subpath(&[0, 1], &[0, 1]));
        assert!(!is_subpath(&[0, 1, 1], &[0, 1]));
    }

    #[test]
    fn path_products() {
        let t = fixtures::two_vertex();
        let p = Path::from_ids(&t, &["e2", "e4", "e3"]).unwrap();
        assert_eq!(p.ratio, Rational::frac(1, 36));
        assert_eq!(p.prob, Rational::frac(1, 8));
        assert_eq!((p.from, p.to), (0, 0));
        assert!(Path::from_ids(&t, &["e1", "e3"]).is_err());
    }
}
