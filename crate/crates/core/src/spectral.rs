//! Perron-Frobenius machinery and the exponent equations `ρ(A(q,β)) = 1`, `ρ(B(q,γ,l)) = 1`.

use num_integer::Integer;

use crate::error::{GifsError, Result};
use crate::graph_ifs::{GraphIfs, Path};

const POWER_CAP: usize = 100_000;

/// Dense square matrix with nonnegative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    n: usize,
    data: Vec<f64>,
}

impl NonnegMatrix {
    pub fn zeros(n: usize) -> Self {
        NonnegMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "matrix must be square");
            for (j, &x) in r.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        assert!(x >= 0.0, "negative entry {x}");
        self.data[i * self.n + j] = x;
    }

    fn add(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] += x;
    }

    pub fn mul(&self, o: &NonnegMatrix) -> NonnegMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a != 0.0 {
                    for j in 0..n {
                        out.data[i * n + j] += a * o.get(k, j);
                    }
                }
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> NonnegMatrix {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            out.data[i * self.n + i] = 1.0;
        }
        (0..k).fold(out, |acc, _| acc.mul(self))
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    /// Max row sum norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).sum()).collect()
    }

    fn scaled(&self, c: f64) -> NonnegMatrix {
        NonnegMatrix { n: self.n, data: self.data.iter().map(|x| x * c).collect() }
    }

    fn support(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|i| (0..self.n).filter(|&j| self.get(i, j) > 0.0).collect()).collect()
    }
}

fn bfs(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[start] = Some(0);
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if level[j].is_none() {
                level[j] = Some(level[i].unwrap() + 1);
                queue.push_back(j);
            }
        }
    }
    level
}

/// Strong connectivity of the support digraph.
pub fn is_irreducible(m: &NonnegMatrix) -> bool {
    if m.n == 0 {
        return false;
    }
    let adj = m.support();
    let mut rev = vec![Vec::new(); m.n];
    for (i, js) in adj.iter().enumerate() {
        for &j in js {
            rev[j].push(i);
        }
    }
    if m.n == 1 {
        return m.get(0, 0) > 0.0;
    }
    bfs(&adj, 0).iter().all(Option::is_some) && bfs(&rev, 0).iter().all(Option::is_some)
}

/// Gcd of the cycle lengths of the support digraph.
pub fn primitivity_index(m: &NonnegMatrix) -> Result<usize> {
    if !is_irreducible(m) {
        return Err(GifsError::NotIrreducible);
    }
    let adj = m.support();
    let level = bfs(&adj, 0);
    let mut h = 0usize;
    for (i, js) in adj.iter().enumerate() {
        for &j in js {
            let d = (level[i].unwrap() + 1) as i64 - level[j].unwrap() as i64;
            h = h.gcd(&(d.unsigned_abs() as usize));
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronData {
    pub rho: f64,
    /// Normalized to max entry 1.
    pub right_vector: Vec<f64>,
    /// `‖Mv − ρv‖∞`.
    pub residual: f64,
    /// `‖M^k‖∞^{1/k}` for `k = 32, 64`; each is an upper bound on `ρ`.
    pub gelfand: [f64; 2],
}

/// `‖M^k‖∞^{1/k}` for `k` a power of two, computed with rescaling.
pub fn gelfand_estimate(m: &NonnegMatrix, k: u32) -> f64 {
    assert!(k.is_power_of_two());
    let s = m.norm_inf();
    if s == 0.0 {
        return 0.0;
    }
    let mut q = m.scaled(1.0 / s);
    let mut log_c = 0.0f64;
    let mut p = 1u32;
    while p < k {
        q = q.mul(&q);
        log_c *= 2.0;
        let nq = q.norm_inf();
        if nq == 0.0 {
            return 0.0;
        }
        q = q.scaled(1.0 / nq);
        log_c += nq.ln();
        p *= 2;
    }
    s * (log_c / k as f64).exp()
}

/// Spectral radius by power iteration on `M/‖M‖ + I`.
pub fn spectral_radius(m: &NonnegMatrix) -> Result<PerronData> {
    let n = m.n;
    let s = m.norm_inf();
    if s == 0.0 {
        return Ok(PerronData { rho: 0.0, right_vector: vec![1.0; n], residual: 0.0, gelfand: [0.0; 2] });
    }
    let p = m.scaled(1.0 / s);
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    let mut converged = false;
    for _ in 0..POWER_CAP {
        let pv = p.mul_vec(&v);
        let w: Vec<f64> = pv.iter().zip(&v).map(|(a, b)| a + b).collect();
        let top = w.iter().copied().fold(0.0, f64::max);
        let next: Vec<f64> = w.iter().map(|x| x / top).collect();
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        lambda = top;
        if change <= 4.0 * f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(GifsError::NoConvergence("power iteration cap reached".into()));
    }
    // Rayleigh-type estimate from the converged vector.
    let mv = m.mul_vec(&v);
    let (num, den) = mv.iter().zip(&v).fold((0.0, 0.0), |(a, b), (x, y)| (a + x * y, b + y * y));
    let rho = if den > 0.0 { num / den } else { s * (lambda - 1.0) };
    let residual = mv.iter().zip(&v).map(|(x, y)| (x - rho * y).abs()).fold(0.0, f64::max);
    let gelfand = [gelfand_estimate(m, 32), gelfand_estimate(m, 64)];
    if gelfand.iter().any(|&g| rho > g * (1.0 + 1e-9) + 1e-300) {
        return Err(GifsError::NoConvergence(format!("power iteration value {rho} exceeds norm bound {gelfand:?}")));
    }
    Ok(PerronData { rho, right_vector: v, residual, gelfand })
}

/// `ln ρ` robust to entries spanning many orders of magnitude.
fn log_radius(n: usize, terms: &[(usize, usize, f64)]) -> Result<f64> {
    let top = terms.iter().map(|t| t.2).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let mut m = NonnegMatrix::zeros(n);
    for &(i, j, x) in terms {
        m.add(i, j, (x - top).exp());
    }
    let rho = spectral_radius(&m)?.rho;
    Ok(top + rho.ln())
}

/// Path data `(from, to, ln p, ln r)` generating a family of exponent matrices.
#[derive(Debug, Clone)]
pub struct ExponentTerms {
    n: usize,
    terms: Vec<(usize, usize, f64, f64)>,
}

impl ExponentTerms {
    /// All paths of length `l`, skipping `ell[u]` in row `u` when given.
    pub fn new(g: &GraphIfs, l: usize, ell: Option<&[Path]>) -> Result<Self> {
        if let Some(ell) = ell {
            if ell.len() != g.vertex_count() {
                return Err(GifsError::Domain("one distinguished path per vertex required".into()));
            }
            for (u, p) in ell.iter().enumerate() {
                if p.len() != l || p.from != u {
                    return Err(GifsError::Domain(format!(
                        "distinguished path for vertex {} must start there and have length {l}",
                        g.vertex_name(u)
                    )));
                }
            }
        }
        let mut terms = Vec::new();
        for u in 0..g.vertex_count() {
            for p in g.enumerate_paths(u, l, None)? {
                if ell.is_some_and(|ell| ell[u].edges == p.edges) {
                    continue;
                }
                terms.push((u, p.to, p.prob.ln(), p.ratio.ln()));
            }
        }
        Ok(ExponentTerms { n: g.vertex_count(), terms })
    }

    fn logs(&self, q: f64, b: f64) -> Vec<(usize, usize, f64)> {
        self.terms.iter().map(|&(i, j, lp, lr)| (i, j, if q == 0.0 { 0.0 } else { q * lp } + if b == 0.0 { 0.0 } else { b * lr })).collect()
    }

    pub fn matrix(&self, q: f64, b: f64) -> NonnegMatrix {
        let mut m = NonnegMatrix::zeros(self.n);
        for (i, j, x) in self.logs(q, b) {
            m.add(i, j, x.exp());
        }
        m
    }

    pub fn log_radius(&self, q: f64, b: f64) -> Result<f64> {
        log_radius(self.n, &self.logs(q, b))
    }

    /// The unique `b` with `ρ(matrix(q, b)) = 1`.
    pub fn solve(&self, q: f64) -> Result<f64> {
        if !is_irreducible(&self.matrix(0.0, 0.0)) {
            return Err(GifsError::NotIrreducible);
        }
        let f = |b: f64| self.log_radius(q, b);
        let (mut lo, mut hi) = (-64.0f64, 64.0f64);
        let (mut flo, mut fhi) = (f(lo)?, f(hi)?);
        let mut grow = 0;
        while !(flo > 0.0 && fhi < 0.0) {
            grow += 1;
            if grow > 12 {
                return Err(GifsError::Bracket(format!("no sign change for q = {q} on [{lo}, {hi}]")));
            }
            if flo <= 0.0 {
                lo *= 2.0;
                flo = f(lo)?;
            }
            if fhi >= 0.0 {
                hi *= 2.0;
                fhi = f(hi)?;
            }
        }
        // Illinois false position, falling back to bisection.
        let mut side = 0;
        for _ in 0..400 {
            let mut x = hi - fhi * (hi - lo) / (fhi - flo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let fx = f(x)?;
            if fx == 0.0 || (hi - lo) <= 1e-15 * (1.0 + x.abs()) {
                return Ok(x);
            }
            if fx > 0.0 {
                lo = x;
                flo = fx;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            } else {
                hi = x;
                fhi = fx;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
            if fx.abs() < 1e-15 {
                return Ok(x);
            }
        }
        let x = 0.5 * (lo + hi);
        if f(x)?.abs() < 1e-12 {
            Ok(x)
        } else {
            Err(GifsError::NoConvergence(format!("exponent solve for q = {q}")))
        }
    }
}

/// `A(q,β,l)`: entries `Σ p^q r^β` over paths of length `l` from `u` to `v`.
pub fn build_a(g: &GraphIfs, q: f64, beta: f64, l: usize) -> Result<NonnegMatrix> {
    Ok(ExponentTerms::new(g, l, None)?.matrix(q, beta))
}

/// `B(q,γ,l)`: as `A(q,γ,l)` with the term of `ell[u]` removed from row `u`.
pub fn build_b(g: &GraphIfs, q: f64, gamma: f64, l: usize, ell: &[Path]) -> Result<NonnegMatrix> {
    Ok(ExponentTerms::new(g, l, Some(ell))?.matrix(q, gamma))
}

pub fn solve_beta(g: &GraphIfs, q: f64) -> Result<f64> {
    ExponentTerms::new(g, 1, None)?.solve(q)
}

pub fn solve_gamma(g: &GraphIfs, q: f64, l: usize, ell: &[Path]) -> Result<f64> {
    ExponentTerms::new(g, l, Some(ell))?.solve(q)
}

/// Similarity dimension: the exponent at `q = 0`.
pub fn hausdorff_dimension(g: &GraphIfs) -> Result<f64> {
    solve_beta(g, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn m(rows: &[&[f64]]) -> NonnegMatrix {
        NonnegMatrix::from_rows(rows)
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&m(&[&[0.0, 1.0], &[1.0, 0.0]])));
        assert!(!is_irreducible(&m(&[&[1.0, 1.0], &[0.0, 1.0]])));
        assert!(is_irreducible(&m(&[&[1.0]])));
        assert!(!is_irreducible(&m(&[&[0.0]])));
    }

    #[test]
    fn primitivity() {
        assert_eq!(primitivity_index(&m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap(), 2);
        assert_eq!(primitivity_index(&m(&[&[1.0, 1.0], &[1.0, 0.0]])).unwrap(), 1);
        let cyc3 = m(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        assert_eq!(primitivity_index(&cyc3).unwrap(), 3);
        assert!(matches!(primitivity_index(&m(&[&[1.0, 1.0], &[0.0, 1.0]])), Err(GifsError::NotIrreducible)));
    }

    #[test]
    fn radius_examples() {
        assert!((spectral_radius(&m(&[&[2.0]])).unwrap().rho - 2.0).abs() < 1e-15);
        let p = spectral_radius(&m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((p.rho - 1.0).abs() < 1e-14);
        let p = spectral_radius(&m(&[&[1.0, 2.0], &[3.0, 4.0]])).unwrap();
        assert!((p.rho - (5.0 + 33f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(p.residual < 1e-12);
        assert!(p.right_vector.iter().all(|&x| x > 0.0));
        assert!(p.gelfand.iter().all(|&g| g >= p.rho));
    }

    #[test]
    fn a_matrix_examples() {
        let b = 2f64.ln() / 3f64.ln();
        let a = build_a(&fixtures::cantor(), 0.0, b, 1).unwrap();
        assert!((a.get(0, 0) - 1.0).abs() < 1e-15);
        let t = 0.7;
        let a = build_a(&fixtures::two_vertex(), 0.0, t, 1).unwrap();
        let (x, y) = (4f64.powf(-t), 3f64.powf(-t));
        for (i, j, want) in [(0, 0, x), (0, 1, x), (1, 0, y), (1, 1, y)] {
            assert!((a.get(i, j) - want).abs() < 1e-15);
        }
        for g in fixtures::all() {
            let a = build_a(&g, 1.0, 0.0, 1).unwrap();
            assert!(a.row_sums().iter().all(|s| (s - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn a_power_matches_enumeration() {
        let g = fixtures::two_vertex();
        let a1 = build_a(&g, 0.7, -0.3, 1).unwrap();
        let a3 = build_a(&g, 0.7, -0.3, 3).unwrap();
        let p = a1.pow(3);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a3.get(i, j) - p.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn b_matrix_examples() {
        let t = fixtures::halves();
        let ell = vec![Path::from_ids(&t, &["e1", "e2"]).unwrap()];
        let gam = 0.3;
        let b = build_b(&t, 0.0, gam, 2, &ell).unwrap();
        assert!((b.get(0, 0) - 3.0 * 2f64.powf(-2.0 * gam)).abs() < 1e-15);
        let c = fixtures::cantor();
        let ell = vec![Path::from_ids(&c, &["e1", "e2"]).unwrap()];
        let b = build_b(&c, 1.0, 0.0, 2, &ell).unwrap();
        assert!((b.get(0, 0) - 0.75).abs() < 1e-15);
        let bad = vec![Path::from_ids(&c, &["e1"]).unwrap()];
        assert!(build_b(&c, 1.0, 0.0, 2, &bad).is_err());
    }

    #[test]
    fn exponent_examples() {
        let ln2_ln3 = 2f64.ln() / 3f64.ln();
        assert!((solve_beta(&fixtures::cantor(), 0.0).unwrap() - ln2_ln3).abs() < 1e-12);
        assert!((solve_beta(&fixtures::cantor_biased(), 2.0).unwrap() - (10.0f64 / 16.0).ln() / 3f64.ln()).abs() < 1e-12);
        for g in fixtures::all() {
            assert!(solve_beta(&g, 1.0).unwrap().abs() < 1e-12);
        }
        assert!((hausdorff_dimension(&fixtures::halves()).unwrap() - 1.0).abs() < 1e-12);
        let t = fixtures::halves();
        let ell = vec![Path::from_ids(&t, &["e1", "e2"]).unwrap()];
        let g0 = solve_gamma(&t, 0.0, 2, &ell).unwrap();
        assert!((g0 - 3f64.log2() / 2.0).abs() < 1e-12);
        let g1 = solve_gamma(&t, 1.0, 2, &ell).unwrap();
        assert!((g1 - (3f64.log2() / 2.0 - 1.0)).abs() < 1e-12);
        let c = fixtures::cantor();
        let ell = vec![Path::from_ids(&c, &["e1", "e2"]).unwrap()];
        assert!((solve_gamma(&c, 0.0, 2, &ell).unwrap() - 0.5).abs() < 1e-12);
    }
}
