//! The matrix of atomic measures, lattice classification, the renewal functions
//! `H_u`, `h_u`, and the scaling-law harnesses built on the packing estimators.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;

use crate::error::{GifsError, Result};
use crate::exact_arith::{discrete_span, log_vector, numeric_dependence, Interval, LogVector, Rational};
use crate::geometry::Attractor;
use crate::graph_ifs::GraphIfs;
use crate::packing::{overlap_moment, packing_moment, PackingEstimate, PackingOptions};
use crate::separation::SystemConstants;
use crate::spectral::{build_b, solve_beta, solve_gamma, spectral_radius};
use crate::graph_ifs::Path;

/// One atom of an entry of the measure matrix: mass `weight` at `ln(1/r_e)`.
#[derive(Debug, Clone)]
pub struct Atom {
    pub edge: usize,
    /// Exact `ln(1/r_e)` when the ratio factors within the trial-division bound.
    pub support: Option<LogVector>,
    pub position: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct MeasureMatrix {
    pub q: f64,
    pub beta: f64,
    pub entries: Vec<Vec<Vec<Atom>>>,
}

impl MeasureMatrix {
    pub fn order(&self) -> usize {
        self.entries.len()
    }

    /// Entrywise total mass.
    pub fn total_mass(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|row| row.iter().map(|e| e.iter().map(|a| a.weight).sum()).collect()).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().flatten().flatten().all(|a| a.support.is_some())
    }
}

/// Atoms `p_e^q r_e^β(q)` at `ln(1/r_e)`, one per edge.
pub fn build_p(g: &GraphIfs, q: f64) -> Result<MeasureMatrix> {
    let beta = solve_beta(g, q)?;
    let n = g.vertex_count();
    let mut entries = vec![vec![Vec::new(); n]; n];
    for (i, e) in g.edges().iter().enumerate() {
        let inv = e.ratio.recip()?;
        let support = log_vector(&inv).ok();
        let position = support.as_ref().map_or_else(|| inv.ln(), LogVector::ln);
        let lp = if q == 0.0 { 0.0 } else { q * e.prob.ln() };
        let lr = if beta == 0.0 { 0.0 } else { beta * e.ratio.ln() };
        entries[e.from][e.to].push(Atom { edge: i, support, position, weight: (lp + lr).exp() });
    }
    Ok(MeasureMatrix { q, beta, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetNormalization {
    Smallest,
    Largest,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LatticeVerdict {
    /// Span `λ`; the generator is `λ` as a prime-log vector (absent in numerical mode).
    Lattice { span: f64, generator: Option<LogVector> },
    NonLattice,
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryLattice {
    pub from: usize,
    pub to: usize,
    /// Chosen support element.
    pub offset: f64,
    /// Span of the differences of support elements (none for a single atom).
    pub span: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeClassification {
    pub verdict: LatticeVerdict,
    pub numerical: bool,
    /// Span of the closed-walk sums through each vertex.
    pub diagonal_spans: Vec<Option<f64>>,
    pub entries: Vec<EntryLattice>,
    pub notes: Vec<String>,
}

impl fmt::Display for LatticeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeVerdict::Lattice { span, generator: Some(g) } => write!(f, "Lattice(span = ln {} = {span:.16e})", g.to_rational()),
            LatticeVerdict::Lattice { span, generator: None } => write!(f, "Lattice(span = {span:.16e}, numerical)"),
            LatticeVerdict::NonLattice => f.write_str("NonLattice"),
            LatticeVerdict::Undecided => f.write_str("Undecided(numerical)"),
        }
    }
}

impl LatticeClassification {
    pub fn span(&self) -> Option<f64> {
        match self.verdict {
            LatticeVerdict::Lattice { span, .. } => Some(span),
            _ => None,
        }
    }

    pub fn report(&self, g: &GraphIfs) -> String {
        let mut s = format!("verdict: {}\nmode: {}\n", self.verdict, if self.numerical { "numerical" } else { "exact" });
        for (v, sp) in self.diagonal_spans.iter().enumerate() {
            match sp {
                Some(x) => s += &format!("cycle span at {}: {x:.16e}\n", g.vertex_name(v)),
                None => s += &format!("cycle span at {}: dense\n", g.vertex_name(v)),
            }
        }
        for e in &self.entries {
            s += &format!(
                "entry {}->{}: offset {:.16e} span {}\n",
                g.vertex_name(e.from),
                g.vertex_name(e.to),
                e.offset,
                e.span.map_or("-".to_string(), |x| format!("{x:.16e}"))
            );
        }
        for n in &self.notes {
            s += &format!("note: {n}\n");
        }
        s
    }
}

/// Bound on the number of distinct walk sums tracked per vertex pair.
const WALK_SET_CAP: usize = 4096;

/// Sums of supports along closed walks of length at most `2n` through each vertex.
fn cycle_sums<T: Clone + Ord>(n: usize, atoms: &[(usize, usize, T)], add: impl Fn(&T, &T) -> T) -> Option<Vec<Vec<T>>> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut level: Vec<BTreeSet<T>> = vec![BTreeSet::new(); n];
        let mut closed = BTreeSet::new();
        for (a, b, x) in atoms {
            if *a == i {
                level[*b].insert(x.clone());
            }
        }
        for _ in 0..2 * n {
            closed.extend(level[i].iter().cloned());
            let mut next: Vec<BTreeSet<T>> = vec![BTreeSet::new(); n];
            for (a, b, x) in atoms {
                for s in &level[*a] {
                    next[*b].insert(add(s, x));
                }
            }
            if next.iter().any(|s| s.len() > WALK_SET_CAP) {
                return None;
            }
            level = next;
        }
        out.push(closed.into_iter().collect());
    }
    Some(out)
}

pub fn classify_lattice(p: &MeasureMatrix) -> LatticeClassification {
    classify_lattice_with(p, OffsetNormalization::Smallest)
}

/// Lattice test on the supports: closed-walk sums and within-entry differences must
/// share a span `λ`, and entry offsets must satisfy the cocycle condition mod `λ`.
pub fn classify_lattice_with(p: &MeasureMatrix, norm: OffsetNormalization) -> LatticeClassification {
    if p.is_exact() {
        exact_classify(p, norm)
    } else {
        numeric_classify(p, norm)
    }
}

fn pick<'a, T: Ord>(xs: &'a [T], norm: OffsetNormalization) -> &'a T {
    match norm {
        OffsetNormalization::Smallest => xs.iter().min().unwrap(),
        OffsetNormalization::Largest => xs.iter().max().unwrap(),
    }
}

fn exact_classify(p: &MeasureMatrix, norm: OffsetNormalization) -> LatticeClassification {
    let n = p.order();
    let atoms: Vec<(usize, usize, LogVector)> = p
        .entries
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().flat_map(move |(j, e)| e.iter().map(move |a| (i, j, a.support.clone().unwrap()))))
        .collect();
    let mut notes = Vec::new();
    let Some(cycles) = cycle_sums(n, &atoms, |a, b| a + b) else {
        notes.push("walk-sum sets exceeded the tracking cap".into());
        return LatticeClassification { verdict: LatticeVerdict::Undecided, numerical: false, diagonal_spans: vec![None; n], entries: vec![], notes };
    };
    let diagonal_spans: Vec<Option<f64>> = cycles.iter().map(|c| discrete_span(c).map(|s| s.generator.ln())).collect();
    let mut generators: Vec<LogVector> = cycles.iter().flatten().cloned().collect();
    let mut entries = Vec::new();
    let mut offsets: Vec<Vec<Option<LogVector>>> = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            let sup: Vec<LogVector> = p.entries[i][j].iter().map(|a| a.support.clone().unwrap()).collect();
            if sup.is_empty() {
                continue;
            }
            let b = pick(&sup, norm).clone();
            let diffs: Vec<LogVector> = sup.iter().map(|x| x - &b).collect();
            let span = discrete_span(&diffs).map(|s| s.generator.ln());
            generators.extend(diffs);
            entries.push(EntryLattice { from: i, to: j, offset: b.ln(), span });
            offsets[i][j] = Some(b);
        }
    }
    let verdict = if diagonal_spans.iter().any(Option::is_none) {
        notes.push("closed-walk sums at some vertex generate a dense group".into());
        LatticeVerdict::NonLattice
    } else {
        match discrete_span(&generators) {
            None => {
                notes.push("no common span for walk sums and support differences".into());
                LatticeVerdict::NonLattice
            }
            Some(span) => {
                let lam = span.generator;
                let mut ok = true;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            if let (Some(a), Some(b), Some(c)) = (&offsets[i][j], &offsets[j][k], &offsets[i][k]) {
                                let d = &(a + b) - c;
                                if d.multiple_of(&lam).is_none() && !d.is_zero() {
                                    ok = false;
                                    notes.push(format!("cocycle condition fails at ({i},{j},{k})"));
                                }
                            }
                        }
                    }
                }
                if ok {
                    LatticeVerdict::Lattice { span: lam.ln(), generator: Some(lam) }
                } else {
                    LatticeVerdict::NonLattice
                }
            }
        }
    };
    LatticeClassification { verdict, numerical: false, diagonal_spans, entries, notes }
}

/// Wrapper giving floats a total order for set storage.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Key {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

fn numeric_classify(p: &MeasureMatrix, norm: OffsetNormalization) -> LatticeClassification {
    let n = p.order();
    let tol = 1e-9;
    let atoms: Vec<(usize, usize, Key)> = p
        .entries
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().flat_map(move |(j, e)| e.iter().map(move |a| (i, j, Key(a.position)))))
        .collect();
    // Sums are rounded so that equal values coming from different walks merge.
    let round = |x: f64| (x * 1e12).round() / 1e12;
    let mut notes = vec!["supports not exactly factorable; numerical mode".to_string()];
    let undecided = |notes: Vec<String>| LatticeClassification {
        verdict: LatticeVerdict::Undecided,
        numerical: true,
        diagonal_spans: vec![None; n],
        entries: vec![],
        notes,
    };
    let Some(cycles) = cycle_sums(n, &atoms, |a, b| Key(round(a.0 + b.0))) else {
        return undecided(notes);
    };
    let diagonal_spans: Vec<Option<f64>> = cycles.iter().map(|c| numeric_dependence(&c.iter().map(|k| k.0).collect::<Vec<_>>(), tol).map(|d| d.0)).collect();
    let mut values: Vec<f64> = cycles.iter().flatten().map(|k| k.0).collect();
    let mut entries = Vec::new();
    let mut offsets = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            let sup: Vec<Key> = p.entries[i][j].iter().map(|a| Key(a.position)).collect();
            if sup.is_empty() {
                continue;
            }
            let b = pick(&sup, norm).0;
            let diffs: Vec<f64> = sup.iter().map(|x| x.0 - b).filter(|d| d.abs() > tol).collect();
            let span = numeric_dependence(&diffs, tol).map(|d| d.0);
            values.extend(diffs);
            entries.push(EntryLattice { from: i, to: j, offset: b, span });
            offsets[i][j] = Some(b);
        }
    }
    let Some((lam, _)) = numeric_dependence(&values, tol) else {
        notes.push("no rational dependence detected".into());
        return LatticeClassification { verdict: LatticeVerdict::Undecided, numerical: true, diagonal_spans, entries, notes };
    };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if let (Some(a), Some(b), Some(c)) = (offsets[i][j], offsets[j][k], offsets[i][k]) {
                    let d: f64 = (a + b - c) / lam;
                    if (d - d.round()).abs() > tol * d.abs().max(1.0) {
                        notes.push(format!("cocycle condition fails numerically at ({i},{j},{k})"));
                        return LatticeClassification { verdict: LatticeVerdict::Undecided, numerical: true, diagonal_spans, entries, notes };
                    }
                }
            }
        }
    }
    LatticeClassification { verdict: LatticeVerdict::Lattice { span: lam, generator: None }, numerical: true, diagonal_spans, entries, notes }
}

fn moment_interval(e: &PackingEstimate) -> Interval {
    e.value_interval
}

/// `r^β M_u^q(F_u, r)` as an interval.
pub fn h_upper_at_scale(att: &Attractor, u: usize, q: f64, beta: f64, r: &Rational, opts: &PackingOptions) -> Result<Interval> {
    let m = packing_moment(att, u, q, r, opts)?;
    Ok(moment_interval(&m) * r.to_interval().powf(beta))
}

/// `H_u(t) = e^{-tβ(q)} M_u^q(F_u, e^{-t})`.
pub fn big_h_function(att: &Attractor, u: usize, q: f64, t: f64) -> Result<Interval> {
    let beta = solve_beta(att.graph(), q)?;
    h_upper_at_scale(att, u, q, beta, &scale_of(t)?, &PackingOptions::default())
}

/// Renewal error term at scale `r`: `r^β (M_u(r) - Σ_e p_e^q M_{t(e)}(r / r_e))`.
pub fn h_at_scale(att: &Attractor, u: usize, q: f64, beta: f64, r: &Rational, opts: &PackingOptions) -> Result<Interval> {
    let g = att.graph();
    let whole = moment_interval(&packing_moment(att, u, q, r, opts)?);
    let mut parts = Interval::point(0.0);
    for &i in g.out_edges(u) {
        let e = g.edge(i);
        let m = packing_moment(att, e.to, q, &r.checked_div(&e.ratio)?, opts)?;
        let w = if q == 0.0 { Interval::point(1.0) } else { e.prob.to_interval().powf(q) };
        parts = parts + w * moment_interval(&m);
    }
    Ok((whole - parts) * r.to_interval().powf(beta))
}

/// `h_u(t)` with `r = e^{-t}`.
pub fn h_function(att: &Attractor, u: usize, q: f64, t: f64) -> Result<Interval> {
    let beta = solve_beta(att.graph(), q)?;
    h_at_scale(att, u, q, beta, &scale_of(t)?, &PackingOptions::default())
}

fn scale_of(t: f64) -> Result<Rational> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(GifsError::Domain(format!("t = {t} must be finite and nonnegative")));
    }
    Rational::from_f64((-t).exp()).ok_or_else(|| GifsError::Domain(format!("scale underflow at t = {t}")))
}

/// Geometric grid `hi, hi·ratio, …` of `points` rationals.
pub fn geometric_grid(hi: f64, ratio: f64, points: usize) -> Vec<Rational> {
    (0..points).map(|k| Rational::from_f64(hi * ratio.powi(k as i32)).expect("finite scale")).collect()
}

/// Least-squares line `y = a + b x` with the slope's standard error.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if x.len() > 2 && sxx > 0.0 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, intercept, stderr)
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct LqFit {
    pub q: f64,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub beta_ref: f64,
    pub residuals: Vec<f64>,
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    pub unconverged: bool,
    pub lattice_flag: bool,
}

/// Slope of `ln M̂(r)` against `-ln r` over the grid.
pub fn lq_spectrum_fit(att: &Attractor, u: usize, q: f64, r_grid: &[Rational]) -> Result<LqFit> {
    if r_grid.len() < 5 {
        return Err(GifsError::Domain("fit needs at least 5 scales".into()));
    }
    let beta_ref = solve_beta(att.graph(), q)?;
    let opts = PackingOptions::default();
    let ests: Vec<PackingEstimate> = r_grid.par_iter().map(|r| packing_moment(att, u, q, r, &opts)).collect::<Result<_>>()?;
    let x: Vec<f64> = r_grid.iter().map(|r| -r.ln()).collect();
    let y: Vec<f64> = ests.iter().map(|e| e.value.ln()).collect();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(GifsError::NoConvergence("empty packing in fit".into()));
    }
    let (slope, intercept, stderr) = least_squares(&x, &y);
    let residuals = x.iter().zip(&y).map(|(a, b)| b - intercept - slope * a).collect();
    let lattice_flag = matches!(classify_lattice(&build_p(att.graph(), q)?).verdict, LatticeVerdict::Lattice { .. });
    Ok(LqFit {
        q,
        slope,
        intercept,
        stderr,
        beta_ref,
        residuals,
        scales: r_grid.iter().map(Rational::to_f64).collect(),
        values: ests.iter().map(|e| e.value).collect(),
        unconverged: ests.iter().any(|e| e.unconverged),
        lattice_flag,
    })
}

#[derive(Debug, Clone)]
pub struct RateCheck {
    /// `(ln M̂(r) / (-ln r) - β) · (-ln r)` per scale.
    pub residual_products: Vec<f64>,
    pub max_abs: f64,
    pub median_abs: f64,
    /// Slope of the products against `-ln r`.
    pub trend_slope: f64,
    pub pass: bool,
}

pub fn rate_from_fit(fit: &LqFit) -> RateCheck {
    let x: Vec<f64> = fit.scales.iter().map(|r| -r.ln()).collect();
    let prods: Vec<f64> = fit.values.iter().zip(&x).map(|(m, t)| (m.ln() / t - fit.beta_ref) * t).collect();
    let abs: Vec<f64> = prods.iter().map(|p| p.abs()).collect();
    let max_abs = abs.iter().cloned().fold(0.0, f64::max);
    let median_abs = median(&abs);
    let (trend_slope, _, _) = least_squares(&x, &prods);
    let pass = max_abs <= 10.0 * median_abs && trend_slope.abs() <= 0.05;
    RateCheck { residual_products: prods, max_abs, median_abs, trend_slope, pass }
}

pub fn convergence_rate_check(att: &Attractor, u: usize, q: f64, r_grid: &[Rational]) -> Result<RateCheck> {
    if r_grid.len() < 2 {
        return Err(GifsError::Domain("rate check needs at least 2 scales".into()));
    }
    Ok(rate_from_fit(&lq_spectrum_fit(att, u, q, r_grid)?))
}

#[derive(Debug, Clone)]
pub struct Periodicity {
    pub ns: Vec<i64>,
    pub means: Vec<f64>,
    /// `(max - min) / mean` over the last half of the range.
    pub fluctuation: f64,
    /// The same over the whole range.
    pub full_fluctuation: f64,
}

fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min) / (xs.iter().sum::<f64>() / xs.len() as f64)
}

/// `Ĥ(t0 + nλ)` for `n` in the range; near-constant in the tail for a lattice system.
pub fn lattice_periodicity_check(att: &Attractor, u: usize, q: f64, t0: f64, ns: std::ops::RangeInclusive<i64>) -> Result<Periodicity> {
    let g = att.graph();
    let lat = classify_lattice(&build_p(g, q)?);
    let LatticeVerdict::Lattice { generator: Some(gen), .. } = lat.verdict else {
        return Err(GifsError::Domain(format!("periodicity needs an exact lattice system, got {}", lat.verdict)));
    };
    let beta = solve_beta(g, q)?;
    let base = scale_of(t0)?;
    let step = gen.to_rational().recip()?;
    let ns: Vec<i64> = ns.collect();
    let opts = PackingOptions::default();
    let means: Vec<f64> = ns
        .par_iter()
        .map(|&n| {
            let r = &base * &step.pow(n as i32);
            h_upper_at_scale(att, u, q, beta, &r, &opts).map(|i| i.mid())
        })
        .collect::<Result<_>>()?;
    let tail = &means[means.len() / 2..];
    Ok(Periodicity { fluctuation: spread(tail), full_fluctuation: spread(&means), ns, means })
}

#[derive(Debug, Clone)]
pub struct Theorem2Row {
    pub r: f64,
    pub q_est: Interval,
    pub scaled: f64,
}

#[derive(Debug, Clone)]
pub struct Theorem2Check {
    pub gamma: f64,
    pub rows: Vec<Theorem2Row>,
    pub max: f64,
    pub median: f64,
    pub trend_slope: f64,
    pub pass: bool,
}

/// `r^γ(q) Q̂_{e,f}^q(r)` over a grid inside `(0, δ)`, with a boundedness verdict.
pub fn theorem2_check(
    att: &Attractor,
    u: usize,
    e: usize,
    f: usize,
    q: f64,
    r_grid: &[Rational],
    constants: &SystemConstants,
) -> Result<Theorem2Check> {
    if let Some(r) = r_grid.iter().find(|r| **r >= constants.delta || !r.is_positive()) {
        return Err(GifsError::Domain(format!("scale {r} outside (0, {})", constants.delta)));
    }
    let gamma = solve_gamma(att.graph(), q, constants.l, &constants.ell_paths)?;
    let opts = PackingOptions::default();
    let rows: Vec<Theorem2Row> = r_grid
        .par_iter()
        .map(|r| {
            let est = overlap_moment(att, u, e, f, q, r, &opts)?;
            let rf = r.to_f64();
            Ok(Theorem2Row { r: rf, q_est: est.value_interval, scaled: rf.powf(gamma) * est.value })
        })
        .collect::<Result<_>>()?;
    let scaled: Vec<f64> = rows.iter().map(|r| r.scaled).collect();
    let max = scaled.iter().cloned().fold(0.0, f64::max);
    let median = median(&scaled);
    let trend_slope = if scaled.iter().all(|s| *s > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| -r.r.ln()).collect();
        let y: Vec<f64> = scaled.iter().map(|s| s.ln()).collect();
        least_squares(&x, &y).0
    } else {
        0.0
    };
    let pass = max <= 10.0 * median && trend_slope <= 0.05;
    Ok(Theorem2Check { gamma, rows, max, median, trend_slope, pass })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSums {
    pub count: usize,
    pub sum: f64,
    pub scaled: f64,
}

/// Sum of `p^q` over paths from `w` with `α r <= r_path < β r` that contain no
/// distinguished path as a block, and that sum times `r^γ`.
pub fn g_path_sums(att: &Attractor, w: usize, q: f64, gamma: f64, r: &Rational, constants: &SystemConstants) -> Result<PathSums> {
    let g = att.graph();
    let lo = &constants.alpha * r;
    let hi = &constants.beta_scale * r;
    let l = constants.l;
    let ell: Vec<&[usize]> = constants.ell_paths.iter().map(|p| p.edges.as_slice()).collect();
    let mut count = 0usize;
    let mut sum = 0.0;
    let mut visits = 0u64;
    // (edges, ratio, ln p)
    let mut stack: Vec<(Vec<usize>, Rational, f64)> = g.out_edges(w).iter().rev().map(|&i| (vec![i], g.edge(i).ratio.clone(), g.edge(i).prob.ln())).collect();
    while let Some((edges, ratio, lp)) = stack.pop() {
        visits += 1;
        if visits > crate::graph_ifs::PATH_CAP {
            return Err(GifsError::PathCap { count: visits as u128, cap: crate::graph_ifs::PATH_CAP });
        }
        if ratio < lo {
            continue;
        }
        if edges.len() >= l {
            let tail = &edges[edges.len() - l..];
            let start = g.edge(tail[0]).from;
            if ell[start] == tail {
                continue;
            }
        }
        if ratio < hi {
            count += 1;
            sum += if q == 0.0 { 1.0 } else { (q * lp).exp() };
        }
        let to = g.edge(*edges.last().unwrap()).to;
        for &i in g.out_edges(to).iter().rev() {
            let mut next = edges.clone();
            next.push(i);
            stack.push((next, &ratio * &g.edge(i).ratio, lp + g.edge(i).prob.ln()));
        }
    }
    Ok(PathSums { count, sum, scaled: r.to_f64().powf(gamma) * sum })
}

#[derive(Debug, Clone)]
pub struct SupBound {
    pub gamma: f64,
    /// Perron vector of the reduced matrix at `(q, γ)`.
    pub b: Vec<f64>,
    pub c_a: f64,
    /// Largest `scaled / (c_a b_w)` over the check grid.
    pub worst: f64,
    pub pass: bool,
}

/// Calibrates `C_a = max scaled / b_w` on seed scales in `[δ r_max^l, δ)` and checks
/// `scaled <= C_a b_w` on `check` scales for every vertex.
pub fn g_sup_check(att: &Attractor, q: f64, constants: &SystemConstants, seed: &[Rational], check: &[Rational]) -> Result<SupBound> {
    let g = att.graph();
    let gamma = solve_gamma(g, q, constants.l, &constants.ell_paths)?;
    let b = spectral_radius(&build_b(g, q, gamma, constants.l, &constants.ell_paths)?)?.right_vector;
    let n = g.vertex_count();
    let ratio = |rs: &[Rational]| -> Result<f64> {
        let vals: Vec<f64> = rs
            .par_iter()
            .flat_map(|r| (0..n).into_par_iter().map(move |w| (r, w)))
            .map(|(r, w)| g_path_sums(att, w, q, gamma, r, constants).map(|s| s.scaled / b[w]))
            .collect::<Result<_>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    };
    let c_a = ratio(seed)?;
    let top = ratio(check)?;
    let worst = if c_a > 0.0 { top / c_a } else if top == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(SupBound { gamma, b, c_a, worst, pass: worst <= 1.0 + 1e-12 })
}

/// Scales in the seed window `[δ r_max^l, δ)`: a geometric sample plus both sides of
/// every scale where a path ratio enters or leaves `[α r, β r)`. Between those scales
/// the path set is fixed and `r^γ` is monotone, so the window maximum of the scaled
/// sums is reached (or approached to a relative `2^-40`) on the returned set.
pub fn seed_window(att: &Attractor, constants: &SystemConstants, points: usize) -> Result<Vec<Rational>> {
    let g = att.graph();
    let lo = &constants.delta * &constants.r_max.pow(constants.l as i32);
    let span = (constants.delta.to_f64() / lo.to_f64()).ln();
    let nudge = Rational::frac(1, 1 << 40);
    let one = Rational::one();
    let mut out: Vec<Rational> = (0..points)
        .map(|k| Rational::from_f64(lo.to_f64() * (span * k as f64 / points as f64).exp()).expect("finite"))
        .collect();
    out.push(lo.clone());
    out.push(&constants.delta * &(&one - &nudge));
    let floor = &constants.alpha * &lo;
    let mut ratios = std::collections::BTreeSet::new();
    let mut stack: Vec<(usize, Rational)> = (0..g.vertex_count()).map(|v| (v, one.clone())).collect();
    let mut visits = 0u64;
    while let Some((v, ratio)) = stack.pop() {
        for &i in g.out_edges(v) {
            visits += 1;
            if visits > crate::graph_ifs::PATH_CAP {
                return Err(GifsError::PathCap { count: visits as u128, cap: crate::graph_ifs::PATH_CAP });
            }
            let next = &ratio * &g.edge(i).ratio;
            if next >= floor {
                ratios.insert(next.clone());
                stack.push((g.edge(i).to, next));
            }
        }
    }
    for rho in &ratios {
        for b in [rho / &constants.alpha, rho / &constants.beta_scale] {
            for r in [&b * &(&one + &nudge), b.clone()] {
                if r >= lo && r < constants.delta {
                    out.push(r);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Distinguished paths as labels, one per vertex.
pub fn ell_labels(g: &GraphIfs, ell: &[Path]) -> Vec<String> {
    ell.iter().map(|p| p.label(g)).collect()
}
