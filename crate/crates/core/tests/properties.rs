use proptest::prelude::*;

use gifs::exact_arith::{discrete_span, log_vector, LogVector};
use gifs::fixtures;
use gifs::geometry::{compose, CloudMode};
use gifs::measure::ball_measure;
use gifs::packing::{is_separated, packing_moment, power_sum_check, PackingOptions};
use gifs::renewal::{build_p, classify_lattice};
use gifs::separation::{compute_constants, construct_ell_paths, default_open_sets};
use gifs::spectral::{build_a, build_b, is_irreducible, solve_beta, spectral_radius, NonnegMatrix};
use gifs::{Attractor, GraphIfs, Path, Rational};

fn q(a: i64, b: i64) -> Rational {
    Rational::frac(a, b)
}

fn unit_rational() -> impl Strategy<Value = Rational> {
    (1i64..2000, 1i64..2000).prop_filter_map("proper fraction", |(a, b)| (a < b).then(|| q(a, b)))
}

fn system() -> impl Strategy<Value = GraphIfs> {
    prop::sample::select(fixtures::all())
}

fn random_path(g: &GraphIfs, start: usize, choices: &[usize]) -> Path {
    let mut edges = Vec::new();
    let mut v = start;
    for &c in choices {
        let out = g.out_edges(v);
        let e = out[c % out.len()];
        edges.push(e);
        v = g.edge(e).to;
    }
    Path::new(g, edges).unwrap()
}

fn matrix(n: usize, xs: &[f64]) -> NonnegMatrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|i| xs[i * n..(i + 1) * n].to_vec()).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    NonnegMatrix::from_rows(&refs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_vector_is_additive(a in unit_rational(), b in unit_rational()) {
        let ab = log_vector(&(&a * &b)).unwrap();
        let sum = &log_vector(&a).unwrap() + &log_vector(&b).unwrap();
        prop_assert_eq!(ab, sum);
    }

    #[test]
    fn span_ignores_order_and_repeats(ks in prop::collection::vec(1i64..40, 1..6), base in 2i64..7, perm in any::<prop::sample::Index>()) {
        let g = log_vector(&Rational::from_integer(base)).unwrap();
        let vs: Vec<LogVector> = ks.iter().map(|&k| g.scale(k)).collect();
        let span = discrete_span(&vs).unwrap();
        for (v, m) in vs.iter().zip(&span.multipliers) {
            prop_assert_eq!(&span.generator.scale(*m), v);
        }
        let mut shuffled = vs.clone();
        shuffled.rotate_left(perm.index(vs.len()));
        shuffled.push(vs[0].clone());
        prop_assert_eq!(discrete_span(&shuffled).unwrap().generator, span.generator);
    }

    #[test]
    fn interval_encloses_exact(a in -500i64..500, b in 1i64..500, c in -500i64..500, d in 1i64..500) {
        let (x, y) = (q(a, b), q(c, d));
        let inside = |v: &Rational, i: gifs::Interval| {
            Rational::from_f64(i.lo).unwrap() <= *v && *v <= Rational::from_f64(i.hi).unwrap()
        };
        prop_assert!(inside(&(&x + &y), x.to_interval() + y.to_interval()));
        prop_assert!(inside(&(&x - &y), x.to_interval() - y.to_interval()));
        prop_assert!(inside(&(&x * &y), x.to_interval() * y.to_interval()));
    }

    #[test]
    fn path_probabilities_sum_to_one(g in system(), k in 1usize..7) {
        for u in 0..g.vertex_count() {
            let paths = g.enumerate_paths(u, k, None).unwrap();
            prop_assert_eq!(paths.len() as u128, g.path_count(u, k, None));
            let total: Rational = paths.iter().map(|p| p.prob.clone()).sum();
            prop_assert_eq!(total, Rational::one());
        }
    }

    #[test]
    fn stopping_paths_form_antichain(g in system(), den in 2i64..200) {
        let att = Attractor::new(g.clone()).unwrap();
        let paths = g.stopping_paths(0, &q(1, den), &att.hulls().diameters).unwrap();
        for a in &paths {
            for b in &paths {
                if a.edges != b.edges {
                    prop_assert!(!b.edges.starts_with(&a.edges));
                }
            }
        }
    }

    #[test]
    fn composed_scale_is_path_ratio(g in system(), choices in prop::collection::vec(0usize..4, 1..20)) {
        let p = random_path(&g, 0, &choices);
        let m = compose(&g, &p);
        let product: Rational = p.edges.iter().fold(Rational::one(), |acc, &e| acc * &g.edge(e).ratio);
        let prob: Rational = p.edges.iter().fold(Rational::one(), |acc, &e| acc * &g.edge(e).prob);
        prop_assert_eq!(&m.scale, &p.ratio);
        prop_assert_eq!(product, p.ratio);
        prop_assert_eq!(prob, p.prob);
    }

    #[test]
    fn perron_root_is_one_at_beta(g in system(), qi in 0i32..17) {
        let qq = 0.25 * qi as f64;
        let beta = solve_beta(&g, qq).unwrap();
        let p = spectral_radius(&build_a(&g, qq, beta, 1).unwrap()).unwrap();
        prop_assert!((p.rho - 1.0).abs() < 1e-12);
        prop_assert!(p.right_vector.iter().all(|&v| v > 0.0));
        prop_assert!(solve_beta(&g, qq + 0.25).unwrap() < beta);
        let a2 = build_a(&g, qq, beta, 2).unwrap();
        let a1 = build_a(&g, qq, beta, 1).unwrap();
        let sq = a1.mul(&a1);
        for i in 0..a2.order() {
            for j in 0..a2.order() {
                prop_assert!((a2.get(i, j) - sq.get(i, j)).abs() < 1e-12);
            }
        }
        let total = build_p(&g, qq).unwrap().total_mass();
        for i in 0..a1.order() {
            for j in 0..a1.order() {
                prop_assert!((total[i][j] - a1.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn radius_decreases_in_exponent(g in system(), qi in -8i32..17, b in -2.0f64..2.0) {
        let qq = 0.25 * qi as f64;
        let lo = spectral_radius(&build_a(&g, qq, b, 1).unwrap()).unwrap().rho;
        let hi = spectral_radius(&build_a(&g, qq, b + 0.1, 1).unwrap()).unwrap().rho;
        prop_assert!(hi < lo);
    }

    #[test]
    fn radius_is_monotone_and_multiplicative(n in 1usize..5, xs in prop::collection::vec(0.05f64..3.0, 16), bump in prop::collection::vec(0.0f64..1.0, 16), k in 1u32..4) {
        let c = matrix(n, &xs);
        let d = matrix(n, &xs.iter().zip(&bump).map(|(a, b)| a + b).collect::<Vec<_>>());
        let rc = spectral_radius(&c).unwrap().rho;
        let rd = spectral_radius(&d).unwrap().rho;
        prop_assert!(rc <= rd * (1.0 + 1e-12));
        let rk = spectral_radius(&c.pow(k)).unwrap().rho;
        prop_assert!((rk - rc.powi(k as i32)).abs() <= 1e-10 * rk.max(1.0));
    }

    #[test]
    fn lattice_verdict_ignores_q(g in system(), qi in -4i32..9) {
        let a = classify_lattice(&build_p(&g, 0.0).unwrap()).verdict;
        let b = classify_lattice(&build_p(&g, 0.5 * qi as f64).unwrap()).verdict;
        prop_assert_eq!(a, b);
        prop_assert!(build_p(&g, 0.5 * qi as f64).unwrap().entries.iter().flatten().flatten().all(|a| a.position > 0.0));
    }

    #[test]
    fn power_sum_inequality(p in -4.0f64..4.0, values in prop::collection::vec(0.001f64..50.0, 1..10), extra in 0.0f64..10.0) {
        let c = values.len() as f64 + extra;
        prop_assert!(power_sum_check(p, &values, c).holds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ball_measure_monotone_in_radius(x in 0u32..1000, r in 1u32..400, dr in 1u32..100) {
        let att = Attractor::new(fixtures::cantor()).unwrap();
        let x = vec![q(x as i64, 1000)];
        let tol = q(1, 1000);
        let a = ball_measure(&att, 0, &x, &q(r as i64, 1000), &tol, 30);
        let b = ball_measure(&att, 0, &x, &q((r + dr) as i64, 1000), &tol, 30);
        prop_assert!(a.lo_exact <= b.hi_exact);
        prop_assert!(a.lo_exact <= a.hi_exact && b.lo_exact <= b.hi_exact);
        prop_assert!(a.converged && a.width() <= 1e-3);
    }

    #[test]
    fn ball_measure_on_support_is_positive(choices in prop::collection::vec(0usize..2, 1..12), r in 1u32..1000) {
        let att = Attractor::new(fixtures::nonlattice()).unwrap();
        let p = random_path(att.graph(), 0, &choices);
        let x = att.code_to_point(&p).0;
        let m = ball_measure(&att, 0, &x, &q(r as i64, 100_000), &q(1, 1_000_000), 30);
        prop_assert!(m.lo_exact.is_positive());
    }

    #[test]
    fn packings_are_separated_and_maximal(g in system(), den in 3i64..400, qi in 0i32..3) {
        let att = Attractor::new(g).unwrap();
        let r = q(1, den);
        let est = packing_moment(&att, 0, qi as f64, &r, &PackingOptions::default()).unwrap();
        prop_assert!(is_separated(&est.centers, &r));
        prop_assert!(!est.centers.is_empty());
        prop_assert!(est.value_interval.lo <= est.value * (1.0 + 1e-9));
        // Any cylinder representative at a finer scale either collides or was already used.
        let cover = att.cover(0, &(&r / &q(2, 1))).unwrap();
        for c in cover {
            let x = att.representative(&c);
            if !est.centers.contains(&x) {
                let mut more = est.centers.clone();
                more.push(x);
                prop_assert!(!is_separated(&more, &r));
            }
        }
    }

    #[test]
    fn deterministic_cloud_is_self_similar(g in system(), k in 1usize..6) {
        let att = Attractor::new(g.clone()).unwrap();
        for u in 0..g.vertex_count() {
            let deep = att.attractor_points(u, k + 1, CloudMode::Deterministic).unwrap();
            let mut images = Vec::new();
            for &e in g.out_edges(u) {
                let inner = att.attractor_points(g.edge(e).to, k, CloudMode::Deterministic).unwrap();
                images.extend(inner.exact.unwrap().iter().map(|p| g.edge(e).map.apply(p)));
            }
            let mut a = deep.exact.unwrap();
            a.sort();
            a.dedup();
            images.sort();
            images.dedup();
            prop_assert_eq!(a, images);
        }
    }
}

#[test]
fn hulls_are_invariant() {
    for g in fixtures::all().into_iter().chain([fixtures::gasket(), fixtures::flipped()]) {
        let att = Attractor::new(g.clone()).unwrap();
        let boxes = &att.hulls().boxes;
        for (u, b) in boxes.iter().enumerate() {
            for &e in g.out_edges(u) {
                assert!(b.contains_box(&g.edge(e).map.apply_box(&boxes[g.edge(e).to])));
            }
        }
    }
}

#[test]
fn constants_satisfy_their_definitions() {
    for g in [fixtures::cantor(), fixtures::halves(), fixtures::two_vertex(), fixtures::nonlattice()] {
        let att = Attractor::new(g.clone()).unwrap();
        let open = default_open_sets(&att);
        for qq in [0.0, 1.0] {
            let (l, ell) = construct_ell_paths(&att, &open, qq, 2).unwrap();
            let k = compute_constants(&att, &open, l, &ell).unwrap();
            let bound = Rational::from_integer(2) * &k.d_max / &k.c_min;
            let inv = k.r_max.recip().unwrap();
            assert!(bound <= inv.pow(k.n as i32 - 1));
            if k.n > 1 {
                assert!(bound > inv.pow(k.n as i32 - 2));
            }
            assert_eq!(k.delta, k.r_min.pow((k.n as usize + l + 1) as i32) * &k.d_min);
            for (u, p) in ell.iter().enumerate() {
                let img = att.cylinder(p).bx;
                assert!(open[u].contains_box(&img));
            }
            let gamma = gifs::spectral::solve_gamma(&g, qq, l, &ell).unwrap();
            assert!(is_irreducible(&build_b(&g, qq, gamma, l, &ell).unwrap()));
        }
    }
}
