//! Small reference systems used by tests, examples and documentation.

use crate::exact_arith::Rational;
use crate::geometry::Similarity;
use crate::graph_ifs::{Edge, GraphIfs};

fn q(a: i64, b: i64) -> Rational {
    Rational::frac(a, b)
}

fn edge(id: &str, from: usize, to: usize, ratio: Rational, t: Rational, prob: Rational) -> Edge {
    Edge { id: id.into(), from, to, map: Similarity::line(ratio.clone(), false, t), ratio, prob }
}

fn one_vertex(edges: Vec<Edge>) -> GraphIfs {
    GraphIfs::new(1, vec!["u".into()], edges, vec![])
}

/// Middle-thirds Cantor set with equal weights.
pub fn cantor() -> GraphIfs {
    cantor_weighted(q(1, 2), q(1, 2))
}

/// Middle-thirds Cantor set with weights `(p1, p2)`.
pub fn cantor_weighted(p1: Rational, p2: Rational) -> GraphIfs {
    one_vertex(vec![edge("e1", 0, 0, q(1, 3), q(0, 1), p1), edge("e2", 0, 0, q(1, 3), q(2, 3), p2)])
}

/// Cantor set with weights 1/4 and 3/4.
pub fn cantor_biased() -> GraphIfs {
    cantor_weighted(q(1, 4), q(3, 4))
}

/// Ratios 1/3 and 1/2: incommensurable logs.
pub fn nonlattice() -> GraphIfs {
    one_vertex(vec![edge("e1", 0, 0, q(1, 3), q(0, 1), q(1, 2)), edge("e2", 0, 0, q(1, 2), q(1, 2), q(1, 2))])
}

/// Two halves of the unit interval: Lebesgue measure, overlaps at 1/2.
pub fn halves() -> GraphIfs {
    one_vertex(vec![edge("e1", 0, 0, q(1, 2), q(0, 1), q(1, 2)), edge("e2", 0, 0, q(1, 2), q(1, 2), q(1, 2))])
}

/// Ratios 1/4 and 1/8: lattice with span ln 2.
pub fn quarter_eighth() -> GraphIfs {
    one_vertex(vec![edge("e1", 0, 0, q(1, 4), q(0, 1), q(1, 2)), edge("e2", 0, 0, q(1, 8), q(7, 8), q(1, 2))])
}

/// Two-vertex system with ratios 1/4 at `u` and 1/3 at `v`.
pub fn two_vertex() -> GraphIfs {
    GraphIfs::new(
        1,
        vec!["u".into(), "v".into()],
        vec![
            edge("e1", 0, 0, q(1, 4), q(0, 1), q(1, 2)),
            edge("e2", 0, 1, q(1, 4), q(3, 4), q(1, 2)),
            edge("e3", 1, 0, q(1, 3), q(0, 1), q(1, 2)),
            edge("e4", 1, 1, q(1, 3), q(2, 3), q(1, 2)),
        ],
        vec![],
    )
}

/// Cantor-like set whose first map reverses orientation.
pub fn flipped() -> GraphIfs {
    let mut e1 = edge("e1", 0, 0, q(1, 3), q(1, 3), q(1, 2));
    e1.map = Similarity::line(q(1, 3), true, q(1, 3));
    one_vertex(vec![e1, edge("e2", 0, 0, q(1, 3), q(2, 3), q(1, 2))])
}

/// Planar system with three corner maps of ratio 1/2 (a Sierpinski gasket).
pub fn gasket() -> GraphIfs {
    let m = |id: &str, tx: Rational, ty: Rational| Edge {
        id: id.into(),
        from: 0,
        to: 0,
        ratio: q(1, 2),
        prob: q(1, 3),
        map: Similarity::plane(q(1, 2), q(0, 1), false, [tx, ty]),
    };
    GraphIfs::new(
        2,
        vec!["u".into()],
        vec![m("e1", q(0, 1), q(0, 1)), m("e2", q(1, 2), q(0, 1)), m("e3", q(0, 1), q(1, 2))],
        vec![],
    )
}

/// Planar system with a 30-degree rotation (inexact trigonometry).
pub fn rotated_pair() -> GraphIfs {
    GraphIfs::new(
        2,
        vec!["u".into()],
        vec![
            Edge {
                id: "e1".into(),
                from: 0,
                to: 0,
                ratio: q(1, 3),
                prob: q(1, 2),
                map: Similarity::plane(q(1, 3), q(30, 1), false, [q(0, 1), q(0, 1)]),
            },
            Edge {
                id: "e2".into(),
                from: 0,
                to: 0,
                ratio: q(1, 3),
                prob: q(1, 2),
                map: Similarity::plane(q(1, 3), q(0, 1), false, [q(2, 3), q(1, 3)]),
            },
        ],
        vec![],
    )
}

/// The five one-dimensional reference systems.
pub fn all() -> Vec<GraphIfs> {
    vec![cantor(), cantor_biased(), nonlattice(), halves(), two_vertex()]
}
