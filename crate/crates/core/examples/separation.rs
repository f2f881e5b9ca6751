//! Separation checks (strong, convex-hull and open-set conditions) and the
//! derived small-scale constants.
//!
//! Usage: `cargo run --example separation`

use gifs::fixtures;
use gifs::separation::{check_cssc, check_osc, check_ssc, compute_constants, construct_ell_paths, default_open_sets, Verdict};
use gifs::{Attractor, Rational};

fn main() -> gifs::Result<()> {
    let tol = Rational::frac(1, 1 << 20);
    let systems = [
        ("cantor", fixtures::cantor()),
        ("halves", fixtures::halves()),
        ("two-vertex", fixtures::two_vertex()),
        ("gasket", fixtures::gasket()),
        ("rotated pair", fixtures::rotated_pair()),
    ];
    for (name, g) in systems {
        let att = Attractor::new(g.clone())?;
        let open = default_open_sets(&att);
        println!("== {name}");
        for r in [check_ssc(&att, &tol), check_cssc(&att), check_osc(&att, &open)] {
            println!("{}", r.describe(&g));
        }
        if check_osc(&att, &open).verdict == Verdict::Holds {
            let (l, ell) = construct_ell_paths(&att, &open, 1.0, 2)?;
            print!("{}", compute_constants(&att, &open, l, &ell)?.table(&g));
        }
    }
    Ok(())
}
