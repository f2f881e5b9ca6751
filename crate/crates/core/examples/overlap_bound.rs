//! Small-scale behaviour of overlap moments: scaled overlap estimates and the
//! path-sum diagnostics behind their bound.
//!
//! Usage: `cargo run --example overlap_bound`

use gifs::fixtures;
use gifs::renewal::{ell_labels, g_path_sums, g_sup_check, geometric_grid, seed_window, theorem2_check};
use gifs::separation::{compute_constants, construct_ell_paths, default_open_sets};
use gifs::{Attractor, Rational};

fn main() -> gifs::Result<()> {
    let t = Attractor::new(fixtures::halves())?;
    let g = t.graph();
    let open = default_open_sets(&t);
    for q in [0.0, 1.0] {
        let (l, ell) = construct_ell_paths(&t, &open, q, 2)?;
        let k = compute_constants(&t, &open, l, &ell)?;
        println!("q = {q}: l = {}, paths {:?}, delta = {}", k.l, ell_labels(g, &k.ell_paths), k.delta);
        let grid = geometric_grid(0.99 * k.delta.to_f64(), 2f64.powf(-0.25), 20);
        let chk = theorem2_check(&t, 0, 0, 1, q, &grid, &k)?;
        for row in chk.rows.iter().step_by(4) {
            println!("  r = {:.3e}: Q in {}, r^gamma Q = {:.4e}", row.r, row.q_est, row.scaled);
        }
        println!("  gamma {:.6}, max {:.4e}, median {:.4e}, trend {:.4}, bounded {}", chk.gamma, chk.max, chk.median, chk.trend_slope, chk.pass);

        let seed = seed_window(&t, &k, 8)?;
        let check = geometric_grid(0.99 * k.delta.to_f64(), 0.5, 14);
        let sup = g_sup_check(&t, q, &k, &seed, &check)?;
        println!("  path sums: C_a = {:.4}, worst ratio {:.4}, pass {}", sup.c_a, sup.worst, sup.pass);
        for r in [Rational::frac(3, 512), Rational::frac(3, 1024)] {
            let s = g_path_sums(&t, 0, q, sup.gamma, &r, &k)?;
            println!("  r = {r}: {} paths, sum {:.6}, scaled {:.6}", s.count, s.sum, s.scaled);
        }
    }
    Ok(())
}
