//! Spectral exponents: similarity dimension, beta(q) and gamma(q).
//!
//! Usage: `cargo run --example spectrum`

use gifs::fixtures;
use gifs::separation::{compute_constants, construct_ell_paths, default_open_sets};
use gifs::spectral::{hausdorff_dimension, solve_beta, solve_gamma};
use gifs::Attractor;

fn main() -> gifs::Result<()> {
    for (name, g) in [("cantor", fixtures::cantor()), ("weighted cantor", fixtures::cantor_biased()), ("two-vertex", fixtures::two_vertex())] {
        println!("{name}: dimension {:.12}", hausdorff_dimension(&g)?);
        let att = Attractor::new(g.clone())?;
        let open = default_open_sets(&att);
        println!("   q        beta       gamma");
        for k in -2..=8 {
            let q = 0.5 * k as f64;
            let (l, ell) = construct_ell_paths(&att, &open, q, 2)?;
            let consts = compute_constants(&att, &open, l, &ell)?;
            let beta = solve_beta(&g, q)?;
            let gamma = solve_gamma(&g, q, consts.l, &consts.ell_paths)?;
            println!("{q:>5.1} {beta:>11.6} {gamma:>11.6}");
        }
    }
    let c = fixtures::cantor();
    println!("cantor beta(q) = (1 - q) ln 2 / ln 3: at q = 3 {:.12} vs {:.12}", solve_beta(&c, 3.0)?, -2.0 * 2f64.ln() / 3f64.ln());
    Ok(())
}
