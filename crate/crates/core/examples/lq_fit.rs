//! Log-log fits of packing moments against the spectral exponent, and the
//! convergence-rate diagnostic.
//!
//! Usage: `cargo run --example lq_fit`

use gifs::fixtures;
use gifs::renewal::{geometric_grid, lq_spectrum_fit, rate_from_fit};
use gifs::Attractor;

fn main() -> gifs::Result<()> {
    let grid = geometric_grid(0.1, 2f64.powf(-0.5), 21);
    for (name, g) in [("cantor", fixtures::cantor()), ("nonlattice", fixtures::nonlattice())] {
        let att = Attractor::new(g)?;
        for q in [0.0, 1.0, 2.0] {
            let fit = lq_spectrum_fit(&att, 0, q, &grid)?;
            let rate = rate_from_fit(&fit);
            println!(
                "{name} q = {q}: slope {:.4} +- {:.4}, beta {:.4}; rate max {:.3} median {:.3} trend {:.4}{}",
                fit.slope,
                fit.stderr,
                fit.beta_ref,
                rate.max_abs,
                rate.median_abs,
                rate.trend_slope,
                if fit.lattice_flag { " (lattice: log-periodic residuals)" } else { "" }
            );
        }
    }
    Ok(())
}
