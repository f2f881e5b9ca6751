//! Log-periodic behaviour of the normalized packing moment in a lattice system,
//! and its vanishing correction term under strong separation.
//!
//! Usage: `cargo run --example periodicity`

use gifs::fixtures;
use gifs::renewal::{big_h_function, h_function, lattice_periodicity_check};
use gifs::Attractor;

fn main() -> gifs::Result<()> {
    let c = Attractor::new(fixtures::cantor())?;
    let p = lattice_periodicity_check(&c, 0, 0.0, 1.2, 0..=12)?;
    for (n, m) in p.ns.iter().zip(&p.means) {
        println!("n = {n:>2}: H = {m:.9}");
    }
    println!("fluctuation over the tail {:.2e}, over the range {:.2e}", p.fluctuation, p.full_fluctuation);

    for t in [0.5, 1.2, 2.0, 3.5] {
        println!("t = {t}: H(t) in {}, h(t) in {}", big_h_function(&c, 0, 1.0, t)?, h_function(&c, 0, 1.0, t)?);
    }
    Ok(())
}
