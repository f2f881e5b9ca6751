//! Lattice classification of the renewal measure matrix.
//!
//! Usage: `cargo run --example lattice`

use gifs::fixtures;
use gifs::renewal::{build_p, classify_lattice};

fn main() -> gifs::Result<()> {
    let systems = [
        ("cantor", fixtures::cantor()),
        ("quarter/eighth", fixtures::quarter_eighth()),
        ("nonlattice", fixtures::nonlattice()),
        ("two-vertex", fixtures::two_vertex()),
    ];
    for (name, g) in systems {
        let c = classify_lattice(&build_p(&g, 1.0)?);
        println!("== {name}: {}", c.verdict);
        print!("{}", c.report(&g));
    }
    Ok(())
}
