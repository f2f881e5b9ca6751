//! Writes the reference systems as JSON files and reads them back.
//!
//! Usage: `cargo run --example system_files [-- OUTDIR]` (default: `systems`).

use std::path::PathBuf;

use gifs::cli::{parse_system, system_to_json, write_atomic};
use gifs::fixtures;
use gifs::geometry::CertifiedBox;
use gifs::{GraphIfs, Rational};

fn main() -> gifs::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "systems".into()));
    let unit = CertifiedBox::new(vec![Rational::zero()], vec![Rational::one()]);
    let systems: Vec<(&str, GraphIfs)> = vec![
        ("cantor.json", fixtures::cantor()),
        ("cantor_weighted.json", fixtures::cantor_biased()),
        ("nonlattice.json", fixtures::nonlattice()),
        ("halves.json", fixtures::halves().with_open_sets(vec![Some(unit)])),
        ("two_vertex.json", fixtures::two_vertex()),
        ("quarter_eighth.json", fixtures::quarter_eighth()),
        ("flipped.json", fixtures::flipped()),
        ("gasket.json", fixtures::gasket()),
        ("rotated_pair.json", fixtures::rotated_pair()),
    ];
    for (name, g) in systems {
        let text = system_to_json(&g)?;
        let back = parse_system(&text)?;
        assert_eq!(back.edges().len(), g.edges().len());
        write_atomic(&dir.join(name), &text)?;
        println!("{name}: {} vertices, {} edges", g.vertex_count(), g.edges().len());
    }
    Ok(())
}
