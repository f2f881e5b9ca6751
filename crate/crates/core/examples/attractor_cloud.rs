//! Point clouds of attractor components, deterministic and chaos-game.
//!
//! Usage: `cargo run --example attractor_cloud [-- OUT.csv]`

use gifs::cli::{fmt_f64, write_atomic};
use gifs::fixtures;
use gifs::geometry::CloudMode;
use gifs::graph_ifs::label;
use gifs::Attractor;

fn main() -> gifs::Result<()> {
    let att = Attractor::new(fixtures::gasket())?;
    let cloud = att.attractor_points(0, 6, CloudMode::Deterministic)?;
    println!("gasket depth 6: {} points, every point of the set within {:?}", cloud.points.len(), cloud.resolution.map(|r| r.to_f64()));
    let b = &att.hulls().boxes[0];
    println!("bounding box [{}, {}] x [{}, {}]", b.lo[0], b.hi[0], b.lo[1], b.hi[1]);

    let chaos = att.attractor_points(0, 16, CloudMode::Chaos { points: 2000, seed: 42 })?;
    let mut body = String::from("x,y,depth,path\n");
    for (p, path) in chaos.points.iter().zip(&chaos.paths) {
        body += &format!("{},{},{},{}\n", fmt_f64(p[0]), fmt_f64(p[1]), chaos.depth, label(att.graph(), path));
    }
    if let Some(out) = std::env::args().nth(1) {
        write_atomic(std::path::Path::new(&out), &body)?;
        println!("wrote {} chaos points to {out}", chaos.points.len());
    } else {
        println!("first chaos points: {:?}", &chaos.points[..3]);
    }

    let t = Attractor::new(fixtures::two_vertex())?;
    for v in 0..2 {
        let c = t.attractor_points(v, 4, CloudMode::Deterministic)?;
        let xs: Vec<String> = c.points.iter().take(6).map(|p| format!("{:.4}", p[0])).collect();
        println!("two-vertex component {}: {} points, first {}", t.graph().vertex_name(v), c.points.len(), xs.join(" "));
    }
    Ok(())
}
