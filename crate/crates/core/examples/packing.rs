//! Packing numbers, packing moments and overlap moments.
//!
//! Usage: `cargo run --example packing`

use gifs::fixtures;
use gifs::packing::{ball_count_bound, center_labels, overlap_moment, packing_moment, packing_number, power_sum_check, PackingOptions};
use gifs::{Attractor, Rational};

fn main() -> gifs::Result<()> {
    let q = Rational::frac;
    let opts = PackingOptions::default();
    let c = Attractor::new(fixtures::cantor())?;
    for r in [q(1, 2), q(1, 6), q(1, 20), q(1, 100)] {
        let n = packing_number(&c, 0, &r)?;
        println!("cantor packing number at r = {r}: {} ({})", n.count, n.kind.as_str());
    }
    for qq in [0.0, 1.0, 2.0] {
        let est = packing_moment(&c, 0, qq, &q(1, 6), &opts)?;
        let labels = center_labels(&c, 0, &est, &q(1, 6), &opts)?;
        println!("cantor moment q = {qq}, r = 1/6: {:.6} in {} ({}), centers {labels:?}", est.value, est.value_interval, est.kind.as_str());
    }
    let g = Attractor::new(fixtures::gasket())?;
    let est = packing_moment(&g, 0, 1.0, &q(1, 20), &opts)?;
    println!("gasket q = 1, r = 1/20: {} centers, value {:.6} ({})", est.centers.len(), est.value, est.kind.as_str());

    let t = Attractor::new(fixtures::halves())?;
    for r in [q(1, 10), q(1, 100)] {
        let o = overlap_moment(&t, 0, 0, 1, 0.0, &r, &opts)?;
        println!("halves overlap e1/e2 at r = {r}: {} center(s)", o.centers.len());
    }
    println!("ball count bound (1, 1, 2) = {}", ball_count_bound(1.0, 1.0, 2));
    let chk = power_sum_check(2.0, &[1.0, 1.0], 2.0);
    println!("power sums p = 2, (1, 1), C = 2: {} ({} <= {})", chk.holds, chk.lhs, chk.rhs);
    Ok(())
}
