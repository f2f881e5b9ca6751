//! Certified brackets on the self-similar measure of balls.
//!
//! Usage: `cargo run --example ball_measure`

use gifs::fixtures;
use gifs::measure::{ball_measure, cylinder_measure, DEPTH_CAP};
use gifs::{Attractor, Path, Rational};

fn main() -> gifs::Result<()> {
    let q = Rational::frac;
    let c = Attractor::new(fixtures::cantor())?;
    let tol = q(1, 10_000);
    for (x, r) in [(q(0, 1), q(1, 3)), (q(0, 1), q(1, 6)), (q(1, 2), q(1, 10)), (q(2, 3), q(1, 30))] {
        let m = ball_measure(&c, 0, &[x.clone()], &r, &tol, DEPTH_CAP);
        println!("cantor B({x}, {r}): [{}, {}] after {} halvings", m.lo_exact, m.hi_exact, m.refinement_depth);
    }
    // With equal weights on two halves the measure is Lebesgue measure.
    let t = Attractor::new(fixtures::halves())?;
    let m = ball_measure(&t, 0, &[q(1, 4)], &q(1, 10), &tol, DEPTH_CAP);
    println!("halves B(1/4, 1/10): [{:.6}, {:.6}] (length 1/5)", m.lo, m.hi);

    let w = fixtures::cantor_biased();
    let p = Path::from_ids(&w, &["e1", "e2"])?;
    println!("weighted cantor cylinder e1e2: {}", cylinder_measure(&p));
    Ok(())
}
