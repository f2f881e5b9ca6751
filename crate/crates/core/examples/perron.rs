//! Perron roots, Perron vectors and the primitivity index of nonnegative matrices.
//!
//! Usage: `cargo run --example perron`

use gifs::fixtures;
use gifs::spectral::{build_a, gelfand_estimate, is_irreducible, primitivity_index, solve_beta, spectral_radius, NonnegMatrix};

fn main() -> gifs::Result<()> {
    let m = NonnegMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
    let p = spectral_radius(&m)?;
    println!("rho = {:.15} (closed form {:.15})", p.rho, (5.0 + 33f64.sqrt()) / 2.0);
    println!("vector {:?}, residual {:.2e}, norm bounds {:?}", p.right_vector, p.residual, p.gelfand);

    let swap = NonnegMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    println!("swap: irreducible {}, index {}", is_irreducible(&swap), primitivity_index(&swap)?);
    println!("swap: ||M^64||^(1/64) = {}", gelfand_estimate(&swap, 64));

    let g = fixtures::two_vertex();
    for q in [0.0, 1.0, 2.0] {
        let beta = solve_beta(&g, q)?;
        let a = build_a(&g, q, beta, 1)?;
        let p = spectral_radius(&a)?;
        println!("two-vertex q = {q}: beta {beta:.9}, rho(A) = {:.15}, Perron vector {:?}", p.rho, p.right_vector);
    }
    Ok(())
}
