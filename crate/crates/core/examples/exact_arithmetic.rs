//! Exact rationals, prime-exponent logarithms and discrete spans.
//!
//! Usage: `cargo run --example exact_arithmetic`

use gifs::exact_arith::{discrete_span, log_vector, numeric_dependence};
use gifs::Rational;

fn main() -> gifs::Result<()> {
    let a: Rational = "1/4".parse()?;
    let b: Rational = "1/8".parse()?;
    println!("a = {a}, b = {b}, a*b = {}, a/b = {}", &a * &b, &a / &b);

    // ln(1/r) as a vector of prime exponents.
    let la = log_vector(&a.recip()?)?;
    let lb = log_vector(&b.recip()?)?;
    println!("ln(1/a) = {la} ~ {:.6}", la.ln());
    println!("ln(1/b) = {lb} ~ {:.6}", lb.ln());

    match discrete_span(&[la.clone(), lb.clone()]) {
        Some(s) => println!("common span: ln {} with multipliers {:?}", s.generator.to_rational(), s.multipliers),
        None => println!("no common span"),
    }
    let l3 = log_vector(&Rational::from_integer(3))?;
    let l2 = log_vector(&Rational::from_integer(2))?;
    println!("ln 2 and ln 3 discrete: {}", discrete_span(&[l2, l3]).is_some());

    // Float fallback for values that are not exact logs.
    let v = [2f64.ln() * 3.0, 2f64.ln() * 5.0];
    if let Some((span, ks)) = numeric_dependence(&v, 1e-9) {
        println!("numeric span {span:.12} multipliers {ks:?}");
    }

    // Certified square-root bounds and outward-rounded intervals.
    let two = Rational::from_integer(2);
    println!("sqrt 2 in [{:.17}, {:.17}]", two.sqrt_lower().to_f64(), two.sqrt_upper().to_f64());
    println!("sqrt 9/4 exact: {:?}", Rational::frac(9, 4).sqrt_exact());
    let third = Rational::frac(1, 3).to_interval();
    println!("1/3 enclosed by {third}, 3 x 1/3 by {}", third.scale(3.0));
    Ok(())
}
