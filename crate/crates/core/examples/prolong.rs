//! Parse an expression, take symbolic partials and prolong it to a jet.
//!
//! cargo run --example prolong

use jetcalc::expr::parse;
use jetcalc::jet::{mi_enumerate, prolong};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = parse("exp(x1)*sin(x2) + flat(x1)", 2)?;
    println!("s = {s}");
    println!("d/dx2 s = {}", s.differentiate(1));

    let a = [0.3, 0.5];
    let jet = prolong(&s, &a, 3)?;
    for (index, value) in mi_enumerate(2, 3).iter().zip(jet.coeffs()) {
        println!("D{:?} s(a) = {value:.6}", index.exponents());
    }

    // the Taylor polynomial tracks s near a, and lower jets are projections
    let y = [0.35, 0.45];
    println!("s(y) = {:.9}, T^3_a s(y) = {:.9}", s.evaluate(&y, None)?, jet.taylor_eval(&y)?);
    assert_eq!(jet.truncate(1)?.coeffs(), prolong(&s, &a, 1)?.coeffs());
    Ok(())
}
