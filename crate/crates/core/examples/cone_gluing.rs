//! Glue a flat function on the upper nappe of a cone to zero on the lower.
//!
//! cargo run --example cone_gluing

use jetcalc::expr::{parse, Expr};
use jetcalc::whitney::{certify_smoothness, cone_glue, cone_samples, ConeGeometry, ConeRegion, DEFAULT_STEPS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let geom = ConeGeometry::new(2);
    let u = parse("flat(x1^2 + x2^2)", 2)?;
    let v = Expr::zero();
    let f = cone_glue(&u, &v, geom, 6)?;

    for (region, target) in [(ConeRegion::K1, &u), (ConeRegion::K2, &v)] {
        let worst = cone_samples(geom, region, 200, 1e-3, 1)
            .iter()
            .map(|p| (f.evaluate(p, None).unwrap() - target.evaluate(p, None).unwrap()).abs())
            .fold(0.0, f64::max);
        println!("{region:?}: max |f - target| = {worst:e}");
    }

    let cert = certify_smoothness(|p: &[f64]| f.evaluate(p, None), &[0.0, 0.0], 4, &DEFAULT_STEPS);
    println!("apex certificate to order 4: {}", if cert.passed { "passed" } else { "failed" });

    // gluing functions whose jets differ at the apex is refused
    let err = cone_glue(&parse("x1", 2)?, &v, geom, 6).unwrap_err();
    println!("x1 against 0: {err}");
    Ok(())
}
