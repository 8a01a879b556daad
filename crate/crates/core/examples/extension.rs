//! Smooth functions realizing prescribed jets: finitely many separated
//! points, then a sequence accumulating at the origin.
//!
//! cargo run --example extension

use jetcalc::jet::{prolong, Jet, JetFamily};
use jetcalc::whitney::{extend_separated, extend_sequence, TolRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let jets = vec![
        Jet::new(vec![-1.0], 2, vec![1.0, 0.0, -2.0])?,
        Jet::new(vec![0.5], 2, vec![0.0, 3.0, 0.0])?,
        Jet::new(vec![2.0], 2, vec![-1.0, 1.0, 1.0])?,
    ];
    let f = extend_separated(&JetFamily::new(jets.clone(), None)?)?;
    for jet in &jets {
        println!("at {:?}: wanted {:?}, got {:?}", jet.base(), jet.coeffs(), prolong(&f, jet.base(), 2)?.coeffs());
    }

    // values (2^-k)^(2k) at 2^-k decay faster than any power of the distance
    let m = 3;
    let entries: Vec<Jet> = (1..=12)
        .map(|k| {
            let a = 0.5f64.powi(k);
            Jet::from_fn(vec![a], m, |i| if i.norm() == 0 { a.powi(2 * k) } else { 0.0 })
        })
        .collect();
    let family = JetFamily::new(entries, Some(Jet::zero(vec![0.0], m)))?;
    let ext = extend_sequence(&family, 2.0, m, TolRule::Linear { slope: 1.0 })?;
    println!("sequence extension: certificate at 0 {}", if ext.certificate.passed { "passed" } else { "failed" });

    // values 2^-k only decay linearly and are rejected
    let slow: Vec<Jet> = (1..=12)
        .map(|k| {
            let a = 0.5f64.powi(k);
            Jet::from_fn(vec![a], m, |i| if i.norm() == 0 { a } else { 0.0 })
        })
        .collect();
    let family = JetFamily::new(slow, Some(Jet::zero(vec![0.0], m)))?;
    println!("linear decay: {}", extend_sequence(&family, 2.0, m, TolRule::Linear { slope: 1.0 }).unwrap_err());
    Ok(())
}
