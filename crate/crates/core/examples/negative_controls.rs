//! Operators that break the hypotheses: non-local and irregular ones.
//!
//! cargo run --example negative_controls

use jetcalc::operator::{catalog_make, CatalogSpec, Section};
use jetcalc::peetre::{check_locality, check_regularity, ProbeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ProbeConfig::default();
    let s = Section::parse(1, &["x1^2"])?;

    let square = catalog_make(&CatalogSpec::Square, 1, 1)?;
    println!("square local: {:?}", check_locality(&square, &s, &[0.0], 0.5, &cfg)?.status);

    let shift = catalog_make(&CatalogSpec::Shift { v: vec![1.0] }, 1, 1)?;
    let v = check_locality(&shift, &s, &[0.0], 0.5, &cfg)?;
    println!("shift local: {:?}", v.status);
    if let Some(w) = v.witnesses.first() {
        println!("  trial {}: {:?} became {:?}", w.trial, w.base_value, w.perturbed_value);
    }

    // s_t = t + x1 crosses the branch of the fixture at t = 0
    let family = Section::parse(1, &["t + x1"])?;
    let disc = catalog_make(&CatalogSpec::DiscontinuousFamily, 1, 1)?;
    println!("discontinuous_family regular: {}", check_regularity(&disc, &family, &[0.0], 0.0).passed);
    println!("square regular: {}", check_regularity(&square, &family, &[0.0], 0.0).passed);
    Ok(())
}
