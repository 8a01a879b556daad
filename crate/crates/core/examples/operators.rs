//! Sections, jet operators and catalog fixtures.
//!
//! cargo run --example operators

use jetcalc::operator::{
    apply_jet_operator, catalog_make, universal_section, CatalogSpec, JetOperator, OperatorDoc, Section,
    UniversalFamily,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = Section::parse(2, &["sin(x1)*x2", "x1^2 - x2"])?;
    let x = [0.4, -0.3];
    println!("s(x) = {:?}", s.evaluate(&x, None)?);

    // u1_2 is D_{x2} of the first component; u2_(2,0) is D_{x1}^2 of the second
    let p = JetOperator::parse(2, 2, 2, &["u1_2 + x1*u2_(2,0)"])?;
    println!("P(j^2 s)(x) = {:?}", apply_jet_operator(&p, &s, &x)?);

    let family = UniversalFamily::new(1, 1, 2);
    let xi = universal_section(&family, &[3.0, 2.0, 1.0])?;
    println!("xi_f = {}", xi.components()[0]);

    let lap = catalog_make(&CatalogSpec::Laplacian, 2, 1)?;
    let r2 = Section::parse(2, &["x1^2 + 3*x2^2"])?;
    println!("{} of x1^2 + 3x2^2 = {:?}", lap.meta().name, lap.apply(&r2, &x, None)?);

    let doc: OperatorDoc = serde_json::from_str(r#"{"kind": "catalog", "params": {"name": "shift", "v": [1.0]}}"#)?;
    let shift = doc.build()?;
    println!("shift of x1 at 0 = {:?}", shift.apply(&Section::parse(1, &["x1"])?, &[0.0], None)?);
    Ok(())
}
