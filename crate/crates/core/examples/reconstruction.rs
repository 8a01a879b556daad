//! Rebuild a finite-order operator from evaluations alone.
//!
//! cargo run --example reconstruction

use jetcalc::operator::{apply_jet_operator, catalog_make, from_jet_operator, CatalogSpec, JetOperator, Section};
use jetcalc::peetre::{reconstruct, reconstruct_linear, ProbeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ProbeConfig { tol: 1e-9, ..ProbeConfig::default() };
    let grid: Vec<Vec<f64>> = (0..5).map(|i| vec![-0.8 + 0.4 * i as f64]).collect();

    let h = from_jet_operator(JetOperator::parse(1, 1, 1, &["x1*u_1 + u_0"])?);
    let table = reconstruct_linear(&h, &grid, 2, &cfg)?;
    println!("x1*u_1 + u_0, linear: {}", table.linearity.passed);
    for row in &table.rows {
        println!("  P^I({:+.1}) = {:?}", row.point[0], row.coeffs[0][0]);
    }

    let square = catalog_make(&CatalogSpec::Square, 1, 1)?;
    let table = reconstruct_linear(&square, &grid, 0, &cfg)?;
    if let Some(w) = &table.linearity.witness {
        println!("square: h(s1 + s2) = {:?} but h(s1) + h(s2) = {:?}", w.combined, w.superposed);
    }

    // nonlinear operators are recovered as maps on jets
    let p = JetOperator::parse(1, 1, 2, &["sin(u_0)*u_2 + u_1^2"])?;
    let h = from_jet_operator(p.clone());
    let x = [0.3];
    let p_k = reconstruct(&h, &x, 2)?;
    let s = Section::parse(1, &["exp(x1)*cos(2*x1)"])?;
    println!("reconstructed {:?}, direct {:?}", p_k.eval(&s.jets(&x, 2, None)?)?, apply_jet_operator(&p, &s, &x)?);
    Ok(())
}
