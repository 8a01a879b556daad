//! Recover the order of black-box operators by jet-preserving perturbations.
//!
//! cargo run --release --example order_estimation

use jetcalc::operator::{catalog_make, from_jet_operator, CatalogSpec, JetOperator};
use jetcalc::peetre::{estimate_order, estimate_order_sweep, ProbeConfig, Status};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ProbeConfig::default();
    let fixtures = [
        ("square", catalog_make(&CatalogSpec::Square, 1, 1)?),
        ("d/dx", catalog_make(&CatalogSpec::Derivative { index: vec![1] }, 1, 1)?),
        ("u_1*u_3", from_jet_operator(JetOperator::parse(1, 1, 3, &["u_1*u_3"])?)),
    ];
    for (name, h) in &fixtures {
        let v = estimate_order(h, &[0.2], 6, &cfg)?;
        let table: String = v.table.iter().map(|r| if r.status == Status::Pass { 'P' } else { '.' }).collect();
        println!("{name:>8}: {:?}  table {table}", v.estimate);
    }

    // order grows without bound towards x0 = 0
    let h = catalog_make(&CatalogSpec::UnboundedOrder { x0: vec![0.0], cap: None }, 1, 1)?;
    let points: Vec<Vec<f64>> = [1.0, 0.5, 0.25, 0.125].iter().map(|&d| vec![d]).collect();
    for v in estimate_order_sweep(&h, &points, 6, &cfg)? {
        println!("unbounded_order at {:?}: {:?}", v.point, v.estimate);
    }
    Ok(())
}
