//! Whitney's Taylor condition on sampled jets, and on a family that no
//! smooth function can realize.
//!
//! cargo run --example whitney_check

use jetcalc::expr::parse;
use jetcalc::jet::{Jet, JetFamily};
use jetcalc::whitney::{check_taylor_condition, TolRule, DEFAULT_SCALES};

fn print_ladder(label: &str, family: &JetFamily, m: usize, tol: TolRule) -> Result<(), Box<dyn std::error::Error>> {
    let report = check_taylor_condition(family, m, &DEFAULT_SCALES, tol)?;
    println!("{label}: holds = {}", report.holds());
    for delta in DEFAULT_SCALES {
        println!("  W({delta}) = {:.3e}  tol {:.3e}", report.max_modulus_at(delta), tol.at(delta));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let points: Vec<Vec<f64>> = (0..40).map(|i| vec![-0.2 + 0.01 * i as f64]).collect();
    let m = 2;

    // moduli of smooth data shrink like δ; fit the slope at the coarsest scale
    let smooth = JetFamily::sample(&parse("sin(3*x1)", 1)?, &points, 2 * m)?;
    let coarse = check_taylor_condition(&smooth, m, &[0.2], TolRule::Constant { value: 0.0 })?.max_modulus_at(0.2);
    let tol = TolRule::Linear { slope: 2.0 * coarse / 0.2 };
    print_ladder("jets of sin(3x)", &smooth, m, tol)?;

    // value jumps across 0 while every derivative is zero
    let entries = points
        .iter()
        .map(|p| Jet::from_fn(p.clone(), 2 * m, |i| if i.norm() == 0 && p[0] > 0.0 { 1.0 } else { 0.0 }))
        .collect();
    print_ladder("step jets", &JetFamily::new(entries, None)?, m, tol)?;
    Ok(())
}
