//! Seeded generators shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn constant(rng: &mut ChaCha8Rng) -> String {
    format!("{:.3}", rng.gen_range(0.2..1.5))
}

fn atom(rng: &mut ChaCha8Rng, n: usize) -> String {
    if rng.gen_bool(0.75) {
        format!("x{}", rng.gen_range(1..=n))
    } else {
        constant(rng)
    }
}

/// Random smooth expression text in `x1..xn`, finite on `[-1, 1]^n`.
pub fn smooth_expr(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> String {
    if depth == 0 {
        return atom(rng, n);
    }
    let a = smooth_expr(rng, n, depth - 1);
    match rng.gen_range(0..11) {
        0 => format!("({a} + {})", smooth_expr(rng, n, depth - 1)),
        1 => format!("({a} - {})", smooth_expr(rng, n, depth - 1)),
        2 | 3 => format!("({a})*({})", smooth_expr(rng, n, depth - 1)),
        4 => format!("sin({a})"),
        5 => format!("cos({a})"),
        6 => format!("exp(0.5*sin({a}))"),
        7 => format!("log(2 + sin({a}))"),
        8 => format!("({a})/(2 + cos({}))", smooth_expr(rng, n, depth - 1)),
        9 => format!("({a})^{}", rng.gen_range(2..=3)),
        _ => format!("flat(0.3 + ({a})^2)"),
    }
}

/// Random point in `[-1, 1]^n`.
pub fn point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Random polynomial text of degree at most `degree`.
pub fn polynomial(rng: &mut ChaCha8Rng, n: usize, degree: usize) -> String {
    let mut terms = Vec::new();
    for index in jetcalc::jet::mi_enumerate(n, degree) {
        let c: f64 = rng.gen_range(-1.0..=1.0);
        let mut term = format!("({c:.6})");
        for (i, &e) in index.exponents().iter().enumerate() {
            if e > 0 {
                term.push_str(&format!("*x{}^{e}", i + 1));
            }
        }
        terms.push(term);
    }
    terms.join(" + ")
}

/// Random jet-operator expression of order `k` over one component.
pub fn jet_operator_expr(rng: &mut ChaCha8Rng, n: usize, k: usize, depth: usize) -> String {
    let count = jetcalc::jet::mi_count(n, k);
    if depth == 0 {
        return match rng.gen_range(0..4) {
            0 => format!("x{}", rng.gen_range(1..=n)),
            1 => constant(rng),
            _ => format!("u_{}", rng.gen_range(0..count)),
        };
    }
    let a = jet_operator_expr(rng, n, k, depth - 1);
    let b = jet_operator_expr(rng, n, k, depth - 1);
    match rng.gen_range(0..6) {
        0 => format!("({a} + {b})"),
        1 => format!("({a})*({b})"),
        2 => format!("sin({a})"),
        3 => format!("exp(0.3*cos({a}))"),
        4 => format!("({a})/(2 + ({b})^2)"),
        _ => format!("({a} - {b})"),
    }
}
