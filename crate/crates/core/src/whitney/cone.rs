//! Gluing two functions with equal jets at the apex of a truncated double
//! cone `K = {x_1² + … + x_{n-1}² <= x_n², |x_n| <= 1}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::WhitneyError;
use crate::expr::Expr;
use crate::jet::prolong;

/// Tolerance on the apex jets of `u` and `v`, per coefficient.
const APEX_JET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeGeometry {
    pub n: usize,
}

impl ConeGeometry {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "cone dimension must be at least 1");
        ConeGeometry { n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeRegion {
    /// Upper nappe `K ∩ {x_n >= 0}` without the apex.
    K1,
    /// Lower nappe `K ∩ {x_n <= 0}` without the apex.
    K2,
    Apex,
    Outside,
}

pub fn cone_membership(x: &[f64], geom: ConeGeometry) -> ConeRegion {
    assert_eq!(x.len(), geom.n, "point dimension must match the cone");
    let (rest, last) = x.split_at(geom.n - 1);
    let xn = last[0];
    let radial: f64 = rest.iter().map(|v| v * v).sum();
    if xn.abs() > 1.0 || radial > xn * xn {
        ConeRegion::Outside
    } else if xn > 0.0 {
        ConeRegion::K1
    } else if xn < 0.0 {
        ConeRegion::K2
    } else {
        // x_n = 0 forces the remaining coordinates to vanish
        ConeRegion::Apex
    }
}

/// Angular cutoff `χ`: `1` on `K1` minus the apex, `0` wherever `x_n <= 0`
/// (in particular on `K2`), smooth away from the apex.
///
/// `χ = smooth_step(φ)` on `x_n > 0` and `0` elsewhere, with
/// `φ = (3x_n² - |x'|²)/|x|²`. `φ >= 1` on the cone and `φ <= 0` on the
/// wedge `3x_n² <= |x'|²` around the hyperplane `x_n = 0`, so the cut at
/// `x_n = 0` happens where `χ` already vanishes. `χ` is homogeneous of
/// degree zero, which keeps its derivatives polynomial in `1/|x|`.
pub fn cone_cutoff(geom: ConeGeometry) -> Expr {
    let n = geom.n;
    let xn = Expr::var(n - 1);
    let radial = Expr::sum((0..n - 1).map(|i| Expr::pow(Expr::var(i), 2)));
    let height = Expr::pow(xn.clone(), 2);
    let norm2 = Expr::add(radial.clone(), height.clone());
    let phi = Expr::div(Expr::sub(Expr::scale(3.0, height), radial), norm2);
    Expr::guard(xn, Expr::smooth_step(phi))
}

/// `f = v + χ·(u - v)`, pinned to `v` at the apex.
///
/// Requires `j^m_0 u = j^m_0 v` (checked to 1e-9 per coefficient).
pub fn cone_glue(u: &Expr, v: &Expr, geom: ConeGeometry, m: usize) -> Result<Expr, WhitneyError> {
    let apex = vec![0.0; geom.n];
    let ju = prolong(u, &apex, m)?;
    let jv = prolong(v, &apex, m)?;
    for (rank, (a, b)) in ju.coeffs().iter().zip(jv.coeffs()).enumerate() {
        if (a - b).abs() > APEX_JET_TOL {
            return Err(WhitneyError::JetMismatch { rank, left: *a, right: *b });
        }
    }
    let norm2 = Expr::squared_distance(&apex);
    let difference = Expr::sub(u.clone(), v.clone());
    Ok(Expr::add(
        v.clone(),
        Expr::guard(norm2, Expr::mul(cone_cutoff(geom), difference)),
    ))
}

/// Seeded sample points of one nappe with `‖x‖ >= min_norm`.
pub fn cone_samples(geom: ConeGeometry, region: ConeRegion, count: usize, min_norm: f64, seed: u64) -> Vec<Vec<f64>> {
    let sign = match region {
        ConeRegion::K1 => 1.0,
        ConeRegion::K2 => -1.0,
        _ => panic!("samples are drawn from K1 or K2"),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let height: f64 = rng.gen_range(min_norm.min(1.0)..=1.0);
        let mut point: Vec<f64> = (0..geom.n - 1).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let radial = point.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale: f64 = rng.gen_range(0.0..=1.0);
        if radial > 0.0 {
            for c in &mut point {
                *c *= height * scale / radial;
            }
        }
        point.push(sign * height);
        let norm = point.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm >= min_norm && cone_membership(&point, geom) == region {
            out.push(point);
        }
    }
    out
}
