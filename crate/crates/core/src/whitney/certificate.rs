//! Multi-scale smoothness certificate.
//!
//! Central differences of every `D_I` with `1 <= |I| <= order` are taken at
//! a ladder of steps. Successive estimates must agree within
//! `10·h·max(1, |D|)` plus the rounding floor of the stencil. This is
//! evidence, not proof: it separates the library's smooth constructions
//! from jump-type counterexamples.

use serde::{Deserialize, Serialize};

use crate::jet::{mi_enumerate, MultiIndex};

pub const DEFAULT_STEPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub index: MultiIndex,
    /// `D_I f(x)` estimate per step.
    pub estimates: Vec<f64>,
    /// Whether step `i` and step `i + 1` agree.
    pub agreements: Vec<bool>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub point: Vec<f64>,
    pub steps: Vec<f64>,
    pub max_order: usize,
    pub entries: Vec<CertificateEntry>,
    pub passed: bool,
    /// Smallest `|I|` with a failing entry.
    pub failed_order: Option<usize>,
}

fn binomial_weights(r: u32) -> Vec<f64> {
    let mut w = vec![1.0];
    for k in 0..r {
        let next = w[k as usize] * (r - k) as f64 / (k + 1) as f64;
        w.push(next);
    }
    w
}

/// Tensor-product central difference of order `I` with step `h`:
/// `(estimate, rounding floor)`.
fn central_difference<F, E>(f: &F, x: &[f64], index: &MultiIndex, h: f64) -> Result<(f64, f64), E>
where
    F: Fn(&[f64]) -> Result<f64, E>,
{
    let exps = index.exponents();
    let weights: Vec<Vec<f64>> = exps.iter().map(|&r| binomial_weights(r)).collect();
    let mut counter = vec![0u32; exps.len()];
    let mut sum = 0.0;
    let mut magnitude = 0.0;
    let mut y = x.to_vec();
    loop {
        let mut w = 1.0;
        for (i, &j) in counter.iter().enumerate() {
            let r = exps[i];
            // offsets (r/2 - j) h, sign (-1)^j
            y[i] = x[i] + (r as f64 / 2.0 - j as f64) * h;
            w *= weights[i][j as usize] * if j % 2 == 0 { 1.0 } else { -1.0 };
        }
        let v = f(&y)?;
        sum += w * v;
        magnitude += (w * v).abs();
        // advance the mixed-radix counter
        let mut slot = 0;
        loop {
            if slot == counter.len() {
                let scale = h.powi(index.norm() as i32);
                return Ok((sum / scale, 64.0 * f64::EPSILON * magnitude / scale));
            }
            counter[slot] += 1;
            if counter[slot] <= exps[slot] {
                break;
            }
            counter[slot] = 0;
            slot += 1;
        }
    }
}

/// Certifies smoothness of `f` at `x` up to total order `max_order`.
///
/// Evaluation errors at a stencil point count as a failure of that entry.
pub fn certify_smoothness<F, E>(f: F, x: &[f64], max_order: usize, steps: &[f64]) -> CertificateReport
where
    F: Fn(&[f64]) -> Result<f64, E>,
{
    let mut entries = Vec::new();
    for index in mi_enumerate(x.len(), max_order).into_iter().skip(1) {
        let mut estimates = Vec::with_capacity(steps.len());
        let mut floors = Vec::with_capacity(steps.len());
        let mut errored = false;
        for &h in steps {
            match central_difference(&f, x, &index, h) {
                Ok((d, floor)) => {
                    estimates.push(d);
                    floors.push(floor);
                }
                Err(_) => {
                    errored = true;
                    estimates.push(f64::NAN);
                    floors.push(f64::NAN);
                }
            }
        }
        let agreements: Vec<bool> = (1..steps.len())
            .map(|i| {
                let (a, b) = (estimates[i - 1], estimates[i]);
                let allowed = 10.0 * steps[i - 1] * 1f64.max(a.abs()).max(b.abs()) + floors[i - 1] + floors[i];
                (a - b).abs() <= allowed
            })
            .collect();
        let passed = !errored && agreements.iter().all(|&ok| ok);
        entries.push(CertificateEntry { index, estimates, agreements, passed });
    }
    let failed_order = entries
        .iter()
        .filter(|e| !e.passed)
        .map(|e| e.index.norm() as usize)
        .min();
    CertificateReport {
        point: x.to_vec(),
        steps: steps.to_vec(),
        max_order,
        passed: failed_order.is_none(),
        entries,
        failed_order,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn certify(text: &str, x: &[f64], order: usize) -> CertificateReport {
        let e = parse(text, x.len()).unwrap();
        certify_smoothness(|p: &[f64]| e.evaluate(p, None), x, order, &DEFAULT_STEPS)
    }

    #[test]
    fn smooth_functions_pass() {
        assert!(certify("sin(x1)*exp(x2)", &[0.3, -0.2], 2).passed);
        assert!(certify("flat(x1)", &[0.0], 4).passed);
        assert!(certify("x1^3 - x1*x2", &[0.0, 0.0], 3).passed);
    }

    #[test]
    fn estimates_track_derivatives() {
        let r = certify("exp(x1)", &[0.0], 2);
        let first = &r.entries[0];
        assert!((first.estimates[2] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn jump_fails_at_first_order() {
        let step = |p: &[f64]| Ok::<_, ()>(if p[0] > 0.0 { 1.0 } else { 0.0 });
        let r = certify_smoothness(step, &[0.0], 2, &DEFAULT_STEPS);
        assert!(!r.passed);
        assert_eq!(r.failed_order, Some(1));
    }

    #[test]
    fn kink_fails() {
        let kink = |p: &[f64]| Ok::<_, ()>(p[0].abs());
        let r = certify_smoothness(kink, &[0.0], 2, &DEFAULT_STEPS);
        assert_eq!(r.failed_order, Some(2));
    }
}
