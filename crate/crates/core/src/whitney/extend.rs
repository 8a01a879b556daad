//! Smooth functions realizing prescribed jets: `f = Σ_k B_k·T_k` with
//! disjointly supported bumps `B_k ≡ 1` near each point.

use serde::Serialize;

use super::{certify_smoothness, compare_to_limit, distance, CertificateReport, TolRule, WhitneyError, WhitneyReport};
use super::{DEFAULT_SCALES, DEFAULT_STEPS};
use crate::expr::Expr;
use crate::jet::{Jet, JetFamily};

// The separation hypothesis is strict, but geometric sequences with ratio
// 1/2 meet it with equality at c = 2; bumps stay disjoint either way.
const SEPARATION_SLACK: f64 = 1e-12;

fn bumped(jet: &Jet, radius: f64) -> Expr {
    Expr::mul(Expr::ball_bump(jet.base(), radius / 2.0, radius), jet.to_polynomial())
}

/// Extension of jets on a finite set of distinct points.
///
/// Bump radii are a third of the distance to the nearest other point. A
/// single point gets its Taylor polynomial unchanged.
pub fn extend_separated(family: &JetFamily) -> Result<Expr, WhitneyError> {
    let jets: Vec<&Jet> = family.all_jets().collect();
    if jets.is_empty() {
        return Err(WhitneyError::EmptyFamily);
    }
    if jets.len() == 1 {
        return Ok(jets[0].to_polynomial());
    }
    let mut terms = Vec::with_capacity(jets.len());
    for (k, jet) in jets.iter().enumerate() {
        let nearest = jets
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != k)
            .map(|(_, other)| distance(jet.base(), other.base()))
            .fold(f64::INFINITY, f64::min);
        terms.push(bumped(jet, nearest / 3.0));
    }
    Ok(Expr::sum(terms))
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceExtension {
    pub expr: Expr,
    /// Decay moduli of the entries against the (zero) limit jet.
    pub decay: WhitneyReport,
    /// Smoothness certificate of `expr` at the limit point, orders `1..=m`.
    pub certificate: CertificateReport,
}

/// Extension of jets on a sequence `a_k → a` with vanishing limit jet.
///
/// Checks `max(‖a_k - a‖, ‖a_l - a‖) <= c‖a_k - a_l‖` for all pairs and the
/// decay `|λ_{I,a_k}| <= tol(δ)·‖a_k - a‖^m` at the finest scale of the
/// default ladder that contains sequence points. Bump radii are
/// `‖a_k - a‖/(4c)`.
pub fn extend_sequence(
    family: &JetFamily,
    c: f64,
    m: usize,
    decay_tol: TolRule,
) -> Result<SequenceExtension, WhitneyError> {
    let limit = family.limit().ok_or(WhitneyError::MissingLimit)?;
    if limit.coeffs().iter().any(|&v| v != 0.0) {
        return Err(WhitneyError::LimitNotZero);
    }
    let center = limit.base();
    let entries = family.entries();
    let norms: Vec<f64> = entries.iter().map(|j| distance(j.base(), center)).collect();
    for k in 0..entries.len() {
        for l in k + 1..entries.len() {
            let gap = c * distance(entries[k].base(), entries[l].base());
            if norms[k].max(norms[l]) > gap * (1.0 + SEPARATION_SLACK) {
                return Err(WhitneyError::SeparationViolated(k, l));
            }
        }
    }

    // zero limit jet padded so every entry coefficient can be compared
    let padded = Jet::zero(center.to_vec(), family.order() + m);
    let decay = compare_to_limit(&padded, entries, m, &DEFAULT_SCALES, decay_tol)?;
    for report in &decay.indices {
        if let Some(finest) = report.scales.iter().rev().find(|s| !s.vacuous) {
            if !finest.holds {
                return Err(WhitneyError::DecayFails {
                    m,
                    index: report.index.clone(),
                    delta: finest.delta,
                    modulus: finest.modulus,
                });
            }
        }
    }

    let expr = Expr::sum(
        entries
            .iter()
            .zip(&norms)
            .map(|(jet, &norm)| bumped(jet, norm / (4.0 * c))),
    );
    let certificate = certify_smoothness(|p: &[f64]| expr.evaluate(p, None), center, m, &DEFAULT_STEPS);
    Ok(SequenceExtension { expr, decay, certificate })
}
