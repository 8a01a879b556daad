//! Whitney's Taylor condition on finite jet families, and constructive
//! smooth extensions.
//!
//! The ε-δ quantifiers are discretized to a ladder of scales; every verdict
//! is reported per scale.

mod certificate;
mod cone;
mod extend;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::EvalError;
use crate::jet::{mi_count, mi_enumerate, mi_rank, Jet, JetError, JetFamily, MultiIndex};

pub use certificate::{certify_smoothness, CertificateEntry, CertificateReport, DEFAULT_STEPS};
pub use cone::{cone_cutoff, cone_glue, cone_membership, cone_samples, ConeGeometry, ConeRegion};
pub use extend::{extend_separated, extend_sequence, SequenceExtension};

/// Scale ladder used when callers do not supply one.
pub const DEFAULT_SCALES: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];

// Pairs at distance exactly δ must count despite rounding in the coordinates.
const DISTANCE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WhitneyError {
    #[error("jet order {order} too small: need at least {needed}")]
    OrderTooSmall { needed: usize, order: usize },
    #[error("jets at the origin disagree at rank {rank}: {left} vs {right}")]
    JetMismatch { rank: usize, left: f64, right: f64 },
    #[error("separation violated for points {0} and {1}")]
    SeparationViolated(usize, usize),
    #[error("decay hypothesis fails for m = {m}: modulus {modulus} at scale {delta} for I = {index:?}")]
    DecayFails { m: usize, index: MultiIndex, delta: f64, modulus: f64 },
    #[error("sequence family needs a limit jet")]
    MissingLimit,
    #[error("limit jet must vanish")]
    LimitNotZero,
    #[error("family is empty")]
    EmptyFamily,
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Per-scale tolerance `tol(δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TolRule {
    /// `tol(δ) = value`
    Constant { value: f64 },
    /// `tol(δ) = slope · δ`
    Linear { slope: f64 },
}

impl TolRule {
    pub fn at(&self, delta: f64) -> f64 {
        match *self {
            TolRule::Constant { value } => value,
            TolRule::Linear { slope } => slope * delta,
        }
    }
}

/// `|λ_{I,y} - Σ_{|J|<=m} λ_{I+J,x} (y-x)^J / J!|`.
pub fn taylor_remainder(tx: &Jet, ty: &Jet, index: &MultiIndex, m: usize) -> Result<f64, WhitneyError> {
    let i = index.norm() as usize;
    if tx.order() < i + m {
        return Err(WhitneyError::OrderTooSmall { needed: i + m, order: tx.order() });
    }
    if ty.order() < i {
        return Err(WhitneyError::OrderTooSmall { needed: i, order: ty.order() });
    }
    if tx.dim() != ty.dim() || index.dim() != tx.dim() {
        return Err(JetError::DimensionMismatch { expected: tx.dim(), found: ty.dim() }.into());
    }
    let plan = RemainderPlan::new(tx.dim(), m, std::slice::from_ref(index));
    let monomials = plan.monomials(tx.base(), ty.base());
    Ok(plan.remainder(0, tx.coeffs(), ty.coeffs(), &monomials))
}

/// Precomputed index arithmetic for remainders of several `I` at one `m`.
struct RemainderPlan {
    n: usize,
    m: usize,
    /// `(J, 1/J!)` for `|J| <= m`, graded-lex.
    shifts: Vec<(MultiIndex, f64)>,
    /// per requested `I`: its rank and the ranks of `I + J`.
    targets: Vec<(usize, Vec<usize>)>,
}

impl RemainderPlan {
    fn new(n: usize, m: usize, indices: &[MultiIndex]) -> Self {
        let shifts: Vec<(MultiIndex, f64)> = mi_enumerate(n, m)
            .into_iter()
            .map(|j| {
                let f = 1.0 / j.factorial_f64();
                (j, f)
            })
            .collect();
        let targets = indices
            .iter()
            .map(|i| {
                let ranks = shifts
                    .iter()
                    .map(|(j, _)| mi_rank(&i.checked_add(j).expect("bounded exponents")))
                    .collect();
                (mi_rank(i), ranks)
            })
            .collect();
        RemainderPlan { n, m, shifts, targets }
    }

    /// `(y - x)^J` for every shift `J`.
    fn monomials(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let mut out = Vec::with_capacity(self.shifts.len());
        for (j, _) in &self.shifts {
            let value = match j.exponents().iter().position(|&r| r > 0) {
                None => 1.0,
                Some(slot) => out[mi_rank(&j.lowered(slot).expect("positive slot"))] * diff[slot],
            };
            out.push(value);
        }
        debug_assert_eq!(out.len(), mi_count(self.n, self.m));
        out
    }

    fn remainder(&self, target: usize, cx: &[f64], cy: &[f64], monomials: &[f64]) -> f64 {
        let (rank, ranks) = &self.targets[target];
        let expansion: f64 = ranks
            .iter()
            .zip(&self.shifts)
            .zip(monomials)
            .map(|((&r, (_, inv_fact)), mono)| cx[r] * mono * inv_fact)
            .sum();
        (cy[*rank] - expansion).abs()
    }
}

/// Modulus at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleResult {
    pub delta: f64,
    pub modulus: f64,
    /// `(x, y)` realizing the modulus; `None` when no pair lies within δ.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub vacuous: bool,
    pub tolerance: f64,
    pub holds: bool,
}

/// Moduli `W(I, m, δ)` for one multi-index across the scale ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub index: MultiIndex,
    pub scales: Vec<ScaleResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitneyReport {
    pub m: usize,
    pub tol: TolRule,
    pub indices: Vec<IndexReport>,
}

impl WhitneyReport {
    /// Every scale of every index holds.
    pub fn holds(&self) -> bool {
        self.indices.iter().all(|r| r.scales.iter().all(|s| s.holds))
    }

    pub fn is_vacuous(&self) -> bool {
        self.indices.iter().all(|r| r.scales.iter().all(|s| s.vacuous))
    }

    pub fn index(&self, index: &MultiIndex) -> Option<&IndexReport> {
        self.indices.iter().find(|r| &r.index == index)
    }

    /// Largest modulus at `delta` over all indices.
    pub fn max_modulus_at(&self, delta: f64) -> f64 {
        self.indices
            .iter()
            .flat_map(|r| r.scales.iter())
            .filter(|s| s.delta == delta)
            .map(|s| s.modulus)
            .fold(0.0, f64::max)
    }

    /// First failing `(index, scale)`, if any.
    pub fn first_failure(&self) -> Option<(&MultiIndex, &ScaleResult)> {
        self.indices
            .iter()
            .find_map(|r| r.scales.iter().find(|s| !s.holds).map(|s| (&r.index, s)))
    }
}

/// Candidate for the running maximum: `(ratio, x index, y index)`.
type Best = Option<(f64, usize, usize)>;

fn better(current: Best, candidate: (f64, usize, usize)) -> Best {
    match current {
        None => Some(candidate),
        Some(c) => {
            let (v, i, j) = candidate;
            if v > c.0 || (v == c.0 && (i, j) < (c.1, c.2)) {
                Some(candidate)
            } else {
                Some(c)
            }
        }
    }
}

/// Maximal Taylor-remainder ratios over the pair set selected by `pairs_of`.
///
/// `points[k]` supplies the jet at point `k`; `pairs_of(i)` lists the `j`
/// to pair with `x = points[i]`.
fn moduli(
    jets: &[&Jet],
    m: usize,
    indices: &[MultiIndex],
    scales: &[f64],
    tol: TolRule,
    pairs_of: impl Fn(usize) -> Vec<usize> + Sync,
) -> Vec<IndexReport> {
    let n = jets.first().map_or(1, |j| j.dim());
    let plan = RemainderPlan::new(n, m, indices);
    let widest = scales.iter().cloned().fold(0.0, f64::max);
    let per_x: Vec<Vec<Vec<Best>>> = (0..jets.len())
        .into_par_iter()
        .map(|i| {
            let mut best = vec![vec![None; scales.len()]; indices.len()];
            let tx = jets[i];
            for j in pairs_of(i) {
                let ty = jets[j];
                let dist = distance(tx.base(), ty.base());
                if dist == 0.0 || dist > widest * (1.0 + DISTANCE_SLACK) {
                    continue;
                }
                let monomials = plan.monomials(tx.base(), ty.base());
                let scale = dist.powi(m as i32);
                for (t, slot) in best.iter_mut().enumerate() {
                    let ratio = plan.remainder(t, tx.coeffs(), ty.coeffs(), &monomials) / scale;
                    for (s, &delta) in scales.iter().enumerate() {
                        if dist <= delta * (1.0 + DISTANCE_SLACK) {
                            slot[s] = better(slot[s], (ratio, i, j));
                        }
                    }
                }
            }
            best
        })
        .collect();

    indices
        .iter()
        .enumerate()
        .map(|(t, index)| {
            let scales = scales
                .iter()
                .enumerate()
                .map(|(s, &delta)| {
                    let best = per_x.iter().fold(None, |acc, b| match b[t][s] {
                        Some(c) => better(acc, c),
                        None => acc,
                    });
                    let tolerance = tol.at(delta);
                    match best {
                        None => ScaleResult { delta, modulus: 0.0, witness: None, vacuous: true, tolerance, holds: true },
                        Some((modulus, i, j)) => ScaleResult {
                            delta,
                            modulus,
                            witness: Some((jets[i].base().to_vec(), jets[j].base().to_vec())),
                            vacuous: false,
                            tolerance,
                            holds: modulus <= tolerance,
                        },
                    }
                })
                .collect();
            IndexReport { index: index.clone(), scales }
        })
        .collect()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Discretized Taylor condition on a jet family.
///
/// Checks every `I` with `|I| <= min(m, order - m)` (all `|I| <= m` once the
/// family order is at least `2m`), both orientations of every pair.
pub fn check_taylor_condition(
    family: &JetFamily,
    m: usize,
    scales: &[f64],
    tol: TolRule,
) -> Result<WhitneyReport, WhitneyError> {
    if family.order() < m {
        return Err(WhitneyError::OrderTooSmall { needed: m, order: family.order() });
    }
    let jets: Vec<&Jet> = family.all_jets().collect();
    let n = family.dim().max(1);
    let indices = mi_enumerate(n, m.min(family.order() - m));
    let count = jets.len();
    let indices_report = moduli(&jets, m, &indices, scales, tol, |i| (0..count).filter(|&j| j != i).collect());
    Ok(WhitneyReport { m, tol, indices: indices_report })
}

/// Taylor condition between the limit jet (as expansion point) and every
/// entry: the moduli are `max |λ_{I,a_k} - T_limit(...)| / ‖a_k - a‖^m` over
/// entries within δ of the limit point.
pub fn check_against_limit(
    family: &JetFamily,
    m: usize,
    scales: &[f64],
    tol: TolRule,
) -> Result<WhitneyReport, WhitneyError> {
    let limit = family.limit().ok_or(WhitneyError::MissingLimit)?;
    compare_to_limit(limit, family.entries(), m, scales, tol)
}

/// Moduli of the entries against `limit` as base point; the limit jet may
/// have a higher order than the entries.
pub(crate) fn compare_to_limit(
    limit: &Jet,
    entries: &[Jet],
    m: usize,
    scales: &[f64],
    tol: TolRule,
) -> Result<WhitneyReport, WhitneyError> {
    if limit.order() < m {
        return Err(WhitneyError::OrderTooSmall { needed: m, order: limit.order() });
    }
    let entry_order = entries.first().map_or(limit.order(), |j| j.order());
    let top = entry_order.min(limit.order() - m);
    let mut jets: Vec<&Jet> = vec![limit];
    jets.extend(entries);
    let indices = mi_enumerate(limit.dim(), top);
    let count = jets.len();
    let report = moduli(&jets, m, &indices, scales, tol, |i| if i == 0 { (1..count).collect() } else { vec![] });
    Ok(WhitneyReport { m, tol, indices: report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::jet::prolong;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn jet(text: &str, a: f64, m: usize) -> Jet {
        prolong(&parse(text, 1).unwrap(), &[a], m).unwrap()
    }

    #[test]
    fn remainder_same_point_is_zero() {
        let t = jet("exp(x1)*sin(x1)", 0.3, 4);
        assert_eq!(taylor_remainder(&t, &t, &mi(&[1]), 2).unwrap(), 0.0);
    }

    #[test]
    fn remainder_cubic_is_exact() {
        let tx = jet("x1^3", 0.0, 3);
        let ty = jet("x1^3", 1.0, 3);
        assert!(taylor_remainder(&tx, &ty, &mi(&[0]), 3).unwrap() < 1e-15);
    }

    #[test]
    fn remainder_exp() {
        let tx = jet("exp(x1)", 0.0, 2);
        let ty = jet("exp(x1)", 0.5, 2);
        let r = taylor_remainder(&tx, &ty, &mi(&[0]), 2).unwrap();
        let direct = (0.5f64.exp() - 1.625).abs();
        assert!((r - direct).abs() < 1e-15);
        assert!((r - 0.0237213).abs() < 1e-7);
    }

    #[test]
    fn remainder_order_checks() {
        let tx = jet("exp(x1)", 0.0, 2);
        assert_eq!(
            taylor_remainder(&tx, &tx, &mi(&[1]), 2),
            Err(WhitneyError::OrderTooSmall { needed: 3, order: 2 })
        );
    }

    #[test]
    fn remainder_is_not_symmetric() {
        let tx = jet("exp(x1)", 0.0, 3);
        let ty = jet("exp(x1)", 0.5, 3);
        let forward = taylor_remainder(&tx, &ty, &mi(&[0]), 2).unwrap();
        let backward = taylor_remainder(&ty, &tx, &mi(&[0]), 2).unwrap();
        assert!((forward - backward).abs() > 1e-3);
    }

    #[test]
    fn sine_family_holds() {
        let s = parse("sin(x1)", 1).unwrap();
        let points: Vec<Vec<f64>> = (0..50).map(|i| vec![-1.0 + 2.0 * i as f64 / 49.0]).collect();
        let family = JetFamily::sample(&s, &points, 4).unwrap();
        let report = check_taylor_condition(&family, 2, &[0.1], TolRule::Constant { value: 0.5 }).unwrap();
        assert!(report.holds());
        assert!(!report.is_vacuous());
    }

    #[test]
    fn jump_family_fails() {
        let mut entries = Vec::new();
        for k in 1..=400 {
            let a = 1.0 / k as f64;
            entries.push(Jet::from_fn(vec![a], 2, |i| match i.norm() {
                0 => a,
                1 => 1.0,
                _ => 0.0,
            }));
            entries.push(Jet::zero(vec![-a], 2));
        }
        let family = JetFamily::new(entries, None).unwrap();
        let report = check_taylor_condition(&family, 1, &DEFAULT_SCALES, TolRule::Linear { slope: 1.0 }).unwrap();
        assert!(!report.holds());
        // brute force over all pairs for I = (1): |λ_{1,y} - λ_{1,x} - λ_{2,x}(y-x)| / |y-x|
        let jets: Vec<&Jet> = family.all_jets().collect();
        for scale in &report.index(&mi(&[1])).unwrap().scales {
            let mut brute: f64 = 0.0;
            for x in &jets {
                for y in &jets {
                    let d = (x.base()[0] - y.base()[0]).abs();
                    if d > 0.0 && d <= scale.delta * (1.0 + 1e-12) {
                        let c = |j: &Jet, r: usize| j.coeffs()[r];
                        let rem = (c(y, 1) - c(x, 1) - c(x, 2) * (y.base()[0] - x.base()[0])).abs();
                        brute = brute.max(rem / d);
                    }
                }
            }
            assert!((brute - scale.modulus).abs() <= 1e-12 * brute.max(1.0));
        }
        // the I = (1) modulus never comes down: λ_(1) jumps by 1 across 0
        let moduli: Vec<f64> = report.index(&mi(&[1])).unwrap().scales.iter().map(|s| s.modulus).collect();
        assert!(moduli.iter().all(|&w| w >= 100.0), "{moduli:?}");
        // I = (0) stays bounded away from zero
        let zeroth = &report.index(&mi(&[0])).unwrap().scales;
        assert!(zeroth.iter().all(|s| s.modulus >= 0.49));
    }

    #[test]
    fn single_point_is_vacuous() {
        let family = JetFamily::new(vec![jet("x1", 0.0, 2)], None).unwrap();
        let report = check_taylor_condition(&family, 1, &DEFAULT_SCALES, TolRule::Constant { value: 0.0 }).unwrap();
        assert!(report.is_vacuous());
        assert!(report.holds());
        assert!(report.indices.iter().flat_map(|r| &r.scales).all(|s| s.modulus == 0.0));
    }

    #[test]
    fn witness_realizes_modulus() {
        let s = parse("exp(x1)", 1).unwrap();
        let points: Vec<Vec<f64>> = (0..11).map(|i| vec![i as f64 * 0.05]).collect();
        let family = JetFamily::sample(&s, &points, 2).unwrap();
        let report = check_taylor_condition(&family, 1, &[0.1], TolRule::Constant { value: 1.0 }).unwrap();
        let scale = &report.index(&mi(&[0])).unwrap().scales[0];
        let (x, y) = scale.witness.clone().unwrap();
        let tx = prolong(&s, &x, 2).unwrap();
        let ty = prolong(&s, &y, 2).unwrap();
        let direct = taylor_remainder(&tx, &ty, &mi(&[0]), 1).unwrap() / (y[0] - x[0]).abs();
        assert!((direct - scale.modulus).abs() < 1e-14);
        assert!(scale.modulus >= 0.0);
    }
}
