//! Probing black-box operators: locality, jet determinacy, regularity,
//! order, and reconstruction of the finite-order operator behind them.
//!
//! Every probe builds its perturbed sections symbolically, so jet equality
//! between a section and its perturbation holds exactly, not up to rounding.

mod order;
mod reconstruct;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::jet::{mi_enumerate, DEFAULT_WORKING_ORDER};
use crate::operator::{Domain, OperatorError, OperatorHandle, Section, DEFAULT_DOMAIN_RADIUS};
use crate::whitney::{certify_smoothness, CertificateReport, DEFAULT_STEPS};

pub use order::{check_jet_determinacy, estimate_order, estimate_order_sweep, LevelReport, OrderEstimate, OrderVerdict};
pub use reconstruct::{
    reconstruct, reconstruct_linear, LinearTable, LinearityVerdict, LinearityWitness, Reconstruction, TableRow,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("ball of radius {radius} around {point:?} leaves the probe domain")]
    BallOutsideDomain { point: Vec<f64>, radius: f64 },
    #[error("order {k} needs working order at least {needed}")]
    OrderTooLarge { k: usize, needed: usize },
    #[error("sections differ in their {k}-jets at sequence index {index}")]
    SequencePrecondition { index: usize, k: usize },
    #[error("invalid probe configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Probe settings. Differences are compared against `tol·(1 + |h(s)(x)|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub trials: usize,
    /// Degree of probe polynomials; determinacy is probed up to `M - 2`.
    pub working_order: usize,
    pub tol: f64,
    pub seed: u64,
    /// Perturbation amplitudes; a disagreement must show at two of them.
    pub amplitudes: Vec<f64>,
    /// Domain of probe sections; `[-10, 10]^n` when absent.
    #[serde(default)]
    pub domain: Option<Domain>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            trials: 8,
            working_order: DEFAULT_WORKING_ORDER,
            tol: 1e-7,
            seed: 0,
            amplitudes: vec![1.0, 0.1, 0.01],
            domain: None,
        }
    }
}

impl ProbeConfig {
    pub fn with_seed(seed: u64) -> Self {
        ProbeConfig { seed, ..ProbeConfig::default() }
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        if self.trials == 0 {
            return Err(ProbeError::Config("trials must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(ProbeError::Config("tol must be positive".into()));
        }
        if self.amplitudes.is_empty() || self.amplitudes.iter().any(|a| !(a.is_finite() && *a != 0.0)) {
            return Err(ProbeError::Config("amplitudes must be finite and nonzero".into()));
        }
        Ok(())
    }

    fn domain(&self, n: usize) -> Domain {
        self.domain.clone().unwrap_or_else(|| Domain::cube(n, DEFAULT_DOMAIN_RADIUS))
    }

    fn allowed(&self, value: f64) -> f64 {
        self.tol * (1.0 + value.abs())
    }

    /// Whether `b` differs from the reference `a` beyond tolerance in any component.
    fn differs(&self, a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).any(|(x, y)| !((x - y).abs() <= self.allowed(*x)))
    }

    fn confirmations(&self) -> usize {
        self.amplitudes.len().min(2)
    }
}

/// Independent random streams per probe, level and trial.
pub(crate) fn stream(seed: u64, tag: u64, level: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 56) ^ (level << 28) ^ trial);
    rng
}

const TAG_BASE: u64 = 1;
const TAG_DETERMINACY: u64 = 2;
const TAG_LOCALITY: u64 = 3;
const TAG_LINEARITY: u64 = 4;

/// `Σ c_I (y - center)^I` over `lo <= |I| <= hi`, coefficients in `[-1, 1]`.
pub(crate) fn random_polynomial(rng: &mut ChaCha8Rng, center: &[f64], lo: usize, hi: usize) -> Expr {
    let n = center.len();
    Expr::sum(mi_enumerate(n, hi).into_iter().filter(|i| i.norm() as usize >= lo).map(|index| {
        let c: f64 = rng.gen_range(-1.0..=1.0);
        let monomial = Expr::product(index.exponents().iter().enumerate().map(|(i, &e)| {
            let base = if center[i] == 0.0 { Expr::var(i) } else { Expr::sub(Expr::var(i), Expr::constant(center[i])) };
            Expr::pow(base, e)
        }));
        Expr::scale(c, monomial)
    }))
}

/// Random polynomial of degree `M` plus `a·sin(w·y + φ)`, per component.
pub(crate) fn probe_section(rng: &mut ChaCha8Rng, n: usize, r: usize, cfg: &ProbeConfig) -> Section {
    let components = (0..r)
        .map(|_| {
            let poly = random_polynomial(rng, &vec![0.0; n], 0, cfg.working_order);
            let amplitude: f64 = rng.gen_range(-1.0..=1.0);
            let phase: f64 = rng.gen_range(-1.0..=1.0);
            let arg = Expr::sum((0..n).map(|i| Expr::scale(rng.gen_range(-1.0..=1.0), Expr::var(i))));
            Expr::add(poly, Expr::scale(amplitude, Expr::sin(Expr::add(arg, Expr::constant(phase)))))
        })
        .collect();
    Section::with_domain(components, cfg.domain(n)).expect("probe components use only x1..xn")
}

pub(crate) fn base_section(h: &OperatorHandle, trial: usize, cfg: &ProbeConfig) -> Section {
    let meta = h.meta();
    probe_section(&mut stream(cfg.seed, TAG_BASE, 0, trial as u64), meta.n, meta.r, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Fewer valid trials than configured and no failure.
    Inconclusive,
}

/// A perturbation that changed the operator's value at the probe point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub trial: usize,
    pub amplitude: f64,
    /// Added to each component of the trial's base section.
    pub perturbation: Vec<Expr>,
    pub base_value: Vec<f64>,
    pub perturbed_value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TrialOutcome {
    Agree,
    Differ(Witness),
    Invalid(String),
}

/// Runs `h` on `s` and on `s + a·terms` for every amplitude.
pub(crate) fn perturbation_trial(
    h: &OperatorHandle,
    s: &Section,
    x: &[f64],
    terms: &[Expr],
    trial: usize,
    cfg: &ProbeConfig,
) -> TrialOutcome {
    let base = match h.apply(s, x, None) {
        Ok(v) => v,
        Err(e) => return TrialOutcome::Invalid(e.to_string()),
    };
    let mut first: Option<Witness> = None;
    let mut confirmed = 0;
    for &a in &cfg.amplitudes {
        let scaled: Vec<Expr> = terms.iter().map(|q| Expr::scale(a, q.clone())).collect();
        let value = match h.apply(&s.perturbed(&scaled), x, None) {
            Ok(v) => v,
            Err(e) => return TrialOutcome::Invalid(e.to_string()),
        };
        if cfg.differs(&base, &value) {
            confirmed += 1;
            first.get_or_insert(Witness {
                trial,
                amplitude: a,
                perturbation: scaled,
                base_value: base.clone(),
                perturbed_value: value,
            });
        }
    }
    match first {
        Some(w) if confirmed >= cfg.confirmations() => TrialOutcome::Differ(w),
        _ => TrialOutcome::Agree,
    }
}

/// Verdict of a fixed-perturbation-scheme probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeVerdict {
    pub status: Status,
    pub trials: usize,
    pub valid: usize,
    pub witnesses: Vec<Witness>,
    pub errors: Vec<String>,
}

impl ProbeVerdict {
    pub(crate) fn from_outcomes(outcomes: Vec<TrialOutcome>) -> Self {
        let trials = outcomes.len();
        let mut witnesses = Vec::new();
        let mut errors = Vec::new();
        for o in outcomes {
            match o {
                TrialOutcome::Agree => {}
                TrialOutcome::Differ(w) => witnesses.push(w),
                TrialOutcome::Invalid(e) => errors.push(e),
            }
        }
        let status = if !witnesses.is_empty() {
            Status::Fail
        } else if !errors.is_empty() {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        ProbeVerdict { status, trials, valid: trials - errors.len(), witnesses, errors }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Perturbs `s` only outside `B(x, r)` and checks that `h(s)(x)` stays put.
///
/// The weight is `0` on `B(x, r)` and `1` beyond radius `1.1·r`.
pub fn check_locality(
    h: &OperatorHandle,
    s: &Section,
    x: &[f64],
    radius: f64,
    cfg: &ProbeConfig,
) -> Result<ProbeVerdict, ProbeError> {
    cfg.validate()?;
    if !s.domain().contains_ball(x, radius) {
        return Err(ProbeError::BallOutsideDomain { point: x.to_vec(), radius });
    }
    let outer = 1.1 * radius;
    let span = outer * outer - radius * radius;
    let weight = Expr::smooth_step(Expr::div(
        Expr::sub(Expr::squared_distance(x), Expr::constant(radius * radius)),
        Expr::constant(span),
    ));
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(cfg.seed, TAG_LOCALITY, 0, trial as u64);
            let terms: Vec<Expr> = (0..s.rank())
                .map(|_| Expr::mul(weight.clone(), random_polynomial(&mut rng, x, 0, cfg.working_order)))
                .collect();
            perturbation_trial(h, s, x, &terms, trial, cfg)
        })
        .collect();
    Ok(ProbeVerdict::from_outcomes(outcomes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceVerdict {
    /// `|h(s)(x_i) - h(s')(x_i)|`, max over components.
    pub differences: Vec<f64>,
    /// First index from which every difference is within tolerance.
    pub tail: Option<usize>,
}

/// Compares `h(s)` and `h(s')` along points where their `k(i)`-jets agree.
pub fn check_sequence_determinacy(
    h: &OperatorHandle,
    s: &Section,
    s2: &Section,
    points: &[Vec<f64>],
    k_of_index: impl Fn(usize) -> usize + Sync,
    cfg: &ProbeConfig,
) -> Result<SequenceVerdict, ProbeError> {
    cfg.validate()?;
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let k = k_of_index(i);
            let (ja, jb) = (s.jets(x, k, None)?, s2.jets(x, k, None)?);
            let agree = ja.iter().zip(&jb).all(|(a, b)| a.max_abs_diff(b).is_some_and(|d| d <= 1e-9));
            if !agree {
                return Err(ProbeError::SequencePrecondition { index: i, k });
            }
            let (va, vb) = (h.apply(s, x, None)?, h.apply(s2, x, None)?);
            let diff = va.iter().zip(&vb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok((diff, cfg.differs(&va, &vb)))
        })
        .collect::<Result<Vec<_>, ProbeError>>()?;
    let tail = match rows.iter().rposition(|&(_, bad)| bad) {
        None => Some(0),
        Some(last) if last + 1 < rows.len() => Some(last + 1),
        Some(_) => None,
    };
    Ok(SequenceVerdict { differences: rows.into_iter().map(|(d, _)| d).collect(), tail })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub point: Vec<f64>,
    pub t0: f64,
    /// One certificate of `t ↦ h(s_t)(x)` per target component.
    pub components: Vec<CertificateReport>,
    pub passed: bool,
}

/// Certificate of `g(t) = h(s_t)(x)` around `t0`, up to order 2.
pub fn check_regularity(h: &OperatorHandle, family: &Section, x: &[f64], t0: f64) -> RegularityReport {
    let rbar = h.meta().rbar;
    let components: Vec<CertificateReport> = (0..rbar)
        .map(|c| {
            let g = |t: &[f64]| h.apply(family, x, Some(t[0])).map(|v| v[c]);
            certify_smoothness(g, &[t0], 2, &DEFAULT_STEPS)
        })
        .collect();
    let passed = components.iter().all(|r| r.passed);
    RegularityReport { point: x.to_vec(), t0, components, passed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::operator::{catalog_make, CatalogSpec};

    fn fixture(spec: CatalogSpec, n: usize) -> OperatorHandle {
        catalog_make(&spec, n, 1).unwrap()
    }

    fn s(text: &str) -> Section {
        Section::parse(1, &[text]).unwrap()
    }

    #[test]
    fn probe_sections_are_reproducible() {
        let cfg = ProbeConfig::default();
        let a = probe_section(&mut stream(7, TAG_BASE, 0, 3), 2, 1, &cfg);
        let b = probe_section(&mut stream(7, TAG_BASE, 0, 3), 2, 1, &cfg);
        let c = probe_section(&mut stream(7, TAG_BASE, 0, 4), 2, 1, &cfg);
        assert_eq!(a.evaluate(&[0.3, 0.2], None), b.evaluate(&[0.3, 0.2], None));
        assert_ne!(a.evaluate(&[0.3, 0.2], None), c.evaluate(&[0.3, 0.2], None));
    }

    #[test]
    fn locality_examples() {
        let cfg = ProbeConfig::default();
        let d2 = fixture(CatalogSpec::Derivative { index: vec![2] }, 1);
        assert!(check_locality(&d2, &s("sin(x1)"), &[0.3], 0.5, &cfg).unwrap().passed());
        let square = fixture(CatalogSpec::Square, 1);
        assert!(check_locality(&square, &s("x1 + 2"), &[0.0], 0.5, &cfg).unwrap().passed());

        let shift = fixture(CatalogSpec::Shift { v: vec![1.0] }, 1);
        let v = check_locality(&shift, &s("x1^2"), &[0.0], 0.5, &cfg).unwrap();
        assert_eq!(v.status, Status::Fail);
        let w = &v.witnesses[0];
        // h(s')(0) = s'(1)
        let q = w.perturbation[0].evaluate(&[1.0], None).unwrap();
        assert!((w.perturbed_value[0] - (1.0 + q)).abs() < 1e-12);
    }

    #[test]
    fn locality_needs_room() {
        let square = fixture(CatalogSpec::Square, 1);
        let err = check_locality(&square, &s("x1"), &[9.8], 0.5, &ProbeConfig::default()).unwrap_err();
        assert!(matches!(err, ProbeError::BallOutsideDomain { .. }));
    }

    #[test]
    fn sequence_examples() {
        let cfg = ProbeConfig::default();
        let d2 = fixture(CatalogSpec::Derivative { index: vec![2] }, 1);
        let base = s("sin(x1) + x1^3");
        let points: Vec<Vec<f64>> = (1..=10).map(|k| vec![0.5f64.powi(k)]).collect();
        let same = check_sequence_determinacy(&d2, &base, &base, &points, |_| 3, &cfg).unwrap();
        assert_eq!(same.tail, Some(0));

        // s' - s = flat(x1^2)·x1 is flat at 0 but not at the sequence points
        let other = s("sin(x1) + x1^3 + flat(x1^2)*x1");
        let err = check_sequence_determinacy(&d2, &base, &other, &points, |_| 2, &cfg).unwrap_err();
        assert_eq!(err, ProbeError::SequencePrecondition { index: 0, k: 2 });
    }

    #[test]
    fn sequence_tail_from_flat_difference() {
        // the difference exp(-1/x1^2) falls below tolerance along 2^-k
        let cfg = ProbeConfig::default();
        let d2 = fixture(CatalogSpec::Derivative { index: vec![2] }, 1);
        let base = s("cos(x1)");
        let other = s("cos(x1) + flat(x1^2)");
        let points: Vec<Vec<f64>> = (1..=8).map(|k| vec![0.5f64.powi(k)]).collect();
        let k_of = |i: usize| if i < 2 { 0 } else { 2 };
        let err = check_sequence_determinacy(&d2, &base, &other, &points, k_of, &cfg).unwrap_err();
        assert!(matches!(err, ProbeError::SequencePrecondition { .. }));
        let far: Vec<Vec<f64>> = (3..=8).map(|k| vec![0.5f64.powi(k)]).collect();
        let v = check_sequence_determinacy(&d2, &base, &other, &far, |_| 2, &cfg).unwrap();
        assert_eq!(v.tail, Some(0));
        assert!(v.differences.iter().all(|&d| d < 1e-12));
    }

    #[test]
    fn regularity_examples() {
        let d1 = fixture(CatalogSpec::Derivative { index: vec![1] }, 1);
        let family = Section::new(1, vec![parse("t*sin(x1)", 1).unwrap()]).unwrap();
        assert!(check_regularity(&d1, &family, &[0.4], 0.0).passed);

        let jump = fixture(CatalogSpec::DiscontinuousFamily, 1);
        let crossing = Section::new(1, vec![parse("t + x1", 1).unwrap()]).unwrap();
        let r = check_regularity(&jump, &crossing, &[0.0], 0.0);
        assert!(!r.passed);
        assert_eq!(r.components[0].failed_order, Some(1));

        let constant = Section::new(1, vec![parse("1 + 0*t", 1).unwrap()]).unwrap();
        assert!(check_regularity(&jump, &constant, &[0.0], 0.0).passed);
    }

    #[test]
    fn config_validation() {
        let bad = ProbeConfig { trials: 0, ..ProbeConfig::default() };
        assert!(bad.validate().is_err());
        let bad = ProbeConfig { tol: 0.0, ..ProbeConfig::default() };
        assert!(bad.validate().is_err());
        let text = serde_json::to_string(&ProbeConfig::default()).unwrap();
        assert_eq!(serde_json::from_str::<ProbeConfig>(&text).unwrap(), ProbeConfig::default());
    }
}
