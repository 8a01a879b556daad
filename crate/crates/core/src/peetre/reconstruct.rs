//! Reconstruction of the finite-order operator through which a handle
//! factors: `P_k(j^k_x s) = h(ξ)(x)` with `ξ` the Taylor polynomial of the
//! jet, and, for linear handles, the coefficient table `P^I(x)`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{probe_section, stream, ProbeConfig, ProbeError, TAG_LINEARITY};
use crate::expr::Expr;
use crate::jet::{mi_enumerate, Jet, JetError, MultiIndex};
use crate::operator::{taylor_polynomial_sections, OperatorError, OperatorHandle, Section};

/// `P_k` on the fibre over `x`.
#[derive(Clone)]
pub struct Reconstruction {
    handle: OperatorHandle,
    point: Vec<f64>,
    k: usize,
}

impl Reconstruction {
    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn order(&self) -> usize {
        self.k
    }

    /// `h(T)(x)` for one jet per source component, truncated to order `k`.
    pub fn eval(&self, jets: &[Jet]) -> Result<Vec<f64>, ProbeError> {
        let r = self.handle.meta().r;
        if jets.len() != r {
            return Err(OperatorError::ComponentMismatch { expected: r, found: jets.len() }.into());
        }
        let mut truncated = Vec::with_capacity(jets.len());
        for jet in jets {
            if jet.base() != self.point.as_slice() {
                return Err(OperatorError::Schema("jet is not based at the reconstruction point".into()).into());
            }
            truncated.push(jet.truncate(self.k).map_err(OperatorError::from)?);
        }
        let section = taylor_polynomial_sections(&truncated)?;
        Ok(self.handle.apply(&section, &self.point, None)?)
    }
}

pub fn reconstruct(h: &OperatorHandle, x: &[f64], k: usize) -> Result<Reconstruction, ProbeError> {
    let n = h.meta().n;
    if x.len() != n {
        return Err(OperatorError::DimensionMismatch { expected: n, found: x.len() }.into());
    }
    Ok(Reconstruction { handle: h.clone(), point: x.to_vec(), k })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub point: Vec<f64>,
    /// `coeffs[c][b][rank(I)]`: coefficient of `D_I s^b` in target component `c`.
    pub coeffs: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearityWitness {
    pub point: Vec<f64>,
    pub trial: usize,
    pub alpha: f64,
    pub beta: f64,
    pub s1: Section,
    pub s2: Section,
    /// `h(α·s1 + β·s2)(x)`
    pub combined: Vec<f64>,
    /// `α·h(s1)(x) + β·h(s2)(x)`
    pub superposed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearityVerdict {
    pub passed: bool,
    pub checks: usize,
    pub witness: Option<LinearityWitness>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearTable {
    pub k: usize,
    pub indices: Vec<MultiIndex>,
    pub rows: Vec<TableRow>,
    pub linearity: LinearityVerdict,
    /// Set when the handle failed superposition; the table is then meaningless.
    pub flagged: bool,
}

impl LinearTable {
    /// `Σ_b Σ_I P^I_{c,b}(x)·λ^b_I` at grid point `row`.
    pub fn apply(&self, row: usize, jets: &[Jet]) -> Result<Vec<f64>, JetError> {
        let row = &self.rows[row];
        let k = self.k;
        let truncated = jets.iter().map(|j| j.truncate(k)).collect::<Result<Vec<_>, _>>()?;
        Ok(row
            .coeffs
            .iter()
            .map(|per_source| {
                per_source
                    .iter()
                    .zip(&truncated)
                    .map(|(p, jet)| p.iter().zip(jet.coeffs()).map(|(a, b)| a * b).sum::<f64>())
                    .sum()
            })
            .collect())
    }
}

/// `(y - x)^I / I!`, whose only nonzero derivative at `x` is `D_I = 1`.
fn basis_monomial(x: &[f64], index: &MultiIndex) -> Expr {
    let monomial = Expr::product(
        index
            .exponents()
            .iter()
            .enumerate()
            .map(|(i, &e)| Expr::pow(Expr::sub(Expr::var(i), Expr::constant(x[i])), e)),
    );
    Expr::scale(1.0 / index.factorial_f64(), monomial)
}

fn table_row(h: &OperatorHandle, x: &[f64], indices: &[MultiIndex]) -> Result<TableRow, ProbeError> {
    let meta = h.meta();
    let mut coeffs = vec![vec![vec![0.0; indices.len()]; meta.r]; meta.rbar];
    #[allow(clippy::needless_range_loop)]
    for b in 0..meta.r {
        for (rank, index) in indices.iter().enumerate() {
            let components = (0..meta.r)
                .map(|a| if a == b { basis_monomial(x, index) } else { Expr::zero() })
                .collect();
            let section = Section::new(meta.n, components)?;
            for (c, v) in h.apply(&section, x, None)?.into_iter().enumerate() {
                coeffs[c][b][rank] = v;
            }
        }
    }
    Ok(TableRow { point: x.to_vec(), coeffs })
}

enum Check {
    Holds,
    Violated(Box<LinearityWitness>),
    Error(String),
}

fn superposition(h: &OperatorHandle, x: &[f64], trial: usize, point: usize, cfg: &ProbeConfig) -> Check {
    let meta = h.meta();
    let (s1, s2, alpha, beta) = if trial == 0 {
        let one = Section::new(meta.n, vec![Expr::one(); meta.r]).expect("constant section");
        (one.clone(), one, 1.0, 1.0)
    } else {
        let mut rng = stream(cfg.seed, TAG_LINEARITY, point as u64, trial as u64);
        let s1 = probe_section(&mut rng, meta.n, meta.r, cfg);
        let s2 = probe_section(&mut rng, meta.n, meta.r, cfg);
        (s1, s2, rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
    };
    let run = || -> Result<(Vec<f64>, Vec<f64>), ProbeError> {
        let combined = h.apply(&s1.combine(alpha, &s2, beta)?, x, None)?;
        let (v1, v2) = (h.apply(&s1, x, None)?, h.apply(&s2, x, None)?);
        let superposed = v1.iter().zip(&v2).map(|(a, b)| alpha * a + beta * b).collect();
        Ok((combined, superposed))
    };
    match run() {
        Err(e) => Check::Error(e.to_string()),
        Ok((combined, superposed)) if cfg.differs(&combined, &superposed) => {
            Check::Violated(Box::new(LinearityWitness {
                point: x.to_vec(),
                trial,
                alpha,
                beta,
                s1,
                s2,
                combined,
                superposed,
            }))
        }
        Ok(_) => Check::Holds,
    }
}

/// Coefficient table `P^I(x) = h((· - x)^I / I!)(x)` at each grid point,
/// with a superposition test.
///
/// Trial 0 at each point uses `s1 = s2 = 1`, `α = β = 1`; the rest are
/// random probe sections and weights.
pub fn reconstruct_linear(
    h: &OperatorHandle,
    grid: &[Vec<f64>],
    k: usize,
    cfg: &ProbeConfig,
) -> Result<LinearTable, ProbeError> {
    cfg.validate()?;
    let n = h.meta().n;
    if let Some(x) = grid.iter().find(|x| x.len() != n) {
        return Err(OperatorError::DimensionMismatch { expected: n, found: x.len() }.into());
    }
    let indices = mi_enumerate(n, k);
    let rows = grid
        .par_iter()
        .map(|x| table_row(h, x, &indices))
        .collect::<Result<Vec<_>, _>>()?;
    let checks: Vec<Check> = (0..grid.len() * cfg.trials)
        .into_par_iter()
        .map(|id| {
            let (point, trial) = (id / cfg.trials, id % cfg.trials);
            superposition(h, &grid[point], trial, point, cfg)
        })
        .collect();
    let count = checks.len();
    let mut witness = None;
    let mut errors = Vec::new();
    for check in checks {
        match check {
            Check::Holds => {}
            Check::Violated(w) => {
                witness.get_or_insert(*w);
            }
            Check::Error(e) => errors.push(e),
        }
    }
    let passed = witness.is_none() && errors.is_empty();
    Ok(LinearTable {
        k,
        indices,
        rows,
        linearity: LinearityVerdict { passed, checks: count, witness, errors },
        flagged: !passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::jet::prolong;
    use crate::operator::{apply_jet_operator, catalog_make, from_jet_operator, CatalogSpec, JetOperator};

    fn fixture(spec: CatalogSpec) -> OperatorHandle {
        catalog_make(&spec, 1, 1).unwrap()
    }

    #[test]
    fn generic_examples() {
        let d1 = fixture(CatalogSpec::Derivative { index: vec![1] });
        let p = reconstruct(&d1, &[0.4], 1).unwrap();
        let jet = Jet::new(vec![0.4], 1, vec![5.0, 7.0]).unwrap();
        assert_eq!(p.eval(&[jet]).unwrap(), vec![7.0]);

        let square = fixture(CatalogSpec::Square);
        let p = reconstruct(&square, &[0.0], 0).unwrap();
        let jet = Jet::new(vec![0.0], 0, vec![3.0]).unwrap();
        assert_eq!(p.eval(&[jet]).unwrap(), vec![9.0]);
    }

    #[test]
    fn generic_round_trip() {
        let op = JetOperator::parse(1, 1, 2, &["exp(u_0)*u_2 - x1*u_1^2"]).unwrap();
        let h = from_jet_operator(op.clone());
        let s = Section::parse(1, &["sin(2*x1) + x1^3"]).unwrap();
        for x in [-0.7, 0.0, 0.3, 1.1] {
            let want = apply_jet_operator(&op, &s, &[x]).unwrap()[0];
            let jet = prolong(&s.components()[0], &[x], 4).unwrap();
            let got = reconstruct(&h, &[x], 2).unwrap().eval(&[jet]).unwrap()[0];
            assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "{got} vs {want}");
        }
    }

    #[test]
    fn jets_must_sit_at_the_point() {
        let d1 = fixture(CatalogSpec::Derivative { index: vec![1] });
        let p = reconstruct(&d1, &[0.4], 1).unwrap();
        assert!(p.eval(&[Jet::zero(vec![0.0], 1)]).is_err());
        assert!(p.eval(&[Jet::zero(vec![0.4], 0)]).is_err());
    }

    #[test]
    fn linear_tables() {
        let cfg = ProbeConfig::default();
        let d2 = fixture(CatalogSpec::Derivative { index: vec![2] });
        let grid = vec![vec![-1.0], vec![0.0], vec![0.5]];
        let table = reconstruct_linear(&d2, &grid, 2, &cfg).unwrap();
        assert!(table.linearity.passed && !table.flagged);
        for row in &table.rows {
            assert_eq!(row.coeffs[0][0], vec![0.0, 0.0, 1.0]);
        }

        let h = from_jet_operator(JetOperator::parse(1, 1, 1, &["x1*u_1"]).unwrap());
        let grid = vec![vec![0.0], vec![0.5], vec![1.0]];
        let table = reconstruct_linear(&h, &grid, 1, &cfg).unwrap();
        for row in &table.rows {
            assert_eq!(row.coeffs[0][0], vec![0.0, row.point[0]]);
        }
        // applying the table agrees with the handle
        let s = parse("exp(x1)*cos(x1)", 1).unwrap();
        for (i, x) in grid.iter().enumerate() {
            let jet = prolong(&s, x, 3).unwrap();
            let via_table = table.apply(i, std::slice::from_ref(&jet)).unwrap()[0];
            let direct = h.apply(&Section::scalar(1, s.clone()).unwrap(), x, None).unwrap()[0];
            assert!((via_table - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn square_fails_superposition() {
        let square = fixture(CatalogSpec::Square);
        let table = reconstruct_linear(&square, &[vec![0.2]], 0, &ProbeConfig::default()).unwrap();
        assert!(table.flagged);
        let w = table.linearity.witness.unwrap();
        assert_eq!((w.trial, w.alpha, w.beta), (0, 1.0, 1.0));
        assert_eq!((w.combined[0], w.superposed[0]), (4.0, 2.0));
    }
}
