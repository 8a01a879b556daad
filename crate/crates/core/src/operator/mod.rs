//! Sections, jet-coordinate operators, the universal polynomial family and
//! black-box local operators.

mod catalog;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, parse_operator, EvalContext, EvalError, Expr, ParseError};
use crate::jet::{mi_count, mi_enumerate, prolong_with, Jet, JetError};

pub use catalog::{
    catalog_make, from_jet_operator, CatalogSpec, LocalOperator, OperatorDoc, OperatorHandle, OperatorKind,
    OperatorMeta,
};

/// Half-width of the default section domain `[-10, 10]^n`.
pub const DEFAULT_DOMAIN_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("section has {found} components, operator expects {expected}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("point {0:?} lies outside the section domain")]
    OutsideDomain(Vec<f64>),
    #[error("section depends on t; supply a parameter value")]
    Parametric,
    #[error("coefficient vector has length {found}, expected {expected}")]
    CoefficientCount { expected: usize, found: usize },
    #[error("unknown catalog fixture {0:?}")]
    UnknownFixture(String),
    #[error("invalid operator definition: {0}")]
    Schema(String),
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn cube(n: usize, radius: f64) -> Self {
        Domain { lo: vec![-radius; n], hi: vec![radius; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lo).zip(&self.hi).all(|((v, l), h)| l <= v && v <= h)
    }

    /// Whether the closed ball `B(x, r)` fits inside the box.
    pub fn contains_ball(&self, x: &[f64], r: f64) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lo).zip(&self.hi).all(|((v, l), h)| l <= &(v - r) && v + r <= *h)
    }
}

/// A section of the trivial bundle `R^n × R^r` over a box, possibly a
/// one-parameter family in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    n: usize,
    components: Vec<Expr>,
    domain: Domain,
}

impl Section {
    /// Section over the default domain `[-10, 10]^n`.
    pub fn new(n: usize, components: Vec<Expr>) -> Result<Self, OperatorError> {
        Section::with_domain(components, Domain::cube(n, DEFAULT_DOMAIN_RADIUS))
    }

    pub fn with_domain(components: Vec<Expr>, domain: Domain) -> Result<Self, OperatorError> {
        let n = domain.dim();
        if n == 0 || domain.hi.len() != n {
            return Err(OperatorError::Schema("domain bounds must have equal positive length".into()));
        }
        if components.is_empty() {
            return Err(OperatorError::Schema("a section needs at least one component".into()));
        }
        for c in &components {
            if c.has_jet_coords() {
                return Err(OperatorError::Schema("sections cannot reference jet coordinates".into()));
            }
            if let Some(v) = c.max_var() {
                if v >= n {
                    return Err(OperatorError::DimensionMismatch { expected: n, found: v + 1 });
                }
            }
        }
        Ok(Section { n, components, domain })
    }

    /// Parses one expression per component.
    pub fn parse(n: usize, texts: &[&str]) -> Result<Self, OperatorError> {
        let components = texts.iter().map(|t| parse(t, n)).collect::<Result<Vec<_>, _>>()?;
        Section::new(n, components)
    }

    pub fn scalar(n: usize, e: Expr) -> Result<Self, OperatorError> {
        Section::new(n, vec![e])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Fibre dimension `r`.
    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn is_parametric(&self) -> bool {
        self.components.iter().any(Expr::has_param)
    }

    fn check_point(&self, x: &[f64]) -> Result<(), OperatorError> {
        if x.len() != self.n {
            return Err(OperatorError::DimensionMismatch { expected: self.n, found: x.len() });
        }
        if !self.domain.contains(x) {
            return Err(OperatorError::OutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    fn check_param(&self, t: Option<f64>) -> Result<(), OperatorError> {
        if t.is_none() && self.is_parametric() {
            return Err(OperatorError::Parametric);
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64], t: Option<f64>) -> Result<Vec<f64>, OperatorError> {
        self.check_point(x)?;
        self.check_param(t)?;
        Ok(self
            .components
            .iter()
            .map(|c| c.evaluate(x, t))
            .collect::<Result<Vec<_>, _>>()?)
    }

    /// `j^k_x s`, one jet per component.
    pub fn jets(&self, x: &[f64], k: usize, t: Option<f64>) -> Result<Vec<Jet>, OperatorError> {
        self.check_point(x)?;
        self.check_param(t)?;
        Ok(self
            .components
            .iter()
            .map(|c| prolong_with(c, x, k, t))
            .collect::<Result<Vec<_>, _>>()?)
    }

    /// Applies `f` to every component; the domain is kept.
    pub fn map(&self, f: impl Fn(usize, &Expr) -> Expr) -> Section {
        Section {
            n: self.n,
            components: self.components.iter().enumerate().map(|(a, c)| f(a, c)).collect(),
            domain: self.domain.clone(),
        }
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: f64, other: &Section, beta: f64) -> Result<Section, OperatorError> {
        if other.rank() != self.rank() {
            return Err(OperatorError::ComponentMismatch { expected: self.rank(), found: other.rank() });
        }
        if other.n != self.n {
            return Err(OperatorError::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(self.map(|a, c| Expr::add(Expr::scale(alpha, c.clone()), Expr::scale(beta, other.components[a].clone()))))
    }

    /// Adds `terms[a]` to component `a`.
    pub fn perturbed(&self, terms: &[Expr]) -> Section {
        assert_eq!(terms.len(), self.rank(), "one perturbation per component");
        self.map(|a, c| Expr::add(c.clone(), terms[a].clone()))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionDoc {
    n: usize,
    exprs: Vec<String>,
    #[serde(default)]
    domain: Option<Domain>,
}

impl Serialize for Section {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut doc = serializer.serialize_struct("Section", 3)?;
        doc.serialize_field("n", &self.n)?;
        doc.serialize_field("exprs", &self.components)?;
        doc.serialize_field("domain", &self.domain)?;
        doc.end()
    }
}

impl<'de> Deserialize<'de> for Section {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let doc = SectionDoc::deserialize(deserializer)?;
        let components = doc
            .exprs
            .iter()
            .map(|t| parse(t, doc.n))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        let domain = doc.domain.unwrap_or_else(|| Domain::cube(doc.n, DEFAULT_DOMAIN_RADIUS));
        if domain.dim() != doc.n {
            return Err(D::Error::custom("domain dimension differs from n"));
        }
        Section::with_domain(components, domain).map_err(D::Error::custom)
    }
}

/// A finite-order operator `P(x, j^k s)`, one expression per target component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JetOperator {
    pub n: usize,
    /// Source fibre dimension.
    pub r: usize,
    pub order: usize,
    pub exprs: Vec<Expr>,
}

impl JetOperator {
    pub fn new(n: usize, r: usize, order: usize, exprs: Vec<Expr>) -> Result<Self, OperatorError> {
        if exprs.is_empty() {
            return Err(OperatorError::Schema("operator needs at least one expression".into()));
        }
        let count = mi_count(n, order);
        for e in &exprs {
            if e.has_param() {
                return Err(OperatorError::Schema("operator expressions cannot depend on t".into()));
            }
            if let Some(v) = e.max_var() {
                if v >= n {
                    return Err(OperatorError::DimensionMismatch { expected: n, found: v + 1 });
                }
            }
            if e.jet_coords().iter().any(|&(a, rank)| a >= r || rank >= count) {
                return Err(OperatorError::Schema("undeclared jet coordinate".into()));
            }
        }
        Ok(JetOperator { n, r, order, exprs })
    }

    pub fn parse(n: usize, r: usize, order: usize, texts: &[&str]) -> Result<Self, OperatorError> {
        let exprs = texts
            .iter()
            .map(|t| parse_operator(t, n, r, order))
            .collect::<Result<Vec<_>, _>>()?;
        JetOperator::new(n, r, order, exprs)
    }

    /// Target fibre dimension `r̄`.
    pub fn target_rank(&self) -> usize {
        self.exprs.len()
    }

    /// `P` evaluated on explicit jets at `x`.
    pub fn eval_jets(&self, x: &[f64], jets: &[Jet]) -> Result<Vec<f64>, OperatorError> {
        if jets.len() != self.r {
            return Err(OperatorError::ComponentMismatch { expected: self.r, found: jets.len() });
        }
        let table: Vec<Vec<f64>> = jets
            .iter()
            .map(|j| {
                if j.order() < self.order {
                    return Err(JetError::OrderTooLarge { requested: self.order, order: j.order() });
                }
                Ok(j.coeffs()[..mi_count(self.n, self.order)].to_vec())
            })
            .collect::<Result<_, _>>()?;
        let ctx = EvalContext::at(x).with_jet(&table);
        Ok(self.exprs.iter().map(|e| e.eval_in(&ctx)).collect::<Result<Vec<_>, _>>()?)
    }

    pub(crate) fn apply_at(&self, s: &Section, x: &[f64], t: Option<f64>) -> Result<Vec<f64>, OperatorError> {
        if s.dim() != self.n {
            return Err(OperatorError::DimensionMismatch { expected: self.n, found: s.dim() });
        }
        if s.rank() != self.r {
            return Err(OperatorError::ComponentMismatch { expected: self.r, found: s.rank() });
        }
        let jets = s.jets(x, self.order, t)?;
        self.eval_jets(x, &jets)
    }
}

/// `φ_P(s)(x) = P(x, j^k_x s)` for a parameter-free section.
pub fn apply_jet_operator(p: &JetOperator, s: &Section, x: &[f64]) -> Result<Vec<f64>, OperatorError> {
    if s.is_parametric() {
        return Err(OperatorError::Parametric);
    }
    p.apply_at(s, x, None)
}

/// Polynomial sections of degree `<= k`, coordinatized by monomial
/// coefficients in graded-lex order, component-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalFamily {
    pub n: usize,
    pub r: usize,
    pub k: usize,
}

impl UniversalFamily {
    pub fn new(n: usize, r: usize, k: usize) -> Self {
        UniversalFamily { n, r, k }
    }

    /// `r·C(n+k, n)`.
    pub fn coefficient_dim(&self) -> usize {
        self.r * mi_count(self.n, self.k)
    }
}

/// `ξ_f`: component `a` is `Σ_I f[a·N + rank(I)]·x^I`.
pub fn universal_section(u: &UniversalFamily, f: &[f64]) -> Result<Section, OperatorError> {
    if f.len() != u.coefficient_dim() {
        return Err(OperatorError::CoefficientCount { expected: u.coefficient_dim(), found: f.len() });
    }
    let indices = mi_enumerate(u.n, u.k);
    let components = f
        .chunks(indices.len())
        .map(|coeffs| {
            Expr::sum(indices.iter().zip(coeffs).filter(|(_, &c)| c != 0.0).map(|(index, &c)| {
                let monomial = Expr::product(
                    index.exponents().iter().enumerate().map(|(i, &e)| Expr::pow(Expr::var(i), e)),
                );
                Expr::scale(c, monomial)
            }))
        })
        .collect();
    Section::new(u.n, components)
}

/// The polynomial `Σ λ_I (x - a)^I / I!`.
pub fn taylor_polynomial_section(jet: &Jet) -> Section {
    Section::new(jet.dim(), vec![jet.to_polynomial()]).expect("polynomial in the jet's own variables")
}

/// Componentwise Taylor polynomials of jets sharing one base point.
pub fn taylor_polynomial_sections(jets: &[Jet]) -> Result<Section, OperatorError> {
    let n = jets.first().map_or(0, Jet::dim);
    if jets.iter().any(|j| j.dim() != n || j.base() != jets[0].base()) {
        return Err(OperatorError::Schema("jets must share one base point".into()));
    }
    Section::new(n, jets.iter().map(Jet::to_polynomial).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::prolong;

    fn s(n: usize, text: &str) -> Section {
        Section::parse(n, &[text]).unwrap()
    }

    #[test]
    fn apply_examples() {
        let p = JetOperator::parse(1, 1, 2, &["u_2"]).unwrap();
        assert_eq!(apply_jet_operator(&p, &s(1, "sin(x1)"), &[0.0]).unwrap()[0].abs(), 0.0);

        let p = JetOperator::parse(1, 1, 0, &["u_0^2"]).unwrap();
        assert_eq!(apply_jet_operator(&p, &s(1, "x1 + 1"), &[1.0]).unwrap(), vec![4.0]);

        let p = JetOperator::parse(1, 1, 1, &["x1*u_1 + u_0"]).unwrap();
        let v = apply_jet_operator(&p, &s(1, "exp(x1)"), &[0.5]).unwrap()[0];
        assert!((v - 1.5 * 0.5f64.exp()).abs() < 1e-14);
        assert!((v - 2.4730819).abs() < 1e-7);
    }

    #[test]
    fn operator_validation() {
        assert!(matches!(JetOperator::parse(1, 1, 1, &["u_2"]), Err(OperatorError::Parse(_))));
        assert!(JetOperator::new(1, 1, 1, vec![Expr::jet_coord(0, 2)]).is_err());
        assert!(JetOperator::new(1, 1, 1, vec![Expr::jet_coord(1, 0)]).is_err());
        let p = JetOperator::parse(1, 1, 1, &["u_1"]).unwrap();
        assert_eq!(apply_jet_operator(&p, &s(1, "t*x1"), &[0.0]), Err(OperatorError::Parametric));
        assert!(matches!(
            apply_jet_operator(&p, &s(1, "x1"), &[20.0]),
            Err(OperatorError::OutsideDomain(_))
        ));
    }

    #[test]
    fn vector_valued_operators() {
        // divergence and curl of a planar field
        let p = JetOperator::parse(2, 2, 1, &["u1_(1,0) + u2_(0,1)", "u2_(1,0) - u1_(0,1)"]).unwrap();
        let field = Section::parse(2, &["x1^2 - x2", "x1*x2"]).unwrap();
        let v = apply_jet_operator(&p, &field, &[1.0, 2.0]).unwrap();
        assert_eq!(v, vec![3.0, 3.0]);
    }

    #[test]
    fn universal_examples() {
        let u = UniversalFamily::new(1, 1, 2);
        assert_eq!(u.coefficient_dim(), 3);
        let one = universal_section(&u, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(one.evaluate(&[3.7], None).unwrap(), vec![1.0]);
        let quad = universal_section(&u, &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(prolong(&quad.components()[0], &[0.0], 2).unwrap().coeffs(), &[3.0, 2.0, 2.0]);

        let u = UniversalFamily::new(2, 2, 1);
        assert_eq!(u.coefficient_dim(), 6);
        let id = universal_section(&u, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(id.evaluate(&[0.3, -0.7], None).unwrap(), vec![0.3, -0.7]);
        assert_eq!(
            universal_section(&u, &[1.0]),
            Err(OperatorError::CoefficientCount { expected: 6, found: 1 })
        );
    }

    #[test]
    fn taylor_sections() {
        let jet = Jet::from_fn(vec![0.0], 3, |i| if i.norm() == 0 { 1.0 } else { 0.0 });
        assert_eq!(taylor_polynomial_section(&jet).evaluate(&[2.0], None).unwrap(), vec![1.0]);
        let jet = prolong(&parse("x1^2", 1).unwrap(), &[1.0], 2).unwrap();
        let poly = taylor_polynomial_section(&jet);
        for x in [-2.0, 0.0, 0.5, 3.0] {
            let v = poly.evaluate(&[x], None).unwrap()[0];
            assert!((v - x * x).abs() < 1e-12);
        }
        let again = prolong(&poly.components()[0], &[1.0], 2).unwrap();
        assert_eq!(again.coeffs(), jet.coeffs());
    }

    #[test]
    fn section_json() {
        let sec: Section = serde_json::from_str(r#"{"n":2,"exprs":["x1*x2","sin(x1)"]}"#).unwrap();
        assert_eq!(sec.rank(), 2);
        let text = serde_json::to_string(&sec).unwrap();
        let back: Section = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sec);
        assert!(serde_json::from_str::<Section>(r#"{"n":1,"exprs":["x2"]}"#).is_err());
        assert!(serde_json::from_str::<Section>(r#"{"n":1,"exprs":["x1"],"extra":1}"#).is_err());
    }
}
