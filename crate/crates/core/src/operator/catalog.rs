//! Black-box operator handles and the fixture catalog.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{JetOperator, OperatorError, Section};
use crate::expr::{parse, parse_operator, Expr};
use crate::jet::{mi_rank, MultiIndex, DEFAULT_WORKING_ORDER};

/// Claimed properties of a handle. Probes never trust them; they are echoed
/// in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub name: String,
    pub n: usize,
    pub r: usize,
    pub rbar: usize,
    pub local: bool,
    pub linear: bool,
    pub order: Option<usize>,
}

/// A local operator seen only through evaluation: `(s, x, t) ↦ φ(s_t)(x)`.
///
/// Implementations must be deterministic and safe to call concurrently.
pub trait LocalOperator: Send + Sync {
    fn apply(&self, s: &Section, x: &[f64], t: Option<f64>) -> Result<Vec<f64>, OperatorError>;
    fn meta(&self) -> &OperatorMeta;
}

pub type OperatorHandle = Arc<dyn LocalOperator>;

/// Catalog fixtures other than wrapped jet operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogSpec {
    /// `φ(s)(x) = s(x + v)`; not local.
    Shift { v: Vec<f64> },
    Square,
    Laplacian,
    Derivative { index: Vec<u32> },
    /// `φ(s)(x) = g(s(x))`, with `g` written in `x1`.
    PointwiseCompose { g: String },
    /// `s(x)` where `s(x) >= 0`, `s(x) - 1` elsewhere.
    DiscontinuousFamily,
    /// `D^{(d,0,…,0)} s(x)` with `d = ⌈1/‖x - x0‖⌉` capped at `cap`.
    UnboundedOrder {
        x0: Vec<f64>,
        #[serde(default)]
        cap: Option<usize>,
    },
}

#[derive(Debug, Clone)]
enum Kind {
    Jet(JetOperator),
    Shift(Vec<f64>),
    Square,
    Laplacian,
    Derivative(MultiIndex),
    Compose(Expr),
    Discontinuous,
    Unbounded { x0: Vec<f64>, cap: usize },
}

#[derive(Debug, Clone)]
struct Fixture {
    meta: OperatorMeta,
    kind: Kind,
}

fn componentwise(s: &Section, x: &[f64], t: Option<f64>, f: impl Fn(f64) -> f64) -> Result<Vec<f64>, OperatorError> {
    Ok(s.evaluate(x, t)?.into_iter().map(f).collect())
}

impl Fixture {
    fn check_dim(&self, s: &Section) -> Result<(), OperatorError> {
        if s.dim() != self.meta.n {
            return Err(OperatorError::DimensionMismatch { expected: self.meta.n, found: s.dim() });
        }
        Ok(())
    }

    /// Coefficient of rank `rank` in every component's `order`-jet.
    fn jet_entry(s: &Section, x: &[f64], t: Option<f64>, order: usize, rank: usize) -> Result<Vec<f64>, OperatorError> {
        Ok(s.jets(x, order, t)?.iter().map(|j| j.coeffs()[rank]).collect())
    }
}

impl LocalOperator for Fixture {
    fn apply(&self, s: &Section, x: &[f64], t: Option<f64>) -> Result<Vec<f64>, OperatorError> {
        self.check_dim(s)?;
        match &self.kind {
            Kind::Jet(p) => p.apply_at(s, x, t),
            Kind::Shift(v) => {
                let moved: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + b).collect();
                s.evaluate(&moved, t)
            }
            Kind::Square => componentwise(s, x, t, |v| v * v),
            Kind::Laplacian => {
                let jets = s.jets(x, 2, t)?;
                let ranks: Vec<usize> = (0..s.dim())
                    .map(|i| mi_rank(&MultiIndex::unit(s.dim(), i).checked_add(&MultiIndex::unit(s.dim(), i)).unwrap()))
                    .collect();
                Ok(jets.iter().map(|j| ranks.iter().map(|&r| j.coeffs()[r]).sum()).collect())
            }
            Kind::Derivative(index) => Fixture::jet_entry(s, x, t, index.norm() as usize, mi_rank(index)),
            Kind::Compose(g) => s
                .evaluate(x, t)?
                .into_iter()
                .map(|v| g.evaluate(&[v], None).map_err(OperatorError::from))
                .collect(),
            Kind::Discontinuous => componentwise(s, x, t, |v| if v >= 0.0 { v } else { v - 1.0 }),
            Kind::Unbounded { x0, cap } => {
                let dist = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let d = if dist == 0.0 { *cap } else { ((1.0 / dist).ceil() as usize).min(*cap) };
                let mut exps = vec![0u32; s.dim()];
                exps[0] = d as u32;
                Fixture::jet_entry(s, x, t, d, mi_rank(&MultiIndex::new(exps)))
            }
        }
    }

    fn meta(&self) -> &OperatorMeta {
        &self.meta
    }
}

/// Wraps a jet operator as a black box.
pub fn from_jet_operator(p: JetOperator) -> OperatorHandle {
    let meta = OperatorMeta {
        name: "from_jet_operator".into(),
        n: p.n,
        r: p.r,
        rbar: p.target_rank(),
        local: true,
        linear: false,
        order: Some(p.order),
    };
    Arc::new(Fixture { meta, kind: Kind::Jet(p) })
}

/// Builds a catalog fixture over `R^n` with `r` source components.
pub fn catalog_make(spec: &CatalogSpec, n: usize, r: usize) -> Result<OperatorHandle, OperatorError> {
    let meta = |name: &str, local: bool, linear: bool, order: Option<usize>| OperatorMeta {
        name: name.into(),
        n,
        r,
        rbar: r,
        local,
        linear,
        order,
    };
    let dim_check = |len: usize| {
        if len == n {
            Ok(())
        } else {
            Err(OperatorError::DimensionMismatch { expected: n, found: len })
        }
    };
    let (meta, kind) = match spec {
        CatalogSpec::Shift { v } => {
            dim_check(v.len())?;
            (meta("shift", false, true, None), Kind::Shift(v.clone()))
        }
        CatalogSpec::Square => (meta("square", true, false, Some(0)), Kind::Square),
        CatalogSpec::Laplacian => (meta("laplacian", true, true, Some(2)), Kind::Laplacian),
        CatalogSpec::Derivative { index } => {
            dim_check(index.len())?;
            let index = MultiIndex::new(index.clone());
            let order = index.norm() as usize;
            (meta("derivative", true, true, Some(order)), Kind::Derivative(index))
        }
        CatalogSpec::PointwiseCompose { g } => {
            let g = parse(g, 1)?;
            if g.has_param() {
                return Err(OperatorError::Schema("composed function cannot depend on t".into()));
            }
            (meta("pointwise_compose", true, false, Some(0)), Kind::Compose(g))
        }
        CatalogSpec::DiscontinuousFamily => (meta("discontinuous_family", true, false, Some(0)), Kind::Discontinuous),
        CatalogSpec::UnboundedOrder { x0, cap } => {
            dim_check(x0.len())?;
            let cap = cap.unwrap_or(DEFAULT_WORKING_ORDER);
            (meta("unbounded_order", true, true, None), Kind::Unbounded { x0: x0.clone(), cap })
        }
    };
    Ok(Arc::new(Fixture { meta, kind }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    JetOperator,
    Catalog,
}

fn one() -> usize {
    1
}

/// JSON definition of an operator.
///
/// `{"kind": "jet_operator", "n": 1, "r": 1, "order": 2, "exprs": ["u_2"]}`
/// or `{"kind": "catalog", "n": 2, "params": {"name": "laplacian"}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDoc {
    pub kind: OperatorKind,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "one")]
    pub r: usize,
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub exprs: Vec<String>,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl OperatorDoc {
    pub fn build(&self) -> Result<OperatorHandle, OperatorError> {
        if self.n == 0 || self.r == 0 {
            return Err(OperatorError::Schema("n and r must be positive".into()));
        }
        match self.kind {
            OperatorKind::JetOperator => {
                let order = self.order.ok_or_else(|| OperatorError::Schema("jet_operator needs an order".into()))?;
                if !(self.params.is_null() || self.params.as_object().is_some_and(|m| m.is_empty())) {
                    return Err(OperatorError::Schema("jet_operator takes no params".into()));
                }
                let exprs = self
                    .exprs
                    .iter()
                    .map(|t| parse_operator(t, self.n, self.r, order))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(from_jet_operator(JetOperator::new(self.n, self.r, order, exprs)?))
            }
            OperatorKind::Catalog => {
                if !self.exprs.is_empty() {
                    return Err(OperatorError::Schema("catalog operators take no exprs".into()));
                }
                let name = self.params.get("name").and_then(|v| v.as_str()).unwrap_or_default().to_string();
                let spec: CatalogSpec = serde_json::from_value(self.params.clone()).map_err(|e| {
                    if KNOWN.contains(&name.as_str()) {
                        OperatorError::Schema(e.to_string())
                    } else {
                        OperatorError::UnknownFixture(name.clone())
                    }
                })?;
                catalog_make(&spec, self.n, self.r)
            }
        }
    }
}

const KNOWN: [&str; 7] = [
    "shift",
    "square",
    "laplacian",
    "derivative",
    "pointwise_compose",
    "discontinuous_family",
    "unbounded_order",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::apply_jet_operator;

    fn s(text: &str) -> Section {
        Section::parse(1, &[text]).unwrap()
    }

    fn at(h: &OperatorHandle, sec: &Section, x: f64) -> f64 {
        h.apply(sec, &[x], None).unwrap()[0]
    }

    #[test]
    fn catalog_examples() {
        let shift = catalog_make(&CatalogSpec::Shift { v: vec![1.0] }, 1, 1).unwrap();
        assert_eq!(at(&shift, &s("x1"), 0.0), 1.0);
        let square = catalog_make(&CatalogSpec::Square, 1, 1).unwrap();
        assert_eq!(at(&square, &s("x1 + 2"), 1.0), 9.0);
        let d2 = catalog_make(&CatalogSpec::Derivative { index: vec![2] }, 1, 1).unwrap();
        assert_eq!(at(&d2, &s("sin(x1)"), 0.0).abs(), 0.0);
        assert_eq!(at(&d2, &s("x1^3"), 2.0), 12.0);
    }

    #[test]
    fn laplacian_and_compose() {
        let lap = catalog_make(&CatalogSpec::Laplacian, 2, 1).unwrap();
        let sec = Section::parse(2, &["x1^2*x2 + x2^3"]).unwrap();
        assert_eq!(lap.apply(&sec, &[1.0, 2.0], None).unwrap(), vec![4.0 + 12.0]);
        let g = catalog_make(&CatalogSpec::PointwiseCompose { g: "sin(x1)".into() }, 1, 1).unwrap();
        assert_eq!(at(&g, &s("x1"), 0.5), 0.5f64.sin());
    }

    #[test]
    fn discontinuous_branches() {
        let h = catalog_make(&CatalogSpec::DiscontinuousFamily, 1, 1).unwrap();
        assert_eq!(at(&h, &s("x1"), 0.5), 0.5);
        assert_eq!(at(&h, &s("x1"), -0.5), -1.5);
    }

    #[test]
    fn unbounded_order_degree() {
        let h = catalog_make(&CatalogSpec::UnboundedOrder { x0: vec![0.0], cap: None }, 1, 1).unwrap();
        let sec = s("exp(2*x1)");
        // d = 1, 2, 4 at distances 1, 1/2, 1/4; the cap applies at the centre
        for (x, d) in [(1.0f64, 1), (0.5, 2), (0.25, 4), (0.1, 8), (0.0, 8)] {
            let want = 2f64.powi(d) * (2.0 * x).exp();
            assert!((at(&h, &sec, x) - want).abs() <= 1e-9 * want, "x = {x}");
        }
    }

    #[test]
    fn wrapping_is_bitwise() {
        let p = JetOperator::parse(1, 1, 3, &["u_1*u_3 + x1*u_0"]).unwrap();
        let h = from_jet_operator(p.clone());
        for (text, x) in [("sin(3*x1)", 0.2), ("exp(x1)*x1^2", -0.7), ("flat(x1)", 0.4)] {
            let sec = s(text);
            assert_eq!(h.apply(&sec, &[x], None).unwrap(), apply_jet_operator(&p, &sec, &[x]).unwrap());
        }
    }

    #[test]
    fn determinism() {
        let h = catalog_make(&CatalogSpec::Laplacian, 2, 1).unwrap();
        let sec = Section::parse(2, &["sin(x1*x2) + exp(x1)"]).unwrap();
        let a = h.apply(&sec, &[0.3, 0.4], None).unwrap();
        let b = h.apply(&sec, &[0.3, 0.4], None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn documents() {
        let doc: OperatorDoc =
            serde_json::from_str(r#"{"kind":"jet_operator","order":1,"exprs":["x1*u_1 + u_0"]}"#).unwrap();
        let h = doc.build().unwrap();
        assert_eq!(h.meta().order, Some(1));
        let doc: OperatorDoc =
            serde_json::from_str(r#"{"kind":"catalog","n":2,"params":{"name":"laplacian"}}"#).unwrap();
        assert_eq!(doc.build().unwrap().meta().name, "laplacian");
        let doc: OperatorDoc =
            serde_json::from_str(r#"{"kind":"catalog","params":{"name":"derivative","index":[2]}}"#).unwrap();
        assert_eq!(doc.build().unwrap().meta().order, Some(2));
        let doc: OperatorDoc = serde_json::from_str(r#"{"kind":"catalog","params":{"name":"nope"}}"#).unwrap();
        assert_eq!(doc.build().err(), Some(OperatorError::UnknownFixture("nope".into())));
        let doc: OperatorDoc = serde_json::from_str(r#"{"kind":"catalog","params":{"name":"shift"}}"#).unwrap();
        assert!(matches!(doc.build().err(), Some(OperatorError::Schema(_))));
        assert!(serde_json::from_str::<OperatorDoc>(r#"{"kind":"other"}"#).is_err());
    }
}
