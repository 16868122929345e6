//! JSON model descriptors.
//!
//! ```json
//! {
//!   "kind": "ProductCerf",
//!   "params": { "base": { "kind": "KroneckerFlow", "params": { "slope": 1.4142135623730951 } }, "bump_count": 21 },
//!   "truncation": 6,
//!   "cover": { "u": [-1.0, 0.2], "v": [-0.2, 1.0] }
//! }
//! ```
//!
//! A nested base inherits the outer truncation. The published schema is
//! `docs/schema.json`.

use std::path::Path;

use foliate_core::geometry::{field, vector_field, ChartMetric, Field, VectorField};
use foliate_core::gluing::CoverSpec;
use foliate_core::models::ModelKind;
use foliate_core::FoliationModel;
use serde::{Deserialize, Serialize};

use crate::expr::{Expr, Var};

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    /// `message` already names the line and column.
    #[error("{path}: {message}")]
    Syntax { path: String, message: String, line: usize, column: usize },
    #[error("{path}: {field}: {message}")]
    Field { path: String, field: String, message: String },
    #[error("{path}: {0}", path = .1)]
    Io(#[source] std::io::Error, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    CarriereFlow,
    GhysFlow,
    KroneckerFlow,
    SphereIsometricFlow,
    ProductCerf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    pub kind: Kind,
    #[serde(default = "empty_params")]
    pub params: serde_json::Value,
    pub truncation: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverDescriptor>,
}

/// Base model of a product: same shape, truncation optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseDescriptor {
    kind: Kind,
    #[serde(default = "empty_params")]
    params: serde_json::Value,
    #[serde(default)]
    truncation: Option<u32>,
}

fn empty_params() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CarriereParams {
    #[serde(rename = "A")]
    a: [[i64; 2]; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KroneckerParams {
    slope: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SphereParams {
    d: u32,
    weights: Vec<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductParams {
    base: BaseDescriptor,
    bump_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverDescriptor {
    pub u: [f64; 2],
    pub v: [f64; 2],
}

/// A chart metric `g = g_leaf(x, y) ⊕ g_T(y)` on a box, entries row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub leaf_dim: usize,
    pub leaf: Vec<String>,
    pub transverse: Vec<String>,
    /// Finite-difference step; 1e-2 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Flow field components for the geodesibility check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<Vec<String>>,
    /// Basic function for the conformal rescaling check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformal: Option<String>,
}

/// Everything the curvature command needs, compiled from a [`MetricSpec`].
pub struct ChartData {
    pub metric: ChartMetric,
    pub h: f64,
    pub flow: Option<VectorField>,
    pub conformal: Option<(Field, VectorField)>,
}

fn typed<T: for<'de> Deserialize<'de>>(path: &str, field: &str, v: &serde_json::Value) -> Result<T, SchemaError> {
    T::deserialize(v).map_err(|e| SchemaError::Field { path: path.into(), field: field.into(), message: e.to_string() })
}

fn model_of(path: &str, kind: Kind, params: &serde_json::Value, truncation: u32) -> Result<FoliationModel, SchemaError> {
    Ok(match kind {
        Kind::CarriereFlow => {
            let p: CarriereParams = typed(path, "params", params)?;
            FoliationModel::carriere(p.a, truncation)
        }
        Kind::GhysFlow => {
            typed::<NoParams>(path, "params", params)?;
            FoliationModel::ghys(truncation)
        }
        Kind::KroneckerFlow => FoliationModel::kronecker(typed::<KroneckerParams>(path, "params", params)?.slope, truncation),
        Kind::SphereIsometricFlow => {
            let p: SphereParams = typed(path, "params", params)?;
            FoliationModel::sphere(p.d, p.weights, truncation)
        }
        Kind::ProductCerf => {
            let p: ProductParams = typed(path, "params", params)?;
            let n = p.base.truncation.unwrap_or(truncation);
            if p.base.kind == Kind::ProductCerf {
                return Err(SchemaError::Field {
                    path: path.into(),
                    field: "params.base.kind".into(),
                    message: "a product base must be a closed flow model".into(),
                });
            }
            FoliationModel::product_cerf(model_of(path, p.base.kind, &p.base.params, n)?, p.bump_count)
        }
    })
}

fn compile(path: &str, field: &str, src: &str) -> Result<Expr, SchemaError> {
    Expr::parse(src).map_err(|e| SchemaError::Field { path: path.into(), field: field.into(), message: e.to_string() })
}

impl Descriptor {
    pub fn from_str(text: &str, path: &str) -> Result<Self, SchemaError> {
        let d: Descriptor = serde_json::from_str(text).map_err(|e| SchemaError::Syntax {
            path: path.into(),
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        })?;
        d.model_at(path)?;
        if let Some(m) = &d.metric {
            d.chart_at(m, path)?;
        }
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| SchemaError::Io(e, shown.clone()))?;
        Self::from_str(&text, &shown)
    }

    fn model_at(&self, path: &str) -> Result<FoliationModel, SchemaError> {
        model_of(path, self.kind, &self.params, self.truncation)
    }

    pub fn model(&self) -> FoliationModel {
        self.model_at("descriptor").expect("checked on load")
    }

    /// Rebuild the descriptor a model came from (used for echoes).
    pub fn from_model(m: &FoliationModel) -> Self {
        let (kind, params) = match &m.kind {
            ModelKind::CarriereFlow { a } => (Kind::CarriereFlow, serde_json::json!({ "A": a })),
            ModelKind::GhysFlow => (Kind::GhysFlow, empty_params()),
            ModelKind::KroneckerFlow { slope } => (Kind::KroneckerFlow, serde_json::json!({ "slope": slope })),
            ModelKind::SphereIsometricFlow { d, weights } => {
                (Kind::SphereIsometricFlow, serde_json::json!({ "d": d, "weights": weights }))
            }
            ModelKind::ProductCerf { base, bump_count } => {
                let b = Self::from_model(base);
                let base = serde_json::json!({ "kind": b.kind, "params": b.params });
                (Kind::ProductCerf, serde_json::json!({ "base": base, "bump_count": bump_count }))
            }
        };
        Descriptor { kind, params, truncation: m.truncation, metric: None, cover: None }
    }

    pub fn cover(&self) -> Option<CoverSpec> {
        self.cover.as_ref().map(|c| CoverSpec::new(self.model(), (c.u[0], c.u[1]), (c.v[0], c.v[1])))
    }

    pub fn chart(&self) -> Option<ChartData> {
        self.metric.as_ref().map(|m| self.chart_at(m, "descriptor").expect("checked on load"))
    }

    fn chart_at(&self, m: &MetricSpec, path: &str) -> Result<ChartData, SchemaError> {
        let fail = |field: &str, message: String| SchemaError::Field { path: path.into(), field: field.into(), message };
        let dim = m.lo.len();
        if m.hi.len() != dim || dim == 0 {
            return Err(fail("metric.hi", format!("expected {dim} bounds to match metric.lo")));
        }
        if m.leaf_dim == 0 || m.leaf_dim >= dim {
            return Err(fail("metric.leaf_dim", format!("must lie in 1..{dim}")));
        }
        let (p, q) = (m.leaf_dim, dim - m.leaf_dim);
        let parse_all = |name: &str, srcs: &[String], n: usize, leafwise: bool| -> Result<Vec<Expr>, SchemaError> {
            if srcs.len() != n * n {
                return Err(fail(name, format!("expected {} entries, got {}", n * n, srcs.len())));
            }
            srcs.iter()
                .enumerate()
                .map(|(i, s)| {
                    let e = compile(path, &format!("{name}[{i}]"), s)?;
                    let (ax, ay) = e.arity();
                    if ay > q || (ax > 0 && !leafwise) || ax > p {
                        return Err(fail(&format!("{name}[{i}]"), "variable out of range (transverse entries may only use y_j)".into()));
                    }
                    Ok(e)
                })
                .collect()
        };
        let leaf = parse_all("metric.leaf", &m.leaf, p, true)?;
        let transverse = parse_all("metric.transverse", &m.transverse, q, false)?;
        let on_z = move |e: Expr| field(move |z: &[f64]| e.eval(&z[..p], &z[p..]));
        let on_y = |e: Expr| field(move |y: &[f64]| e.eval(&[], y));
        let metric = ChartMetric::new(
            m.lo.clone(),
            m.hi.clone(),
            p,
            leaf.into_iter().map(on_z).collect(),
            transverse.into_iter().map(on_y).collect(),
        )
        .map_err(|e| fail("metric", e.to_string()))?;
        let h = m.h.unwrap_or(1e-2);
        if !(h > 0.0 && h.is_finite()) {
            return Err(fail("metric.h", "must be positive".into()));
        }
        let components = |es: Vec<Expr>| vector_field(move |z: &[f64]| es.iter().map(|e| e.eval(&z[..p], &z[p..])).collect());
        let flow = match &m.flow {
            Some(srcs) if srcs.len() != dim => return Err(fail("metric.flow", format!("expected {dim} components"))),
            Some(srcs) => Some(components(
                srcs.iter().enumerate().map(|(i, s)| compile(path, &format!("metric.flow[{i}]"), s)).collect::<Result<_, _>>()?,
            )),
            None => None,
        };
        let conformal = match &m.conformal {
            Some(s) => {
                let f = compile(path, "metric.conformal", s)?;
                if f.arity().0 > 0 || f.arity().1 > q {
                    return Err(fail("metric.conformal", "must be a function of y_1..y_q only".into()));
                }
                let grad = (0..p).map(|_| Expr::Num(0.0)).chain((0..q).map(|j| f.derivative(Var::Y(j)))).collect();
                Some((on_z(f), components(grad)))
            }
            None => None,
        };
        Ok(ChartData { metric, h, flow, conformal })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CARRIERE: &str = r#"{"kind": "CarriereFlow", "params": {"A": [[2, 1], [1, 1]]}, "truncation": 8}"#;

    #[test]
    fn parses_catalogue_models() {
        let d = Descriptor::from_str(CARRIERE, "c").unwrap();
        assert_eq!(d.model(), FoliationModel::carriere([[2, 1], [1, 1]], 8));
        let p = r#"{"kind": "ProductCerf", "truncation": 4,
            "params": {"base": {"kind": "GhysFlow"}, "bump_count": 6}, "cover": {"u": [-1, 0.5], "v": [-0.5, 1]}}"#;
        let d = Descriptor::from_str(p, "p").unwrap();
        assert_eq!(d.model(), FoliationModel::product_cerf(FoliationModel::ghys(4), 6));
        assert!(d.cover().is_some());
    }

    #[test]
    fn echo_round_trips() {
        for m in [
            FoliationModel::carriere([[2, 1], [1, 1]], 3),
            FoliationModel::kronecker(2f64.sqrt(), 5),
            FoliationModel::sphere(2, vec![1, 2, 3], 6),
            FoliationModel::product_cerf(FoliationModel::ghys(2), 7),
        ] {
            let text = serde_json::to_string(&Descriptor::from_model(&m)).unwrap();
            assert_eq!(Descriptor::from_str(&text, "echo").unwrap().model(), m);
        }
        let d = Descriptor::from_str(CARRIERE, "c").unwrap();
        assert_eq!(Descriptor::from_str(&serde_json::to_string(&d).unwrap(), "echo").unwrap(), d);
    }

    #[test]
    fn schema_errors_carry_location() {
        match Descriptor::from_str("{\n  \"kind\": \"GhysFlow\",\n  \"truncation\": }", "bad") {
            Err(SchemaError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        for text in [
            r#"{"kind": "Torus", "truncation": 2}"#,
            r#"{"kind": "GhysFlow", "truncation": 2, "extra": 1}"#,
            r#"{"kind": "GhysFlow", "params": {"slope": 1}, "truncation": 2}"#,
            r#"{"kind": "CarriereFlow", "params": {"A": [[2, 1]]}, "truncation": 2}"#,
        ] {
            assert!(Descriptor::from_str(text, "bad").is_err(), "{text}");
        }
    }

    #[test]
    fn metric_compiles() {
        let text = r#"{"kind": "GhysFlow", "truncation": 2, "metric": {
            "lo": [-1, -1], "hi": [1, 1], "leaf_dim": 1,
            "leaf": ["exp(2 * y_1)"], "transverse": ["1"], "conformal": "sin(y_1)", "flow": ["1", "0"]}}"#;
        let d = Descriptor::from_str(text, "m").unwrap();
        let c = d.chart().unwrap();
        assert_eq!(c.metric.at(&[0.0, 0.5])[(0, 0)], 1f64.exp());
        let (_, df) = c.conformal.unwrap();
        assert_eq!(df(&[0.0, 0.0]), vec![0.0, 1.0]);
        let bad = text.replace("\"1\", \"0\"", "\"1\"");
        assert!(Descriptor::from_str(&bad, "m").is_err());
        let leafy = text.replace("\"transverse\": [\"1\"]", "\"transverse\": [\"1 + x_1\"]");
        assert!(Descriptor::from_str(&leafy, "m").is_err());
    }
}
