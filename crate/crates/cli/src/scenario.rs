//! Scenario files: a TOML document naming a metric, some submanifolds and a
//! list of tasks with optional expectations.
//!
//! ```toml
//! seed = 7
//!
//! [metric]
//! kind = "builtin"
//! name = "E2"
//!
//! [submanifolds.circle]
//! kind = "circle"
//! radius = 1.0
//!
//! [[tasks]]
//! id = "rho"
//! op = "cut_times"
//! submanifold = "circle"
//! params = { normals = 200 }
//! expect = [{ quantity = "min_rho", value = 1.0, tol = 1e-3 }]
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use finsler_core::metric::{ChartDomain, ConformalFactor, MetricKind};
use finsler_core::submanifold::{Ellipse, Line, ParamTable, PointSet, Submanifold, X32Curve};
use finsler_core::{corpus, Matrix, Metric, Vector};

pub const CIRCLE_EUCLID: &str = include_str!("../scenarios/circle_euclid.toml");
pub const ELLIPSE_CUTLOCUS: &str = include_str!("../scenarios/ellipse_cutlocus.toml");

/// Bundled scenario text by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "circle_euclid" => Some(CIRCLE_EUCLID),
        "ellipse_cutlocus" => Some(ELLIPSE_CUTLOCUS),
        _ => None,
    }
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("missing field `{0}`")]
    Missing(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("invalid scenario: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub metric: MetricSpec,
    #[serde(default)]
    pub submanifolds: BTreeMap<String, SubmanifoldSpec>,
    pub tasks: Vec<TaskSpec>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<String>,
    /// Scenario-wide overrides of the default tolerances.
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    /// One of the corpus metrics `E2`, `RD`, `SP`, `HY`, `MK`, `CR`.
    Builtin { name: String },
    Euclidean { dim: usize },
    /// `F = sqrt(y.A y) + b.y` with `A` given row by row.
    Randers { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// `F = ((y.y)^2 + c sum y_i^4)^(1/4)` in the plane.
    Minkowski { c: f64 },
    /// `F = phi(x) |y|` with `phi` one of `sphere`, `hyperbolic` or a constant.
    Conformal { factor: String, dim: Option<usize>, constant: Option<f64> },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubmanifoldSpec {
    Circle { radius: f64, #[serde(default)] center: [f64; 2] },
    Ellipse { a: f64, b: f64, #[serde(default)] center: [f64; 2] },
    Equator,
    XAxis,
    X32,
    Point { p: Vec<f64> },
    Line { origin: Vec<f64>, direction: Vec<f64>, range: [f64; 2] },
    /// Tabulated points; a closed curve when `periodic`.
    Table { points: Vec<Vec<f64>>, #[serde(default)] periodic: bool },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    pub op: Op,
    pub submanifold: Option<String>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Geodesic,
    FlagCurvature,
    DistancePoint,
    DistanceSubmanifold,
    OracleDistance,
    DistancePairs,
    CutTimes,
    CutLocus,
    Tubular,
    Singleton,
    BackwardSphere,
}

/// Operation parameters. Each op reads the fields it needs.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
    pub t: Option<f64>,
    pub r: Option<f64>,
    pub normals: Option<usize>,
    pub samples: Option<usize>,
    pub probes: Option<usize>,
    pub epsilon: Option<f64>,
    /// Tubular radius as a multiple of a fresh `Inj+` estimate.
    pub epsilon_factor: Option<f64>,
    pub pairs: Option<usize>,
    pub radius: Option<f64>,
}

/// Central tolerance table.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Tolerances {
    pub tol_d: f64,
    pub bracket: f64,
    pub ode: f64,
    pub oracle_h: f64,
    pub cluster_value: f64,
    /// Default tolerance of an expectation that gives none.
    pub expect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_d: 1e-5, bracket: 1e-6, ode: 1e-10, oracle_h: 0.01, cluster_value: 1e-6, expect: 1e-6 }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub tol_d: Option<f64>,
    pub bracket: Option<f64>,
    pub ode: Option<f64>,
    pub oracle_h: Option<f64>,
    pub cluster_value: Option<f64>,
    pub expect: Option<f64>,
}

impl Tolerances {
    pub fn with(mut self, o: &ToleranceOverrides) -> Self {
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut self.tol_d, o.tol_d);
        set(&mut self.bracket, o.bracket);
        set(&mut self.ode, o.ode);
        set(&mut self.oracle_h, o.oracle_h);
        set(&mut self.cluster_value, o.cluster_value);
        set(&mut self.expect, o.expect);
        self
    }
}

/// An assertion on a named task quantity: `|x - value| <= tol` (relative to
/// `|value|` when `relative`), and/or bounds.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub quantity: String,
    pub value: Option<f64>,
    pub tol: Option<f64>,
    #[serde(default)]
    pub relative: bool,
    pub at_least: Option<f64>,
    pub at_most: Option<f64>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let raw: toml::Table = text.parse()?;
        require(&raw, &["metric"])?;
        require(&raw, &["metric", "kind"])?;
        require(&raw, &["tasks"])?;
        if let Some(toml::Value::Array(tasks)) = raw.get("tasks") {
            for (i, t) in tasks.iter().enumerate() {
                for key in ["id", "op"] {
                    if t.get(key).is_none() {
                        return Err(SchemaError::Missing(format!("tasks[{i}].{key}")));
                    }
                }
            }
        }
        if let Some(toml::Value::Table(subs)) = raw.get("submanifolds") {
            for (name, s) in subs {
                if s.get("kind").is_none() {
                    return Err(SchemaError::Missing(format!("submanifolds.{name}.kind")));
                }
            }
        }
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), SchemaError> {
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.tasks {
            if !seen.insert(&t.id) {
                return Err(SchemaError::Invalid(format!("duplicate task id `{}`", t.id)));
            }
            if let Some(s) = &t.submanifold {
                if !self.submanifolds.contains_key(s) {
                    return Err(SchemaError::Invalid(format!("task `{}` names unknown submanifold `{s}`", t.id)));
                }
            }
            for e in &t.expect {
                if e.value.is_none() && e.at_least.is_none() && e.at_most.is_none() {
                    return Err(SchemaError::Invalid(format!(
                        "expectation on `{}` in task `{}` needs value, at_least or at_most",
                        e.quantity, t.id
                    )));
                }
            }
        }
        self.metric.build().map_err(SchemaError::Invalid)?;
        for (name, s) in &self.submanifolds {
            s.build(name).map_err(SchemaError::Invalid)?;
        }
        Ok(())
    }
}

fn require(table: &toml::Table, path: &[&str]) -> Result<(), SchemaError> {
    let mut cur = table;
    for (i, key) in path.iter().enumerate() {
        match cur.get(*key) {
            Some(toml::Value::Table(t)) => cur = t,
            Some(_) if i + 1 == path.len() => return Ok(()),
            Some(_) => return Err(SchemaError::Invalid(format!("`{}` must be a table", path[..=i].join(".")))),
            None => return Err(SchemaError::Missing(path[..=i].join("."))),
        }
    }
    Ok(())
}

impl MetricSpec {
    pub fn build(&self) -> Result<Metric, String> {
        match self {
            MetricSpec::Builtin { name } => corpus::metric_by_name(name).ok_or_else(|| format!("unknown builtin metric `{name}`")),
            MetricSpec::Euclidean { dim } => Ok(Metric::euclidean(*dim)),
            MetricSpec::Randers { a, b } => {
                let n = b.len();
                if a.len() != n || a.iter().any(|row| row.len() != n) {
                    return Err(format!("randers: `a` must be {n} x {n}"));
                }
                let a = Matrix::from_fn(n, n, |i, j| a[i][j]);
                let kind = MetricKind::Randers { a, b: Vector::from_vec(b.clone()) };
                Metric::new("randers", n, kind, ChartDomain::Unbounded).map_err(|e| e.to_string())
            }
            MetricSpec::Minkowski { c } => {
                Metric::new("minkowski", 2, MetricKind::Minkowski { c: *c }, ChartDomain::Unbounded).map_err(|e| e.to_string())
            }
            MetricSpec::Conformal { factor, dim, constant } => {
                let dim = dim.unwrap_or(2);
                let (phi, domain) = match factor.as_str() {
                    "sphere" => (ConformalFactor::Sphere, ChartDomain::Unbounded),
                    "hyperbolic" => (
                        ConformalFactor::Hyperbolic,
                        ChartDomain::Ball { center: vec![0.0; dim], radius: corpus::HYPERBOLIC_CHART_RADIUS },
                    ),
                    "constant" => (
                        ConformalFactor::Constant(constant.ok_or("conformal: factor `constant` needs `constant`")?),
                        ChartDomain::Unbounded,
                    ),
                    other => return Err(format!("unknown conformal factor `{other}`")),
                };
                Metric::new(format!("conformal-{factor}"), dim, MetricKind::Conformal(phi), domain).map_err(|e| e.to_string())
            }
        }
    }
}

impl SubmanifoldSpec {
    pub fn build(&self, name: &str) -> Result<Submanifold, String> {
        Ok(match self {
            SubmanifoldSpec::Circle { radius, center } => {
                Submanifold::new(name, Ellipse { center: *center, a: *radius, b: *radius })
            }
            SubmanifoldSpec::Ellipse { a, b, center } => Submanifold::new(name, Ellipse { center: *center, a: *a, b: *b }),
            SubmanifoldSpec::Equator => corpus::equator(),
            SubmanifoldSpec::XAxis => corpus::x_axis(),
            SubmanifoldSpec::X32 => Submanifold::new(name, X32Curve),
            SubmanifoldSpec::Point { p } => Submanifold::new(name, PointSet { point: p.clone() }),
            SubmanifoldSpec::Line { origin, direction, range } => Submanifold::new(
                name,
                Line { origin: origin.clone(), direction: direction.clone(), range: (range[0], range[1]) },
            ),
            SubmanifoldSpec::Table { points, periodic } => {
                Submanifold::new(name, ParamTable::new(points, *periodic).map_err(|e| e.to_string())?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        for name in ["circle_euclid", "ellipse_cutlocus"] {
            Scenario::parse(bundled(name).unwrap()).unwrap();
        }
    }

    #[test]
    fn missing_metric_kind_is_named() {
        let text = "[metric]\nname = \"E2\"\n[[tasks]]\nid = \"a\"\nop = \"geodesic\"\n";
        let err = Scenario::parse(text).unwrap_err();
        assert!(err.to_string().contains("metric.kind"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = "[metric]\nkind = \"builtin\"\nname = \"E2\"\ncolour = 3\n[[tasks]]\nid = \"a\"\nop = \"geodesic\"\n";
        let err = Scenario::parse(text).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn overrides_replace_defaults() {
        let o = ToleranceOverrides { tol_d: Some(1e-8), ..Default::default() };
        let t = Tolerances::default().with(&o);
        assert_eq!(t.tol_d, 1e-8);
        assert_eq!(t.bracket, Tolerances::default().bracket);
    }
}
