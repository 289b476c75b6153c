//! Strict JSON configurations for the subcommands.
//!
//! Every document carries `schema_version`; unknown keys are rejected so a
//! misspelt option cannot silently fall back to a default.

use anisobbm::descriptor::{BodyDescriptor, FieldDescriptor, PotentialDescriptor, RegionDescriptor};
use anisobbm::limit::{Schedule, Study, StudyFunctional};
use anisobbm::rng::derive_seed;
use anisobbm::{ConvexBody, IntegrationBudget, MomentMethod, OuterScheme};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
}

/// Line of the first occurrence of `"key"` in the document, or 1.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
}

fn invalid_at(text: &str, key: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid { line: line_of(text, key), msg: format!("{key}: {msg}") }
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

/// Parses a configuration, checking the schema version before the body so
/// version mismatches get their own message.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let syntax = |e: serde_json::Error| ConfigError::Syntax { line: e.line(), column: e.column(), msg: e.to_string() };
    let probe: serde_json::Value = serde_json::from_str(text).map_err(syntax)?;
    let version: VersionProbe = serde_json::from_value(probe).map_err(syntax)?;
    match version.schema_version {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(invalid_at(text, "schema_version", format!("unsupported version {v}"))),
        None => return Err(ConfigError::Invalid { line: 1, msg: "missing schema_version".into() }),
    }
    serde_json::from_str(text).map_err(syntax)
}

pub fn read(path: &std::path::Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })
}

/// A vector entry: a real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    pub fn value(self) -> Complex64 {
        match self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

fn quadrature_method() -> MomentMethod {
    MomentMethod::SphereQuadrature { nodes: 2048 }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub schema_version: u32,
    pub body: BodyDescriptor,
    pub p: f64,
    #[serde(default = "quadrature_method")]
    pub method: MomentMethod,
    pub vectors: Vec<Vec<Entry>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub struct Norms {
    pub body: ConvexBody,
    pub p: f64,
    pub method: MomentMethod,
    pub vectors: Vec<Vec<Complex64>>,
}

impl NormsConfig {
    pub fn validate(&self, text: &str, seed: Option<u64>) -> Result<Norms, ConfigError> {
        let body = self.body.build().map_err(|e| invalid_at(text, "body", e))?;
        anisobbm::norms::check_p(self.p).map_err(|e| invalid_at(text, "p", e))?;
        let mut method = self.method.clone();
        if let (Some(s), MomentMethod::BodyMonteCarlo { seed, .. }) = (seed.or(self.seed), &mut method) {
            *seed = derive_seed(s, "norms");
        }
        anisobbm::MomentNormEvaluator::new(body.clone(), self.p, MomentMethod::SphereQuadrature { nodes: 8 })
            .map_err(|e| invalid_at(text, "p", e))?;
        if let MomentMethod::BodyMonteCarlo { samples, .. } = method {
            if samples < 2 {
                return Err(invalid_at(text, "method", "Monte Carlo needs at least 2 samples"));
            }
        }
        if let MomentMethod::SphereQuadrature { nodes } = method {
            if nodes < 8 {
                return Err(invalid_at(text, "method", "sphere quadrature needs at least 8 nodes"));
            }
        }
        if self.vectors.is_empty() {
            return Err(invalid_at(text, "vectors", "at least one vector is required"));
        }
        let vectors: Vec<Vec<Complex64>> =
            self.vectors.iter().map(|v| v.iter().map(|e| e.value()).collect()).collect();
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != body.dim() {
                return Err(invalid_at(text, "vectors", format!("vector {i} has {} entries, body has dimension {}", v.len(), body.dim())));
            }
            if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(invalid_at(text, "vectors", format!("vector {i} is not finite")));
            }
        }
        Ok(Norms { body, p: self.p, method, vectors })
    }
}

fn three() -> f64 {
    3.0
}

fn id2_vectors() -> usize {
    100
}

fn id2_samples() -> usize {
    200_000
}

fn id2_nodes() -> usize {
    4096
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckId2Config {
    pub schema_version: u32,
    pub bodies: Vec<BodyDescriptor>,
    pub p_values: Vec<f64>,
    #[serde(default = "id2_vectors")]
    pub vectors: usize,
    #[serde(default = "id2_samples")]
    pub samples: usize,
    #[serde(default = "id2_nodes")]
    pub sphere_nodes: usize,
    /// Allowed gap in units of the combined error estimate.
    #[serde(default = "three")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
}

pub struct CheckId2 {
    pub bodies: Vec<(String, ConvexBody)>,
    pub p_values: Vec<f64>,
    pub vectors: usize,
    pub samples: usize,
    pub sphere_nodes: usize,
    pub tolerance: f64,
    pub seed: u64,
}

/// Short label for a body descriptor.
pub fn body_label(d: &BodyDescriptor) -> String {
    match d {
        BodyDescriptor::Ball { dim, .. } => format!("ball{dim}"),
        BodyDescriptor::Cube { dim, .. } => format!("cube{dim}"),
        BodyDescriptor::Ellipse { axes } => format!("ellipse{}", axes.len()),
        BodyDescriptor::Ellipsoid { dim, .. } => format!("ellipsoid{dim}"),
        BodyDescriptor::RegularPolygon { sides, .. } => format!("polygon{sides}"),
        BodyDescriptor::Polytope { normals, .. } => format!("polytope{}", normals.first().map_or(0, Vec::len)),
        BodyDescriptor::LqBall { dim, q } => format!("l{q}ball{dim}"),
    }
}

impl CheckId2Config {
    pub fn validate(&self, text: &str, seed: Option<u64>) -> Result<CheckId2, ConfigError> {
        if self.bodies.is_empty() {
            return Err(invalid_at(text, "bodies", "at least one body is required"));
        }
        let mut bodies = Vec::new();
        for d in &self.bodies {
            bodies.push((body_label(d), d.build().map_err(|e| invalid_at(text, "bodies", e))?));
        }
        if self.p_values.is_empty() {
            return Err(invalid_at(text, "p_values", "at least one exponent is required"));
        }
        for &p in &self.p_values {
            anisobbm::norms::check_p(p).map_err(|e| invalid_at(text, "p_values", e))?;
        }
        if self.vectors == 0 {
            return Err(invalid_at(text, "vectors", "must be positive"));
        }
        if self.samples < 2 {
            return Err(invalid_at(text, "samples", "at least 2 samples are required"));
        }
        if self.sphere_nodes < 8 {
            return Err(invalid_at(text, "sphere_nodes", "at least 8 nodes are required"));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(invalid_at(text, "tolerance", "must be finite and nonnegative"));
        }
        Ok(CheckId2 {
            bodies,
            p_values: self.p_values.clone(),
            vectors: self.vectors,
            samples: self.samples,
            sphere_nodes: self.sphere_nodes,
            tolerance: self.tolerance,
            seed: seed.unwrap_or(self.seed),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitStudyConfig {
    pub schema_version: u32,
    pub functional: StudyFunctional,
    pub p: f64,
    pub body: BodyDescriptor,
    pub field: FieldDescriptor,
    #[serde(default)]
    pub potential: Option<PotentialDescriptor>,
    pub schedule: Schedule,
    #[serde(default)]
    pub budget: Option<IntegrationBudget>,
    #[serde(default)]
    pub scale_samples: bool,
    pub tolerance: f64,
    /// Reseeds every random component of the budget.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Applies the master seed: outer Monte Carlo samples and random sphere
/// rules get independent derived seeds.
pub fn seeded_budget(budget: &IntegrationBudget, seed: u64) -> IntegrationBudget {
    let mut b = budget.clone();
    b.seed = derive_seed(seed, "sphere");
    if let OuterScheme::MonteCarlo { seed: s, .. } = &mut b.outer {
        *s = derive_seed(seed, "outer");
    }
    b
}

impl LimitStudyConfig {
    pub fn validate(&self, text: &str, seed: Option<u64>) -> Result<Study, ConfigError> {
        let mut study = Study {
            functional: self.functional,
            p: self.p,
            body: self.body.clone(),
            field: self.field.clone(),
            potential: self.potential.clone(),
            schedule: self.schedule.clone(),
            budget: self.budget.clone(),
            scale_samples: self.scale_samples,
            tolerance: self.tolerance,
        };
        if let Some(s) = seed.or(self.seed) {
            let field = study.field.build().map_err(|e| invalid_at(text, "field", e))?;
            let base = study.budget.clone().unwrap_or_else(|| IntegrationBudget::for_field(&field));
            study.budget = Some(seeded_budget(&base, s));
        }
        study.validate().map_err(|e| {
            let key = match e {
                anisobbm::Error::DimensionMismatch { .. } => "field",
                _ if e.to_string().contains("schedule") => "schedule",
                _ if e.to_string().contains("tolerance") => "tolerance",
                _ => "functional",
            };
            invalid_at(text, key, e)
        })?;
        Ok(study)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerimeterConfig {
    pub schema_version: u32,
    pub region: RegionDescriptor,
    pub body: BodyDescriptor,
    /// Mollification levels at which to report the smoothed total variation.
    #[serde(default)]
    pub mollify: Vec<u32>,
    #[serde(default)]
    pub grid: Option<OuterScheme>,
}

impl PerimeterConfig {
    pub fn validate(&self, text: &str) -> Result<(anisobbm::fields::Region, ConvexBody), ConfigError> {
        let region = self.region.build().map_err(|e| invalid_at(text, "region", e))?;
        let body = self.body.build().map_err(|e| invalid_at(text, "body", e))?;
        if region.dim() != body.dim() {
            return Err(invalid_at(text, "body", format!("dimension {} does not match the region's {}", body.dim(), region.dim())));
        }
        if self.mollify.contains(&0) {
            return Err(invalid_at(text, "mollify", "levels must be positive"));
        }
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| invalid_at(text, "grid", e))?;
        }
        Ok((region, body))
    }
}
