//! Config-driven front end: load a problem description from JSON (or a
//! gallery reference), run verify / identities / classify / sweep, and emit
//! deterministic text, JSON, or CSV reports with meaningful exit codes.
//!
//! Exit codes: 0 success (and --expect met when given), 1 verification
//! failed or expectation unmet, 2 config or input error, 3 numerical
//! failure.

pub mod format;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classifier::{
    classify_detailed, ClassificationVerdict, ClassifyConfig, ClassifyError, DroppedPoint,
};
use crate::expr::{eval_scalar, parse, Expr, ParseError};
use crate::gallery::{self, GalleryEntry, Instance};
use crate::hypersurface::{DomainBox, Immersion};
use crate::soliton::{
    self, Flavor, Geometry, IdentityReport, SolitonError, SolitonPointData, SolitonProblem,
    SolitonReport, Verdict,
};
use crate::tensor::{chart_vars, MetricField};

const MAX_TOTAL_SAMPLES: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Numerical-failure classification for errors bubbling out of a run.
fn numerical_err(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Identities,
    Classify,
    Sweep,
    Gallery,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Identities => "identities",
            Command::Classify => "classify",
            Command::Sweep => "sweep",
            Command::Gallery => "gallery",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Soliton,
    NotSoliton,
    Hyperplane,
    Cone,
    Hypersphere,
}

impl Expectation {
    pub fn name(&self) -> &'static str {
        match self {
            Expectation::Soliton => "soliton",
            Expectation::NotSoliton => "not-soliton",
            Expectation::Hyperplane => "hyperplane",
            Expectation::Cone => "cone",
            Expectation::Hypersphere => "hypersphere",
        }
    }
}

// ---------------------------------------------------------------------------
// Raw (serde) config schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDomainAxis {
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawSoliton {
    #[serde(default)]
    pub flavor: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawTolerances {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol_soliton: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol_minimal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol_umbilic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tol_consistency: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub format: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweepAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

/// The JSON document schema. Everything except mode, dimension, and domain
/// is optional with documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub mode: String,
    pub dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub immersion: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metric: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub potential: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vector_field: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h_function: Option<String>,
    #[serde(default)]
    pub soliton: RawSoliton,
    pub domain: Vec<RawDomainAxis>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exclude: Option<String>,
    #[serde(default)]
    pub tolerances: RawTolerances,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub random_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_jet_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hessian_check: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sweep: Vec<RawSweepAxis>,
    #[serde(default)]
    pub output: RawOutput,
}

// ---------------------------------------------------------------------------
// Validated config
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Hypersurface,
    Intrinsic,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub tol_soliton: f64,
    pub tol_minimal: f64,
    pub tol_lambda: f64,
    pub tol_alpha: f64,
    pub tol_umbilic: f64,
    pub tol_consistency: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_soliton: 1e-7,
            tol_minimal: 1e-8,
            tol_lambda: 1e-7,
            tol_alpha: 1e-8,
            tol_umbilic: 1e-7,
            tol_consistency: 1e-6,
        }
    }
}

impl Tolerances {
    fn classify_config(&self) -> ClassifyConfig {
        ClassifyConfig {
            tol_soliton: self.tol_soliton,
            tol_lambda: self.tol_lambda,
            tol_alpha: self.tol_alpha,
            tol_umbilic: self.tol_umbilic,
            tol_consistency: self.tol_consistency,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

/// A validated run configuration: expressions parsed eagerly, defaults
/// filled, the canonical form hashed.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub mode: Mode,
    pub dimension: usize,
    pub immersion: Option<Vec<Expr>>,
    pub metric: Option<Vec<Expr>>,
    pub potential: Option<Expr>,
    pub vector_field: Option<Vec<Expr>>,
    pub h_function: Option<Expr>,
    pub flavor: Flavor,
    pub domain: Vec<RawDomainAxis>,
    pub exclude: Option<Expr>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub random_samples: Option<usize>,
    pub max_jet_order: usize,
    pub hessian_check: bool,
    pub sweep: Vec<RawSweepAxis>,
    pub output_format: OutputFormat,
    pub output_path: Option<String>,
    pub config_hash: String,
}

fn parse_field(field: &str, text: &str) -> Result<Expr, CliError> {
    parse(text).map_err(|e| match e {
        ParseError::Empty => config_err(format!("{field}: empty expression")),
        other => config_err(format!("{field}: `{text}`: {other}")),
    })
}

fn parse_flavor(raw: &RawSoliton) -> Result<Flavor, CliError> {
    let name = raw.flavor.as_deref().unwrap_or("conformal");
    let flavor = match name {
        "conformal" => Flavor::Conformal,
        "yamabe" => Flavor::Yamabe,
        "almost_yamabe" => Flavor::AlmostYamabe,
        "k_yamabe" => {
            let k = raw.k.ok_or_else(|| {
                config_err("soliton.k: required when soliton.flavor = \"k_yamabe\"")
            })?;
            Flavor::KYamabe(k)
        }
        "h_almost" => Flavor::HAlmost,
        "gradient_conformal" => Flavor::GradientConformal,
        other => {
            return Err(config_err(format!(
                "soliton.flavor: unknown flavor `{other}` (expected conformal, yamabe, \
                 almost_yamabe, k_yamabe, h_almost, or gradient_conformal)"
            )))
        }
    };
    if raw.k.is_some() && !matches!(flavor, Flavor::KYamabe(_)) {
        return Err(config_err(
            "soliton.k: only meaningful with soliton.flavor = \"k_yamabe\"",
        ));
    }
    Ok(flavor)
}

/// Validate a raw config: fill defaults, parse every expression, check the
/// mode-dependent shape, and compute the canonical hash.
pub fn validate_config(mut raw: RawConfig) -> Result<RunConfig, CliError> {
    let mode = match raw.mode.as_str() {
        "hypersurface" => Mode::Hypersurface,
        "intrinsic" => Mode::Intrinsic,
        other => {
            return Err(config_err(format!(
                "mode: `{other}` (expected \"hypersurface\" or \"intrinsic\")"
            )))
        }
    };
    let n = raw.dimension;
    if n < 2 {
        return Err(config_err("dimension: must be at least 2"));
    }
    if n > 6 {
        return Err(config_err("dimension: at most 6 is supported"));
    }
    match mode {
        Mode::Hypersurface => {
            if raw.immersion.is_none() {
                return Err(config_err(
                    "immersion: required when mode = \"hypersurface\"",
                ));
            }
            if raw.metric.is_some() {
                return Err(config_err(
                    "metric: conflicts with mode = \"hypersurface\" (the induced metric is \
                     computed from `immersion`; use mode = \"intrinsic\" for an explicit metric)",
                ));
            }
        }
        Mode::Intrinsic => {
            if raw.metric.is_none() {
                return Err(config_err("metric: required when mode = \"intrinsic\""));
            }
            if raw.immersion.is_some() {
                return Err(config_err(
                    "immersion: conflicts with mode = \"intrinsic\" (an explicit `metric` is \
                     given; use mode = \"hypersurface\" for an immersion)",
                ));
            }
        }
    }
    if raw.domain.len() != n {
        return Err(config_err(format!(
            "domain: expected {n} axes, got {}",
            raw.domain.len()
        )));
    }
    let mut total: usize = 1;
    for (i, axis) in raw.domain.iter().enumerate() {
        if axis.samples < 2 {
            return Err(config_err(format!(
                "domain[{i}].samples: at least 2 samples per variable"
            )));
        }
        if !(axis.min < axis.max) {
            return Err(config_err(format!("domain[{i}]: needs min < max")));
        }
        total = total.saturating_mul(axis.samples);
    }
    if let Some(k) = raw.random_samples {
        total = k;
    }
    if total > MAX_TOTAL_SAMPLES {
        return Err(config_err(format!(
            "domain: total sample count {total} exceeds the maximum {MAX_TOTAL_SAMPLES}"
        )));
    }

    // sweep axes
    let mut sweep_names = Vec::new();
    for (i, axis) in raw.sweep.iter().enumerate() {
        if axis.steps < 1 {
            return Err(config_err(format!("sweep[{i}].steps: at least 1")));
        }
        if axis.steps > 1 && !(axis.min < axis.max) {
            return Err(config_err(format!("sweep[{i}]: needs min < max")));
        }
        let valid_name = !axis.name.is_empty()
            && axis.name.chars().next().unwrap().is_ascii_alphabetic()
            && axis
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid_name {
            return Err(config_err(format!(
                "sweep[{i}].name: `{}` is not a valid identifier",
                axis.name
            )));
        }
        if sweep_names.contains(&axis.name) {
            return Err(config_err(format!(
                "sweep[{i}].name: duplicate parameter `{}`",
                axis.name
            )));
        }
        sweep_names.push(axis.name.clone());
    }
    let chart = chart_vars(n);
    for name in &sweep_names {
        if chart.contains(name) {
            return Err(config_err(format!(
                "sweep: parameter `{name}` collides with a chart variable"
            )));
        }
    }

    // expressions, parsed eagerly; free variables must be chart vars or
    // sweep parameters
    let allowed: Vec<&String> = chart.iter().chain(sweep_names.iter()).collect();
    let check_vars = |field: &str, e: &Expr| -> Result<(), CliError> {
        for v in e.free_vars() {
            if !allowed.iter().any(|a| **a == v) {
                return Err(config_err(format!(
                    "{field}: references `{v}`, which is neither a chart variable \
                     (u1..u{n}) nor a sweep parameter"
                )));
            }
        }
        Ok(())
    };

    let immersion = match &raw.immersion {
        Some(comps) => {
            if comps.len() != n + 1 {
                return Err(config_err(format!(
                    "immersion: expected {} components for a hypersurface in R^{}, got {}",
                    n + 1,
                    n + 1,
                    comps.len()
                )));
            }
            let mut parsed = Vec::new();
            for (i, c) in comps.iter().enumerate() {
                let e = parse_field(&format!("immersion[{i}]"), c)?;
                check_vars(&format!("immersion[{i}]"), &e)?;
                parsed.push(e);
            }
            Some(parsed)
        }
        None => None,
    };
    let metric = match &raw.metric {
        Some(entries) => {
            let expected = n * (n + 1) / 2;
            if entries.len() != expected {
                return Err(config_err(format!(
                    "metric: expected {expected} lower-triangular entries (row-major) for \
                     dimension {n}, got {}",
                    entries.len()
                )));
            }
            let mut parsed = Vec::new();
            for (i, c) in entries.iter().enumerate() {
                let e = parse_field(&format!("metric[{i}]"), c)?;
                check_vars(&format!("metric[{i}]"), &e)?;
                parsed.push(e);
            }
            Some(parsed)
        }
        None => None,
    };
    let potential = match &raw.potential {
        Some(text) => {
            let e = parse_field("potential", text)?;
            check_vars("potential", &e)?;
            Some(e)
        }
        None => None,
    };
    let vector_field = match &raw.vector_field {
        Some(comps) => {
            if comps.len() != n {
                return Err(config_err(format!(
                    "vector_field: expected {n} components, got {}",
                    comps.len()
                )));
            }
            let mut parsed = Vec::new();
            for (i, c) in comps.iter().enumerate() {
                let e = parse_field(&format!("vector_field[{i}]"), c)?;
                check_vars(&format!("vector_field[{i}]"), &e)?;
                parsed.push(e);
            }
            Some(parsed)
        }
        None => None,
    };
    let h_function = match &raw.h_function {
        Some(text) => {
            let e = parse_field("h_function", text)?;
            check_vars("h_function", &e)?;
            Some(e)
        }
        None => None,
    };
    let exclude = match &raw.exclude {
        Some(text) => {
            let e = parse_field("exclude", text)?;
            check_vars("exclude", &e)?;
            Some(e)
        }
        None => None,
    };

    let flavor = parse_flavor(&raw.soliton)?;
    match flavor {
        Flavor::KYamabe(k) => {
            if n < 3 {
                return Err(config_err(
                    "soliton.flavor: k_yamabe requires dimension >= 3",
                ));
            }
            if k == 0 || k > n {
                return Err(config_err(format!(
                    "soliton.k: must satisfy 1 <= k <= {n}, got {k}"
                )));
            }
            if mode == Mode::Intrinsic && potential.is_none() {
                return Err(config_err("potential: required for the k_yamabe flavor"));
            }
        }
        Flavor::GradientConformal => {
            if mode == Mode::Intrinsic && potential.is_none() {
                return Err(config_err(
                    "potential: required for the gradient_conformal flavor",
                ));
            }
        }
        Flavor::HAlmost if h_function.is_none() => {
            return Err(config_err("h_function: required for the h_almost flavor"));
        }
        _ => {}
    }
    if mode == Mode::Intrinsic
        && potential.is_none()
        && vector_field.is_none()
        && !matches!(flavor, Flavor::KYamabe(_) | Flavor::GradientConformal)
    {
        return Err(config_err(
            "intrinsic mode needs a `potential` or a `vector_field` to define the soliton field",
        ));
    }

    let defaults = Tolerances::default();
    let tolerances = Tolerances {
        tol_soliton: raw.tolerances.tol_soliton.unwrap_or(defaults.tol_soliton),
        tol_minimal: raw.tolerances.tol_minimal.unwrap_or(defaults.tol_minimal),
        tol_lambda: raw.tolerances.tol_lambda.unwrap_or(defaults.tol_lambda),
        tol_alpha: raw.tolerances.tol_alpha.unwrap_or(defaults.tol_alpha),
        tol_umbilic: raw.tolerances.tol_umbilic.unwrap_or(defaults.tol_umbilic),
        tol_consistency: raw
            .tolerances
            .tol_consistency
            .unwrap_or(defaults.tol_consistency),
    };
    for (name, v) in [
        ("tol_soliton", tolerances.tol_soliton),
        ("tol_minimal", tolerances.tol_minimal),
        ("tol_lambda", tolerances.tol_lambda),
        ("tol_alpha", tolerances.tol_alpha),
        ("tol_umbilic", tolerances.tol_umbilic),
        ("tol_consistency", tolerances.tol_consistency),
    ] {
        if !(v > 0.0) {
            return Err(config_err(format!("tolerances.{name}: must be positive")));
        }
    }

    let output_format = match raw.output.format.as_deref() {
        None | Some("text") => OutputFormat::Text,
        Some("json") => OutputFormat::Json,
        Some("csv") => OutputFormat::Csv,
        Some(other) => {
            return Err(config_err(format!(
                "output.format: `{other}` (expected text, json, or csv)"
            )))
        }
    };

    // canonical form for hashing: fill the defaults back into the raw doc
    raw.soliton.flavor = Some(raw.soliton.flavor.unwrap_or_else(|| "conformal".into()));
    raw.tolerances = RawTolerances {
        tol_soliton: Some(tolerances.tol_soliton),
        tol_minimal: Some(tolerances.tol_minimal),
        tol_lambda: Some(tolerances.tol_lambda),
        tol_alpha: Some(tolerances.tol_alpha),
        tol_umbilic: Some(tolerances.tol_umbilic),
        tol_consistency: Some(tolerances.tol_consistency),
    };
    raw.seed = Some(raw.seed.unwrap_or(0));
    raw.max_jet_order = Some(raw.max_jet_order.unwrap_or(4));
    let canonical =
        format::to_json(&raw).map_err(|e| config_err(format!("canonicalizing config: {e}")))?;
    let config_hash = hex_digest(canonical.as_bytes());

    Ok(RunConfig {
        mode,
        dimension: n,
        immersion,
        metric,
        potential,
        vector_field,
        h_function,
        flavor,
        domain: raw.domain.clone(),
        exclude,
        tolerances,
        seed: raw.seed.unwrap_or(0),
        random_samples: raw.random_samples,
        max_jet_order: raw.max_jet_order.unwrap_or(4),
        hessian_check: raw.hessian_check.unwrap_or(false),
        sweep: raw.sweep.clone(),
        output_format,
        output_path: raw.output.path.clone(),
        config_hash,
        raw,
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Load and validate a config from a JSON string.
pub fn load_config_str(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| config_err(format!("parsing config JSON: {e}")))?;
    validate_config(raw)
}

/// Load a config from a path, `-` for stdin, or a `gallery:<id>(...)`
/// reference.
pub fn load_config(source: &str) -> Result<RunConfig, CliError> {
    if let Some(rest) = source.strip_prefix("gallery:") {
        return gallery_config(rest);
    }
    let text = if source == "-" {
        use std::io::Read;
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(Path::new(source))?
    };
    load_config_str(&text)
}

/// Parse `<id>` or `<id>(name=value, ...)` and expand the gallery entry
/// into a full config.
pub fn gallery_config(spec: &str) -> Result<RunConfig, CliError> {
    let (id, params) = parse_gallery_spec(spec)?;
    let instance = gallery::instantiate(&id, &params).map_err(|e| config_err(e.to_string()))?;
    let raw = instance_to_raw(&instance);
    validate_config(raw)
}

pub fn parse_gallery_spec(spec: &str) -> Result<(String, BTreeMap<String, f64>), CliError> {
    let spec = spec.trim();
    let (id, rest) = match spec.find('(') {
        Some(open) => {
            if !spec.ends_with(')') {
                return Err(config_err(format!(
                    "gallery reference `{spec}`: missing closing parenthesis"
                )));
            }
            (&spec[..open], Some(&spec[open + 1..spec.len() - 1]))
        }
        None => (spec, None),
    };
    let mut params = BTreeMap::new();
    if let Some(args) = rest {
        for item in args.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (name, value) = item.split_once('=').ok_or_else(|| {
                config_err(format!("gallery parameter `{item}`: expected name=value"))
            })?;
            let v: f64 = value.trim().parse().map_err(|_| {
                config_err(format!(
                    "gallery parameter `{name}`: `{value}` is not a number"
                ))
            })?;
            params.insert(name.trim().to_string(), v);
        }
    }
    Ok((id.to_string(), params))
}

/// Expand a gallery instance into the equivalent raw config document.
pub fn instance_to_raw(inst: &Instance) -> RawConfig {
    let (mode, immersion, metric, potential, vector_field, exclude) = match &inst.geometry {
        Geometry::Surface(s) => (
            "hypersurface".to_string(),
            Some(s.components().iter().map(|e| e.to_string()).collect()),
            None,
            None,
            None,
            s.exclude().map(|e| e.to_string()),
        ),
        Geometry::Intrinsic {
            metric,
            potential,
            vector,
        } => {
            let n = metric.dim();
            let mut lower = Vec::new();
            for i in 0..n {
                for j in 0..=i {
                    lower.push(metric.component(i, j).to_string());
                }
            }
            (
                "intrinsic".to_string(),
                None,
                Some(lower),
                potential.as_ref().map(|e| e.to_string()),
                vector
                    .as_ref()
                    .map(|v| v.iter().map(|e| e.to_string()).collect()),
                None,
            )
        }
    };
    let (flavor, k) = match inst.flavor {
        Flavor::KYamabe(k) => ("k_yamabe".to_string(), Some(k)),
        other => (other.name(), None),
    };
    RawConfig {
        mode,
        dimension: inst.dim,
        immersion,
        metric,
        potential,
        vector_field,
        h_function: inst.h_function.as_ref().map(|e| e.to_string()),
        soliton: RawSoliton {
            flavor: Some(flavor),
            k,
        },
        domain: inst
            .domain
            .iter()
            .zip(&inst.samples)
            .map(|(b, &samples)| RawDomainAxis {
                min: b.min,
                max: b.max,
                samples,
            })
            .collect(),
        exclude,
        tolerances: RawTolerances::default(),
        seed: None,
        random_samples: None,
        max_jet_order: None,
        hessian_check: Some(inst.id.starts_with("hessian_r2")),
        sweep: Vec::new(),
        output: RawOutput::default(),
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SkippedIdentity {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sup_residual: Option<f64>,
    pub verdict: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Verify(SolitonReport),
    Identities {
        reports: Vec<IdentityReport>,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        skipped: Vec<SkippedIdentity>,
    },
    Classify {
        verdict: ClassificationVerdict,
        points: Vec<SolitonPointData>,
    },
    Sweep {
        rows: Vec<SweepRow>,
    },
    GalleryListing {
        entries: Vec<GalleryEntry>,
    },
    GalleryInstance {
        config: RawConfig,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    pub payload: Payload,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<DroppedPoint>,
    /// wall-clock is for the text renderer only: JSON and CSV stay
    /// byte-identical across runs of the same config
    #[serde(skip)]
    pub wall_ms: f64,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub exit_code: i32,
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

fn build_geometry(
    cfg: &RunConfig,
    exprs_override: Option<&SubstitutedExprs>,
) -> Result<Geometry, CliError> {
    let pick = |base: &Option<Vec<Expr>>, over: Option<&Vec<Expr>>| -> Option<Vec<Expr>> {
        over.cloned().or_else(|| base.clone())
    };
    match cfg.mode {
        Mode::Hypersurface => {
            let comps = pick(
                &cfg.immersion,
                exprs_override
                    .map(|o| &o.immersion)
                    .and_then(|v| v.as_ref()),
            )
            .expect("validated hypersurface config has an immersion");
            let domain: Vec<DomainBox> = cfg
                .domain
                .iter()
                .map(|a| DomainBox {
                    min: a.min,
                    max: a.max,
                })
                .collect();
            let exclude = exprs_override
                .map(|o| o.exclude.clone())
                .unwrap_or_else(|| cfg.exclude.clone());
            let immersion = Immersion::new(cfg.dimension, comps, domain, exclude)
                .map_err(|e| config_err(e.to_string()))?;
            Ok(Geometry::Surface(immersion))
        }
        Mode::Intrinsic => {
            let entries = pick(
                &cfg.metric,
                exprs_override.map(|o| &o.metric).and_then(|v| v.as_ref()),
            )
            .expect("validated intrinsic config has a metric");
            let metric = MetricField::from_lower_triangular(cfg.dimension, entries)
                .map_err(|e| config_err(e.to_string()))?;
            let potential = exprs_override
                .map(|o| o.potential.clone())
                .unwrap_or_else(|| cfg.potential.clone());
            let vector = exprs_override
                .map(|o| o.vector_field.clone())
                .unwrap_or_else(|| cfg.vector_field.clone());
            Ok(Geometry::Intrinsic {
                metric,
                potential,
                vector,
            })
        }
    }
}

/// Sample points plus the list of points dropped at sampling time
/// (exclusion predicate or domain trouble), with reasons.
fn sample_plan(
    cfg: &RunConfig,
    geometry: &Geometry,
) -> Result<(Vec<Vec<f64>>, Vec<DroppedPoint>), CliError> {
    let domain: Vec<DomainBox> = cfg
        .domain
        .iter()
        .map(|a| DomainBox {
            min: a.min,
            max: a.max,
        })
        .collect();
    let raw: Vec<Vec<f64>> = match cfg.random_samples {
        None => {
            let samples: Vec<usize> = cfg.domain.iter().map(|a| a.samples).collect();
            gallery::grid_points(&domain, &samples)
        }
        Some(k) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..k)
                .map(|_| {
                    domain
                        .iter()
                        .map(|b| rng.random_range(b.min..=b.max))
                        .collect()
                })
                .collect()
        }
    };
    let mut kept = Vec::with_capacity(raw.len());
    let mut dropped = Vec::new();
    match geometry {
        Geometry::Surface(s) => {
            for p in raw {
                match s.check_point(&p) {
                    Ok(()) => kept.push(p),
                    Err(e) => dropped.push(DroppedPoint {
                        point: p,
                        reason: e.to_string(),
                    }),
                }
            }
        }
        Geometry::Intrinsic { metric, .. } => {
            if let Some(pred) = &cfg.exclude {
                let vars = metric.vars().to_vec();
                for p in raw {
                    let binds: Vec<(String, f64)> =
                        vars.iter().cloned().zip(p.iter().copied()).collect();
                    match eval_scalar(pred, &binds) {
                        Ok(v) if v > 0.0 => kept.push(p),
                        Ok(_) => dropped.push(DroppedPoint {
                            point: p,
                            reason: "excluded by the chart predicate".into(),
                        }),
                        Err(e) => dropped.push(DroppedPoint {
                            point: p,
                            reason: e.to_string(),
                        }),
                    }
                }
            } else {
                kept = raw;
            }
        }
    }
    if kept.is_empty() {
        return Err(config_err(
            "sample plan is empty after applying the exclusion predicate",
        ));
    }
    Ok((kept, dropped))
}

fn map_soliton_err(e: SolitonError) -> CliError {
    match e {
        SolitonError::EmptySamplePlan => config_err("empty sample plan"),
        SolitonError::MissingInput { flavor, what } => {
            config_err(format!("{flavor} requires {what}"))
        }
        SolitonError::InvalidH { reason } => config_err(format!("h_function: {reason}")),
        SolitonError::KYamabeDimension => config_err("k_yamabe requires dimension >= 3"),
        SolitonError::KOutOfRange { k, n } => {
            config_err(format!("sigma_{k} undefined for dimension {n}"))
        }
        other => numerical_err(other),
    }
}

fn verify_payload(
    cfg: &RunConfig,
    geometry: Geometry,
    points: Vec<Vec<f64>>,
) -> Result<SolitonReport, CliError> {
    let prob = SolitonProblem {
        geometry,
        flavor: cfg.flavor,
        h_function: cfg.h_function.clone(),
        points,
        tol: cfg.tolerances.tol_soliton,
    };
    soliton::check_flavored(&prob).map_err(map_soliton_err)
}

fn identities_payload(
    cfg: &RunConfig,
    geometry: &Geometry,
    points: &[Vec<f64>],
) -> Result<(Vec<IdentityReport>, Vec<SkippedIdentity>), CliError> {
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    let tol = cfg.tolerances.tol_soliton;
    match geometry {
        Geometry::Surface(s) => {
            reports.push(
                soliton::identity_s3(s, points, gallery::default_identity_tol("s3"))
                    .map_err(map_soliton_err)?,
            );
            reports.push(soliton::identity_ensays(s, points, tol).map_err(map_soliton_err)?);
            reports.push(
                soliton::identity_potential(s, points, gallery::default_identity_tol("potential"))
                    .map_err(map_soliton_err)?,
            );
            match soliton::check_minimal_phi1(s, points, cfg.tolerances.tol_minimal, 1e-8) {
                Ok(rep) => reports.push(rep),
                Err(SolitonError::NotApplicable { reason }) => skipped.push(SkippedIdentity {
                    id: "minimal_phi1".into(),
                    reason,
                }),
                Err(e) => return Err(map_soliton_err(e)),
            }
            let metric = s.induced_metric();
            let f = soliton::half_norm_squared(s);
            match soliton::identity_f1(&metric, &f, points, gallery::default_identity_tol("f1")) {
                Ok(rep) => reports.push(rep),
                Err(SolitonError::NotApplicable { reason }) => skipped.push(SkippedIdentity {
                    id: "f1".into(),
                    reason,
                }),
                Err(e) => return Err(map_soliton_err(e)),
            }
        }
        Geometry::Intrinsic {
            metric,
            potential,
            vector,
        } => {
            if let Some(v) = vector {
                reports.push(
                    soliton::check_concurrent(
                        metric,
                        v,
                        points,
                        gallery::default_identity_tol("concurrent"),
                    )
                    .map_err(map_soliton_err)?,
                );
            }
            if let Some(f) = potential {
                match soliton::identity_f1(metric, f, points, gallery::default_identity_tol("f1")) {
                    Ok(rep) => reports.push(rep),
                    Err(SolitonError::NotApplicable { reason }) => skipped.push(SkippedIdentity {
                        id: "f1".into(),
                        reason,
                    }),
                    Err(e) => return Err(map_soliton_err(e)),
                }
                if cfg.hessian_check {
                    let (flat, lc) = soliton::check_hessian_conventions(metric, f, points, tol)
                        .map_err(map_soliton_err)?;
                    reports.push(flat);
                    reports.push(lc);
                }
            }
            if potential.is_none() && vector.is_none() {
                return Err(config_err(
                    "identities on an intrinsic problem need a potential or a vector_field",
                ));
            }
        }
    }
    Ok((reports, skipped))
}

fn sweep_payload(cfg: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    if cfg.sweep.is_empty() {
        return Err(config_err(
            "sweep: the sweep command needs a non-empty `sweep` array in the config",
        ));
    }
    // cartesian product of the sweep grids
    let axes: Vec<Vec<f64>> = cfg
        .sweep
        .iter()
        .map(|a| {
            if a.steps == 1 {
                vec![a.min]
            } else {
                (0..a.steps)
                    .map(|i| a.min + (a.max - a.min) * i as f64 / (a.steps - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let mut cells: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new()];
    for (axis, values) in cfg.sweep.iter().zip(&axes) {
        let mut next = Vec::with_capacity(cells.len() * values.len());
        for cell in &cells {
            for v in values {
                let mut c = cell.clone();
                c.insert(axis.name.clone(), *v);
                next.push(c);
            }
        }
        cells = next;
    }

    use rayon::prelude::*;
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|cell| {
            let run = || -> Result<SolitonReport, CliError> {
                let exprs = substitute_all(cfg, cell);
                let mut sub_cfg = cfg.clone();
                sub_cfg.h_function = exprs.h_function.clone();
                sub_cfg.exclude = exprs.exclude.clone();
                let geometry = build_geometry(cfg, Some(&exprs))?;
                let (points, _) = sample_plan(&sub_cfg, &geometry)?;
                verify_payload(&sub_cfg, geometry, points)
            };
            match run() {
                Ok(rep) => SweepRow {
                    params: cell.clone(),
                    sup_residual: Some(rep.sup_residual),
                    verdict: match rep.verdict {
                        Verdict::Soliton => "soliton".into(),
                        Verdict::NotSoliton => "not_soliton".into(),
                    },
                },
                Err(e) => SweepRow {
                    params: cell.clone(),
                    sup_residual: None,
                    verdict: format!("error: {e}"),
                },
            }
        })
        .collect();

    let mut rows = rows;
    rows.sort_by(|a, b| match (a.sup_residual, b.sup_residual) {
        (Some(x), Some(y)) => x
            .partial_cmp(&y)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| compare_params(&a.params, &b.params)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => compare_params(&a.params, &b.params),
    });
    Ok(rows)
}

fn compare_params(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> std::cmp::Ordering {
    for ((_, x), (_, y)) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(other) => return other,
        }
    }
    std::cmp::Ordering::Equal
}

struct SubstitutedExprs {
    immersion: Option<Vec<Expr>>,
    metric: Option<Vec<Expr>>,
    potential: Option<Expr>,
    vector_field: Option<Vec<Expr>>,
    h_function: Option<Expr>,
    exclude: Option<Expr>,
}

fn substitute_all(cfg: &RunConfig, cell: &BTreeMap<String, f64>) -> SubstitutedExprs {
    let subst = |e: &Expr| -> Expr {
        let mut out = e.clone();
        for (name, value) in cell {
            out = out.substitute(name, *value);
        }
        out
    };
    SubstitutedExprs {
        immersion: cfg
            .immersion
            .as_ref()
            .map(|v| v.iter().map(&subst).collect()),
        metric: cfg.metric.as_ref().map(|v| v.iter().map(&subst).collect()),
        potential: cfg.potential.as_ref().map(&subst),
        vector_field: cfg
            .vector_field
            .as_ref()
            .map(|v| v.iter().map(&subst).collect()),
        h_function: cfg.h_function.as_ref().map(&subst),
        exclude: cfg.exclude.as_ref().map(&subst),
    }
}

/// The gallery listing report (the `gallery` command without a config).
pub fn gallery_listing_report() -> RunReport {
    RunReport {
        tool: "solitonscope",
        version: env!("CARGO_PKG_VERSION"),
        command: "gallery".into(),
        config_hash: String::new(),
        expect: None,
        payload: Payload::GalleryListing {
            entries: gallery::list_entries(),
        },
        dropped: Vec::new(),
        wall_ms: 0.0,
    }
}

/// Execute a command against a validated config.
pub fn execute(
    command: Command,
    cfg: &RunConfig,
    expect: Option<Expectation>,
) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    if !cfg.sweep.is_empty() && command != Command::Sweep && command != Command::Gallery {
        return Err(config_err(
            "config declares sweep parameters; use the sweep command (expressions would \
             otherwise contain unbound parameters)",
        ));
    }
    let (payload, dropped) = match command {
        Command::Verify => {
            let geometry = build_geometry(cfg, None)?;
            let (points, dropped) = sample_plan(cfg, &geometry)?;
            let rep = verify_payload(cfg, geometry, points)?;
            (Payload::Verify(rep), dropped)
        }
        Command::Identities => {
            let geometry = build_geometry(cfg, None)?;
            let (points, dropped) = sample_plan(cfg, &geometry)?;
            let (reports, skipped) = identities_payload(cfg, &geometry, &points)?;
            (Payload::Identities { reports, skipped }, dropped)
        }
        Command::Classify => {
            let geometry = build_geometry(cfg, None)?;
            let Geometry::Surface(s) = &geometry else {
                return Err(config_err(
                    "classify requires mode = \"hypersurface\" (the theorem classifies \
                     hypersurfaces)",
                ));
            };
            let (points, mut dropped) = sample_plan(cfg, &geometry)?;
            let (verdict, rows, eval_dropped) =
                classify_detailed(s, &points, &cfg.tolerances.classify_config()).map_err(|e| {
                    match e {
                        ClassifyError::EmptySamplePlan => config_err("empty sample plan"),
                        other => numerical_err(other),
                    }
                })?;
            dropped.extend(eval_dropped);
            (
                Payload::Classify {
                    verdict,
                    points: rows,
                },
                dropped,
            )
        }
        Command::Sweep => (
            Payload::Sweep {
                rows: sweep_payload(cfg)?,
            },
            Vec::new(),
        ),
        Command::Gallery => (
            Payload::GalleryInstance {
                config: cfg.raw.clone(),
            },
            Vec::new(),
        ),
    };

    let exit_code = exit_code_for(&payload, expect)?;
    Ok(RunOutcome {
        report: RunReport {
            tool: "solitonscope",
            version: env!("CARGO_PKG_VERSION"),
            command: command.name().into(),
            config_hash: cfg.config_hash.clone(),
            expect: expect.map(|e| e.name().into()),
            payload,
            dropped,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        },
        exit_code,
    })
}

fn exit_code_for(payload: &Payload, expect: Option<Expectation>) -> Result<i32, CliError> {
    Ok(match payload {
        Payload::Verify(rep) => {
            let is_soliton = rep.verdict == Verdict::Soliton;
            match expect {
                None => {
                    if is_soliton {
                        0
                    } else {
                        1
                    }
                }
                Some(Expectation::Soliton) => {
                    if is_soliton {
                        0
                    } else {
                        1
                    }
                }
                Some(Expectation::NotSoliton) => {
                    if is_soliton {
                        1
                    } else {
                        0
                    }
                }
                Some(other) => {
                    return Err(config_err(format!(
                        "--expect {}: not meaningful for verify (use soliton or not-soliton)",
                        other.name()
                    )))
                }
            }
        }
        Payload::Identities { reports, .. } => {
            if expect.is_some() {
                return Err(config_err(
                    "--expect is not meaningful for the identities command",
                ));
            }
            if reports.iter().all(|r| r.pass) {
                0
            } else {
                1
            }
        }
        Payload::Classify { verdict, .. } => {
            let tag = verdict.tag.name();
            match expect {
                None => 0,
                Some(Expectation::Soliton) => {
                    if matches!(tag, "hyperplane" | "cone" | "hypersphere") {
                        0
                    } else {
                        1
                    }
                }
                Some(Expectation::NotSoliton) => {
                    if tag == "not_soliton" {
                        0
                    } else {
                        1
                    }
                }
                Some(Expectation::Hyperplane) => {
                    if tag == "hyperplane" {
                        0
                    } else {
                        1
                    }
                }
                Some(Expectation::Cone) => {
                    if tag == "cone" {
                        0
                    } else {
                        1
                    }
                }
                Some(Expectation::Hypersphere) => {
                    if tag == "hypersphere" {
                        0
                    } else {
                        1
                    }
                }
            }
        }
        Payload::Sweep { .. }
        | Payload::GalleryListing { .. }
        | Payload::GalleryInstance { .. } => {
            if expect.is_some() {
                return Err(config_err("--expect is not meaningful for this command"));
            }
            0
        }
    })
}

/// Render a report in the given format.
pub fn render(report: &RunReport, fmt: OutputFormat) -> Result<String, CliError> {
    Ok(match fmt {
        OutputFormat::Json => format::to_json(report)
            .map_err(|e| CliError::Config(format!("serializing report: {e}")))?,
        OutputFormat::Csv => format::to_csv(report),
        OutputFormat::Text => format::to_text(report),
    })
}
