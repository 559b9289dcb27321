//! Built-in example geometries with parameters, safe chart domains, and
//! expected outcomes. The gallery doubles as the regression corpus: every
//! entry instantiated at its defaults must pass its own expected checks
//! under default tolerances, and the CLI addresses entries as
//! `gallery:<id>` or `gallery:<id>(param=value,...)`.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{parse, Expr};
use crate::hypersurface::{DomainBox, Immersion};
use crate::soliton::{Flavor, Geometry};
use crate::tensor::MetricField;

#[derive(Debug, Error)]
pub enum GalleryError {
    #[error("unknown gallery entry `{id}`")]
    UnknownId { id: String },
    #[error("entry `{entry}` has no parameter `{name}`")]
    UnknownParam { entry: String, name: String },
    #[error("entry `{entry}`, parameter `{param}`: {message}")]
    ConstraintViolation {
        entry: String,
        param: String,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Immersion,
    Intrinsic,
}

/// One named parameter with its default and constraints.
#[derive(Debug, Clone, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    pub integer: bool,
}

impl ParamSpec {
    const fn free(name: &'static str, default: f64) -> Self {
        ParamSpec {
            name,
            default,
            min: None,
            max: None,
            integer: false,
        }
    }

    const fn dimension(name: &'static str, default: f64) -> Self {
        ParamSpec {
            name,
            default,
            min: Some(2.0),
            max: Some(4.0),
            integer: true,
        }
    }
}

/// A labeled outcome the entry is expected to produce at its defaults.
#[derive(Debug, Clone, Serialize)]
pub struct Expected {
    #[serde(flatten)]
    pub check: ExpectedCheck,
    /// where the expectation comes from (closed form, oracle agreement, ...)
    pub provenance: &'static str,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum ExpectedCheck {
    /// classify() returns this tag at the defaults
    Classify { tag: &'static str },
    /// check_flavored() returns this verdict
    Verify { flavor: Flavor, soliton: bool },
    /// the named identity report has this pass flag
    Identity { id: &'static str, pass: bool },
}

#[derive(Debug, Clone, Serialize)]
pub struct GalleryEntry {
    pub id: &'static str,
    pub kind: EntryKind,
    pub description: &'static str,
    pub params: Vec<ParamSpec>,
    pub expected: Vec<Expected>,
}

/// A fully bound instance ready for sampling and checking.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub kind: EntryKind,
    pub dim: usize,
    pub geometry: Geometry,
    pub flavor: Flavor,
    pub h_function: Option<Expr>,
    pub domain: Vec<DomainBox>,
    pub samples: Vec<usize>,
}

impl Instance {
    /// The default grid sample plan over the chart domain, honoring the
    /// immersion's exclusion predicate when one exists.
    pub fn sample_points(&self) -> Vec<Vec<f64>> {
        let raw = grid_points(&self.domain, &self.samples);
        match &self.geometry {
            Geometry::Surface(s) => raw
                .into_iter()
                .filter(|p| s.check_point(p).is_ok())
                .collect(),
            Geometry::Intrinsic { .. } => raw,
        }
    }
}

/// Inclusive regular grid over the boxes; the last axis varies fastest.
pub fn grid_points(domain: &[DomainBox], samples: &[usize]) -> Vec<Vec<f64>> {
    assert_eq!(domain.len(), samples.len());
    let axes: Vec<Vec<f64>> = domain
        .iter()
        .zip(samples)
        .map(|(b, &count)| {
            assert!(count >= 2, "at least two samples per axis");
            (0..count)
                .map(|i| b.min + (b.max - b.min) * i as f64 / (count - 1) as f64)
                .collect()
        })
        .collect();
    let total: usize = samples.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; domain.len()];
    loop {
        out.push(idx.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect());
        // odometer increment, last axis fastest
        let mut axis = domain.len();
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < samples[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

fn fmt_num(v: f64) -> String {
    format!("({v})")
}

/// The registry, in the deterministic listing order.
pub fn list_entries() -> Vec<GalleryEntry> {
    vec![
        GalleryEntry {
            id: "hyperplane",
            kind: EntryKind::Immersion,
            description: "affine plane x3 = d",
            params: vec![ParamSpec::free("d", 5.0)],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Classify { tag: "hyperplane" },
                    provenance: "closed form",
                },
                Expected {
                    check: ExpectedCheck::Verify {
                        flavor: Flavor::Conformal,
                        soliton: true,
                    },
                    provenance: "L_{V^T} g = 2g on a plane",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "s3",
                        pass: true,
                    },
                    provenance: "two-route agreement",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "potential",
                        pass: true,
                    },
                    provenance: "gradient identity",
                },
            ],
        },
        GalleryEntry {
            id: "sphere",
            kind: EntryKind::Immersion,
            description: "round sphere of radius r centered at (cx, cy, cz)",
            params: vec![
                ParamSpec {
                    name: "r",
                    default: 2.0,
                    min: Some(1e-6),
                    max: None,
                    integer: false,
                },
                ParamSpec::free("cx", 0.0),
                ParamSpec::free("cy", 0.0),
                ParamSpec::free("cz", 0.0),
            ],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Classify { tag: "hypersphere" },
                    provenance: "F + N/alpha constant, direct evaluation",
                },
                Expected {
                    check: ExpectedCheck::Verify {
                        flavor: Flavor::Conformal,
                        soliton: true,
                    },
                    provenance: "umbilic surfaces satisfy the condition",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "s3",
                        pass: true,
                    },
                    provenance: "two-route agreement",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "potential",
                        pass: true,
                    },
                    provenance: "gradient identity",
                },
            ],
        },
        GalleryEntry {
            id: "circular_cone",
            kind: EntryKind::Immersion,
            description: "cone x3 = c sqrt(x1^2 + x2^2), apex excluded",
            params: vec![ParamSpec {
                name: "c",
                default: 2.0,
                min: Some(1e-6),
                max: None,
                integer: false,
            }],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Classify { tag: "cone" },
                    provenance: "position vector tangent to the cone",
                },
                Expected {
                    check: ExpectedCheck::Verify {
                        flavor: Flavor::Conformal,
                        soliton: true,
                    },
                    provenance: "lambda = 0 makes L = 2g",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "s3",
                        pass: true,
                    },
                    provenance: "two-route agreement",
                },
            ],
        },
        GalleryEntry {
            id: "torus",
            kind: EntryKind::Immersion,
            description: "torus of revolution with radii R > r",
            params: vec![
                ParamSpec {
                    name: "R",
                    default: 3.0,
                    min: Some(1e-6),
                    max: None,
                    integer: false,
                },
                ParamSpec {
                    name: "r",
                    default: 1.0,
                    min: Some(1e-6),
                    max: None,
                    integer: false,
                },
            ],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Classify { tag: "not_soliton" },
                    provenance: "two-route Lie derivative differs from phi g",
                },
                Expected {
                    check: ExpectedCheck::Verify {
                        flavor: Flavor::Conformal,
                        soliton: false,
                    },
                    provenance: "direct residual evaluation",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "s3",
                        pass: true,
                    },
                    provenance: "two-route agreement holds on non-solitons",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "ensays",
                        pass: true,
                    },
                    provenance: "identity defect and conformal residual vanish together",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "potential",
                        pass: true,
                    },
                    provenance: "gradient identity",
                },
            ],
        },
        GalleryEntry {
            id: "catenoid",
            kind: EntryKind::Immersion,
            description: "catenoid, the rotational minimal surface",
            params: vec![],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "minimal_phi1",
                        pass: true,
                    },
                    provenance: "classical minimality",
                },
                Expected {
                    check: ExpectedCheck::Verify {
                        flavor: Flavor::Conformal,
                        soliton: false,
                    },
                    provenance: "lambda h term does not vanish",
                },
                Expected {
                    check: ExpectedCheck::Classify { tag: "not_soliton" },
                    provenance: "soliton gate triggers first",
                },
            ],
        },
        GalleryEntry {
            id: "helicoid",
            kind: EntryKind::Immersion,
            description: "helicoid, the ruled minimal surface",
            params: vec![],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "minimal_phi1",
                        pass: true,
                    },
                    provenance: "classical minimality",
                },
                Expected {
                    check: ExpectedCheck::Verify {
                        flavor: Flavor::Conformal,
                        soliton: false,
                    },
                    provenance: "lambda h term does not vanish",
                },
            ],
        },
        GalleryEntry {
            id: "graph",
            kind: EntryKind::Immersion,
            description: "polynomial graph x3 = p(x1, x2)",
            params: vec![
                ParamSpec::free("c20", 0.3),
                ParamSpec::free("c11", 0.15),
                ParamSpec::free("c02", -0.2),
                ParamSpec::free("c10", 0.1),
                ParamSpec::free("c01", 0.0),
                ParamSpec::free("c00", 1.0),
            ],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Classify { tag: "not_soliton" },
                    provenance: "generic graphs fail the residual gate",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "s3",
                        pass: true,
                    },
                    provenance: "two-route agreement",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "potential",
                        pass: true,
                    },
                    provenance: "gradient identity",
                },
            ],
        },
        GalleryEntry {
            id: "warped_cosh_cylinder",
            kind: EntryKind::Intrinsic,
            description: "warped product dt^2 + cosh^2 t g_{S^{n-1}} with potential sinh t",
            params: vec![ParamSpec::dimension("n", 3.0)],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Verify {
                        flavor: Flavor::GradientConformal,
                        soliton: true,
                    },
                    provenance: "hess f = sinh t * g by hand computation",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "f1",
                        pass: true,
                    },
                    provenance: "identity verified on the explicit chart",
                },
            ],
        },
        GalleryEntry {
            id: "rn_log_potential",
            kind: EntryKind::Intrinsic,
            description: "flat R^n with f = -m log(|x|^2 + beta) and h = -m/(|x|^2 + beta)",
            params: vec![
                ParamSpec::free("m", 1.0),
                ParamSpec {
                    name: "beta",
                    default: 1.0,
                    min: Some(1e-9),
                    max: None,
                    integer: false,
                },
                ParamSpec::dimension("n", 3.0),
            ],
            expected: vec![Expected {
                check: ExpectedCheck::Verify {
                    flavor: Flavor::HAlmost,
                    soliton: false,
                },
                provenance: "direct evaluation of both sides on a grid",
            }],
        },
        GalleryEntry {
            id: "hessian_r2_flat",
            kind: EntryKind::Intrinsic,
            description: "Hessian metric of log(exp(x)+exp(y)+1), flat-connection reading",
            params: vec![],
            expected: vec![Expected {
                check: ExpectedCheck::Identity {
                    id: "hessian_flat",
                    pass: true,
                },
                provenance: "g = ddf holds by construction",
            }],
        },
        GalleryEntry {
            id: "hessian_r2_lc",
            kind: EntryKind::Intrinsic,
            description: "Hessian metric of log(exp(x)+exp(y)+1), Levi-Civita reading",
            params: vec![],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "hessian_lc",
                        pass: false,
                    },
                    provenance: "direct evaluation shows a genuine defect",
                },
                Expected {
                    check: ExpectedCheck::Verify {
                        flavor: Flavor::GradientConformal,
                        soliton: false,
                    },
                    provenance: "direct evaluation of the fitted residual",
                },
            ],
        },
        GalleryEntry {
            id: "polar_flat",
            kind: EntryKind::Intrinsic,
            description: "flat plane in polar coordinates with the position field (r, 0)",
            params: vec![],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Verify {
                        flavor: Flavor::Conformal,
                        soliton: true,
                    },
                    provenance: "position field is concurrent in any chart",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "concurrent",
                        pass: true,
                    },
                    provenance: "chart transform of the cartesian position field",
                },
            ],
        },
        GalleryEntry {
            id: "flat_quadratic",
            kind: EntryKind::Intrinsic,
            description: "flat R^n with f = |u|^2/2 and the position field",
            params: vec![ParamSpec::dimension("n", 3.0)],
            expected: vec![
                Expected {
                    check: ExpectedCheck::Verify {
                        flavor: Flavor::GradientConformal,
                        soliton: true,
                    },
                    provenance: "hess f = g exactly",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "concurrent",
                        pass: true,
                    },
                    provenance: "position field definition",
                },
                Expected {
                    check: ExpectedCheck::Identity {
                        id: "f1",
                        pass: true,
                    },
                    provenance: "R = 0 and phi constant",
                },
            ],
        },
    ]
}

pub fn find_entry(id: &str) -> Result<GalleryEntry, GalleryError> {
    list_entries()
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| GalleryError::UnknownId { id: id.to_string() })
}

fn resolve_params(
    entry: &GalleryEntry,
    given: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, GalleryError> {
    for name in given.keys() {
        if !entry.params.iter().any(|p| p.name == name) {
            return Err(GalleryError::UnknownParam {
                entry: entry.id.to_string(),
                name: name.clone(),
            });
        }
    }
    let mut out = BTreeMap::new();
    for spec in &entry.params {
        let v = given.get(spec.name).copied().unwrap_or(spec.default);
        if let Some(min) = spec.min {
            if v < min {
                return Err(GalleryError::ConstraintViolation {
                    entry: entry.id.to_string(),
                    param: spec.name.to_string(),
                    message: format!("{v} below minimum {min}"),
                });
            }
        }
        if let Some(max) = spec.max {
            if v > max {
                return Err(GalleryError::ConstraintViolation {
                    entry: entry.id.to_string(),
                    param: spec.name.to_string(),
                    message: format!("{v} above maximum {max}"),
                });
            }
        }
        if spec.integer && v.fract() != 0.0 {
            return Err(GalleryError::ConstraintViolation {
                entry: entry.id.to_string(),
                param: spec.name.to_string(),
                message: format!("{v} must be an integer"),
            });
        }
        out.insert(spec.name.to_string(), v);
    }
    Ok(out)
}

fn surface(
    id: &str,
    comps: &[String],
    domain: Vec<DomainBox>,
    samples: Vec<usize>,
    exclude: Option<&str>,
) -> Instance {
    let dim = domain.len();
    let immersion = Immersion::new(
        dim,
        comps
            .iter()
            .map(|c| parse(c).expect("gallery expression"))
            .collect(),
        domain.clone(),
        exclude.map(|e| parse(e).expect("gallery exclusion")),
    )
    .expect("gallery immersion");
    Instance {
        id: id.to_string(),
        kind: EntryKind::Immersion,
        dim,
        geometry: Geometry::Surface(immersion),
        flavor: Flavor::Conformal,
        h_function: None,
        domain,
        samples,
    }
}

/// The sphere-block warped metric dt^2 + cosh^2 t g_{S^{n-1}} in spherical
/// coordinates, as lower-triangular component strings.
fn warped_metric_entries(n: usize) -> Vec<String> {
    let mut lower = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            if i != j {
                lower.push("0".to_string());
            } else if i == 0 {
                lower.push("1".to_string());
            } else {
                let mut diag = "cosh(u1)^2".to_string();
                for axis in 2..=i {
                    diag.push_str(&format!("*sin(u{axis})^2"));
                }
                lower.push(diag);
            }
        }
    }
    lower
}

fn sphere_chart_domain(n: usize, t_box: DomainBox) -> (Vec<DomainBox>, Vec<usize>) {
    let mut domain = vec![t_box];
    let mut samples = vec![6];
    for axis in 1..n {
        if axis == n - 1 {
            domain.push(DomainBox { min: 0.1, max: 6.2 });
            samples.push(5);
        } else {
            domain.push(DomainBox { min: 0.3, max: 2.8 });
            samples.push(5);
        }
    }
    (domain, samples)
}

/// Instantiate an entry with the given parameters (defaults fill the rest).
pub fn instantiate(id: &str, given: &BTreeMap<String, f64>) -> Result<Instance, GalleryError> {
    let entry = find_entry(id)?;
    let p = resolve_params(&entry, given)?;
    // cross-parameter constraint for the torus
    if id == "torus" && p["R"] <= p["r"] {
        return Err(GalleryError::ConstraintViolation {
            entry: id.to_string(),
            param: "R".to_string(),
            message: format!("needs R > r > 0, got R = {}, r = {}", p["R"], p["r"]),
        });
    }
    let pi = std::f64::consts::PI;
    Ok(match id {
        "hyperplane" => {
            let d = fmt_num(p["d"]);
            surface(
                id,
                &["u1".into(), "u2".into(), d],
                vec![
                    DomainBox {
                        min: -1.0,
                        max: 1.0,
                    },
                    DomainBox {
                        min: -1.0,
                        max: 1.0,
                    },
                ],
                vec![10, 10],
                None,
            )
        }
        "sphere" => {
            let r = fmt_num(p["r"]);
            let comps = [
                format!("{}+{r}*sin(u1)*cos(u2)", fmt_num(p["cx"])),
                format!("{}+{r}*sin(u1)*sin(u2)", fmt_num(p["cy"])),
                format!("{}+{r}*cos(u1)", fmt_num(p["cz"])),
            ];
            surface(
                id,
                &comps,
                vec![
                    DomainBox {
                        min: 0.2,
                        max: pi - 0.2,
                    },
                    DomainBox { min: 0.1, max: 6.2 },
                ],
                vec![10, 10],
                None,
            )
        }
        "circular_cone" => {
            let c = fmt_num(p["c"]);
            let comps = [
                "u1*cos(u2)".to_string(),
                "u1*sin(u2)".to_string(),
                format!("{c}*u1"),
            ];
            surface(
                id,
                &comps,
                vec![
                    DomainBox { min: 0.5, max: 2.0 },
                    DomainBox { min: 0.1, max: 6.2 },
                ],
                vec![8, 13],
                None,
            )
        }
        "torus" => {
            let (big, small) = (fmt_num(p["R"]), fmt_num(p["r"]));
            let comps = [
                format!("({big}+{small}*cos(u1))*cos(u2)"),
                format!("({big}+{small}*cos(u1))*sin(u2)"),
                format!("{small}*sin(u1)"),
            ];
            surface(
                id,
                &comps,
                vec![
                    DomainBox { min: 0.0, max: 6.3 },
                    DomainBox { min: 0.0, max: 6.3 },
                ],
                vec![10, 10],
                None,
            )
        }
        "catenoid" => surface(
            id,
            &[
                "cosh(u1)*cos(u2)".into(),
                "cosh(u1)*sin(u2)".into(),
                "u1".into(),
            ],
            vec![
                DomainBox {
                    min: -1.2,
                    max: 1.2,
                },
                DomainBox { min: 0.1, max: 6.2 },
            ],
            vec![10, 10],
            None,
        ),
        "helicoid" => surface(
            id,
            &["u1*cos(u2)".into(), "u1*sin(u2)".into(), "u2".into()],
            vec![
                DomainBox { min: 0.3, max: 1.8 },
                DomainBox {
                    min: -2.5,
                    max: 2.5,
                },
            ],
            vec![10, 10],
            None,
        ),
        "graph" => {
            let z = format!(
                "{}*u1^2+{}*u1*u2+{}*u2^2+{}*u1+{}*u2+{}",
                fmt_num(p["c20"]),
                fmt_num(p["c11"]),
                fmt_num(p["c02"]),
                fmt_num(p["c10"]),
                fmt_num(p["c01"]),
                fmt_num(p["c00"]),
            );
            surface(
                id,
                &["u1".into(), "u2".into(), z],
                vec![
                    DomainBox {
                        min: -1.0,
                        max: 1.0,
                    },
                    DomainBox {
                        min: -1.0,
                        max: 1.0,
                    },
                ],
                vec![10, 10],
                None,
            )
        }
        "warped_cosh_cylinder" => {
            let n = p["n"] as usize;
            let metric = MetricField::from_lower_triangular(
                n,
                warped_metric_entries(n)
                    .iter()
                    .map(|s| parse(s).expect("gallery metric"))
                    .collect(),
            )
            .expect("gallery metric shape");
            let (domain, samples) = sphere_chart_domain(
                n,
                DomainBox {
                    min: -1.0,
                    max: 1.0,
                },
            );
            Instance {
                id: id.to_string(),
                kind: EntryKind::Intrinsic,
                dim: n,
                geometry: Geometry::Intrinsic {
                    metric,
                    potential: Some(parse("sinh(u1)").unwrap()),
                    vector: None,
                },
                flavor: Flavor::GradientConformal,
                h_function: None,
                domain,
                samples,
            }
        }
        "rn_log_potential" => {
            let n = p["n"] as usize;
            let metric = MetricField::flat(n);
            let norm_sq = (1..=n)
                .map(|i| format!("u{i}^2"))
                .collect::<Vec<_>>()
                .join("+");
            let m = fmt_num(p["m"]);
            let beta = fmt_num(p["beta"]);
            let f = format!("-{m}*log({norm_sq}+{beta})");
            let h = format!("-{m}/({norm_sq}+{beta})");
            let domain = vec![
                DomainBox {
                    min: -1.0,
                    max: 1.0
                };
                n
            ];
            let samples = match n {
                2 => vec![7, 7],
                3 => vec![5, 5, 4],
                _ => vec![4, 4, 3, 3],
            };
            Instance {
                id: id.to_string(),
                kind: EntryKind::Intrinsic,
                dim: n,
                geometry: Geometry::Intrinsic {
                    metric,
                    potential: Some(parse(&f).unwrap()),
                    vector: None,
                },
                flavor: Flavor::HAlmost,
                h_function: Some(parse(&h).unwrap()),
                domain,
                samples,
            }
        }
        "hessian_r2_flat" | "hessian_r2_lc" => {
            let s = "exp(u1)+exp(u2)+1";
            let metric = MetricField::from_lower_triangular(
                2,
                vec![
                    parse(&format!("exp(u1)*(exp(u2)+1)/({s})^2")).unwrap(),
                    parse(&format!("-exp(u1)*exp(u2)/({s})^2")).unwrap(),
                    parse(&format!("exp(u2)*(exp(u1)+1)/({s})^2")).unwrap(),
                ],
            )
            .expect("hessian metric shape");
            Instance {
                id: id.to_string(),
                kind: EntryKind::Intrinsic,
                dim: 2,
                geometry: Geometry::Intrinsic {
                    metric,
                    potential: Some(parse(&format!("log({s})")).unwrap()),
                    vector: None,
                },
                flavor: Flavor::GradientConformal,
                h_function: None,
                domain: vec![
                    DomainBox {
                        min: -1.5,
                        max: 1.5,
                    },
                    DomainBox {
                        min: -1.5,
                        max: 1.5,
                    },
                ],
                samples: vec![8, 8],
            }
        }
        "polar_flat" => Instance {
            id: id.to_string(),
            kind: EntryKind::Intrinsic,
            dim: 2,
            geometry: Geometry::Intrinsic {
                metric: MetricField::from_lower_triangular(
                    2,
                    vec![
                        parse("1").unwrap(),
                        parse("0").unwrap(),
                        parse("u1^2").unwrap(),
                    ],
                )
                .unwrap(),
                potential: None,
                vector: Some(vec![parse("u1").unwrap(), parse("0").unwrap()]),
            },
            flavor: Flavor::Conformal,
            h_function: None,
            domain: vec![
                DomainBox { min: 0.5, max: 2.0 },
                DomainBox { min: 0.1, max: 6.2 },
            ],
            samples: vec![8, 8],
        },
        "flat_quadratic" => {
            let n = p["n"] as usize;
            let norm_sq = (1..=n)
                .map(|i| format!("u{i}^2"))
                .collect::<Vec<_>>()
                .join("+");
            let position: Vec<Expr> = (1..=n).map(|i| parse(&format!("u{i}")).unwrap()).collect();
            let domain = vec![
                DomainBox {
                    min: -1.0,
                    max: 1.0
                };
                n
            ];
            let samples = match n {
                2 => vec![7, 7],
                3 => vec![5, 5, 4],
                _ => vec![4, 4, 3, 3],
            };
            Instance {
                id: id.to_string(),
                kind: EntryKind::Intrinsic,
                dim: n,
                geometry: Geometry::Intrinsic {
                    metric: MetricField::flat(n),
                    potential: Some(parse(&format!("0.5*({norm_sq})")).unwrap()),
                    vector: Some(position),
                },
                flavor: Flavor::GradientConformal,
                h_function: None,
                domain,
                samples,
            }
        }
        _ => unreachable!("find_entry already validated the id"),
    })
}

/// Default tolerance for each identity check, matching the acceptance
/// thresholds.
pub fn default_identity_tol(id: &str) -> f64 {
    match id {
        "s3" => 1e-8,
        "potential" => 1e-9,
        "f1" => 1e-6,
        "concurrent" => 1e-12,
        "minimal_phi1" => 1e-8,
        _ => crate::soliton::TOL_SOLITON,
    }
}

/// Execute one expected check against an instance at its default sample
/// plan. Returns the outcome and a human-readable detail line.
pub fn run_expected_check(inst: &Instance, check: &ExpectedCheck) -> (bool, String) {
    use crate::classifier::{classify, ClassifyConfig};
    use crate::soliton::{
        check_concurrent, check_flavored, check_hessian_conventions, check_minimal_phi1,
        identity_ensays, identity_f1, identity_potential, identity_s3, SolitonProblem, Verdict,
        TOL_MINIMAL, TOL_SOLITON,
    };

    let points = inst.sample_points();
    match check {
        ExpectedCheck::Classify { tag } => {
            let Geometry::Surface(s) = &inst.geometry else {
                return (false, "classify requires an immersion".into());
            };
            match classify(s, &points, &ClassifyConfig::default()) {
                Ok(v) => (
                    v.tag.name() == *tag,
                    format!("classify -> {} (expected {tag})", v.tag.name()),
                ),
                Err(e) => (false, format!("classify failed: {e}")),
            }
        }
        ExpectedCheck::Verify { flavor, soliton } => {
            let prob = SolitonProblem {
                geometry: inst.geometry.clone(),
                flavor: *flavor,
                h_function: inst.h_function.clone(),
                points,
                tol: TOL_SOLITON,
            };
            match check_flavored(&prob) {
                Ok(rep) => {
                    let got = rep.verdict == Verdict::Soliton;
                    (
                        got == *soliton,
                        format!(
                            "verify {} -> {:?} (sup residual {:.3e})",
                            rep.flavor, rep.verdict, rep.sup_residual
                        ),
                    )
                }
                Err(e) => (false, format!("verify failed: {e}")),
            }
        }
        ExpectedCheck::Identity { id, pass } => {
            let tol = default_identity_tol(id);
            let report = match (*id, &inst.geometry) {
                ("s3", Geometry::Surface(s)) => identity_s3(s, &points, tol),
                ("ensays", Geometry::Surface(s)) => identity_ensays(s, &points, tol),
                ("potential", Geometry::Surface(s)) => identity_potential(s, &points, tol),
                ("minimal_phi1", Geometry::Surface(s)) => {
                    check_minimal_phi1(s, &points, TOL_MINIMAL, tol)
                }
                (
                    "concurrent",
                    Geometry::Intrinsic {
                        metric,
                        vector: Some(v),
                        ..
                    },
                ) => check_concurrent(metric, v, &points, tol),
                (
                    "f1",
                    Geometry::Intrinsic {
                        metric,
                        potential: Some(f),
                        ..
                    },
                ) => identity_f1(metric, f, &points, tol),
                (
                    "hessian_flat",
                    Geometry::Intrinsic {
                        metric,
                        potential: Some(f),
                        ..
                    },
                ) => check_hessian_conventions(metric, f, &points, tol).map(|(flat, _)| flat),
                (
                    "hessian_lc",
                    Geometry::Intrinsic {
                        metric,
                        potential: Some(f),
                        ..
                    },
                ) => check_hessian_conventions(metric, f, &points, tol).map(|(_, lc)| lc),
                _ => {
                    return (
                        false,
                        format!("identity `{id}` is not applicable to this geometry"),
                    )
                }
            };
            match report {
                Ok(rep) => (
                    rep.pass == *pass,
                    format!(
                        "identity {} -> pass = {} (sup defect {:.3e}, expected pass = {pass})",
                        rep.id, rep.pass, rep.sup_defect
                    ),
                ),
                Err(e) => (false, format!("identity {id} failed: {e}")),
            }
        }
    }
}
