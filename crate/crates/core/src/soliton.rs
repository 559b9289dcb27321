//! Soliton condition checks and identity lemmas on sampled points.
//!
//! The umbrella condition is conformal: phi g = (1/2) L_v g for some
//! function phi. The flavors (Yamabe, almost Yamabe, gradient k-Yamabe,
//! h-almost, conformal gradient) specialize what replaces phi and which
//! scalars must be constants. phi is always recovered by trace projection,
//! the unique residual-minimizing multiple of g; constants rho are fit by
//! least squares over the sample plan.
//!
//! For immersions the soliton field is the tangential part of the position
//! vector, and the Lie derivative is computed by the coordinate-formula
//! route so that checks stay independent of the frame identities they are
//! compared against.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{eval_jet, eval_scalar, EvalError, Expr, Jet};
use crate::hypersurface::{Immersion, SurfaceError};
use crate::linalg::{self, Mat};
use crate::tensor::{self, MetricField, TensorError};

/// Default relative tolerance for soliton verdicts.
pub const TOL_SOLITON: f64 = 1e-7;
/// Default relative tolerance for minimality (|alpha| below this counts as
/// minimal).
pub const TOL_MINIMAL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SolitonError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("empty sample plan")]
    EmptySamplePlan,
    #[error("{flavor} requires {what}")]
    MissingInput { flavor: String, what: String },
    #[error("lemma not applicable: {reason}")]
    NotApplicable { reason: String },
    #[error("h function invalid: {reason}")]
    InvalidH { reason: String },
    #[error("k-Yamabe requires dimension >= 3 (sigma_k undefined for n = 2)")]
    KYamabeDimension,
    #[error("sigma_{k} undefined for dimension {n}")]
    KOutOfRange { k: usize, n: usize },
}

/// Soliton flavors from the definitions the tool verifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Conformal,
    Yamabe,
    AlmostYamabe,
    #[serde(rename = "k_yamabe")]
    KYamabe(usize),
    HAlmost,
    GradientConformal,
}

impl Flavor {
    pub fn name(&self) -> String {
        match self {
            Flavor::Conformal => "conformal".into(),
            Flavor::Yamabe => "yamabe".into(),
            Flavor::AlmostYamabe => "almost_yamabe".into(),
            Flavor::KYamabe(k) => format!("k_yamabe(k={k})"),
            Flavor::HAlmost => "h_almost".into(),
            Flavor::GradientConformal => "gradient_conformal".into(),
        }
    }

    /// Gradient flavors use hess f where the others use (1/2) L_v g.
    pub fn is_gradient(&self) -> bool {
        matches!(self, Flavor::KYamabe(_) | Flavor::GradientConformal)
    }
}

/// The geometry a soliton condition is checked on.
#[derive(Debug, Clone)]
pub enum Geometry {
    /// Hypersurface with v = tangential part of the position vector.
    Surface(Immersion),
    /// Abstract metric with an explicit potential and/or vector field.
    Intrinsic {
        metric: MetricField,
        potential: Option<Expr>,
        vector: Option<Vec<Expr>>,
    },
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Surface(s) => s.dim(),
            Geometry::Intrinsic { metric, .. } => metric.dim(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolitonProblem {
    pub geometry: Geometry,
    pub flavor: Flavor,
    /// weight function for the h-almost flavor
    pub h_function: Option<Expr>,
    pub points: Vec<Vec<f64>>,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Soliton,
    NotSoliton,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonPointData {
    pub point: Vec<f64>,
    /// trace-projection fit of phi at this point
    pub phi: f64,
    /// sup-norm tensor defect normalized by sup|g|
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_pointwise: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonReport {
    pub flavor: String,
    pub tol: f64,
    /// least-squares constant rho, for flavors that require one
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub sup_residual: f64,
    pub verdict: Verdict,
    pub points: Vec<SolitonPointData>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityPointData {
    pub point: Vec<f64>,
    pub defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub id: String,
    pub tol: f64,
    pub sup_defect: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub aux: BTreeMap<String, f64>,
    pub points: Vec<IdentityPointData>,
}

/// Per-point soliton data for an immersion: the extrinsic frame together
/// with the coordinate-route conformal fit.
#[derive(Debug, Clone)]
pub struct SurfacePointCheck {
    pub frame: crate::hypersurface::ExtrinsicFrame,
    pub phi: f64,
    pub residual: f64,
}

/// phi by trace projection and the normalized sup defect of s - phi g.
fn trace_fit(g: &Mat<f64>, g_inv: &Mat<f64>, s: &Mat<f64>) -> (f64, f64) {
    let n = g.len();
    let mut phi = 0.0;
    for i in 0..n {
        for j in 0..n {
            phi += g_inv[i][j] * s[i][j];
        }
    }
    phi /= n as f64;
    let g_sup = linalg::mat_sup(g).max(f64::MIN_POSITIVE);
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((s[i][j] - phi * g[i][j]).abs());
        }
    }
    (phi, defect / g_sup)
}

/// Frame plus coordinate-route conformal fit at one chart point.
pub fn surface_point_check(s: &Immersion, u: &[f64]) -> Result<SurfacePointCheck, SolitonError> {
    let (lie, _) = s.lie_position_at(u)?;
    let frame = s.frame_at(u)?;
    let half_lie: Mat<f64> = lie
        .iter()
        .map(|r| r.iter().map(|x| 0.5 * x).collect())
        .collect();
    let (phi, residual) = trace_fit(&frame.metric, &frame.metric_inv, &half_lie);
    Ok(SurfacePointCheck {
        frame,
        phi,
        residual,
    })
}

/// The potential f = |F|^2 / 2 canonically attached to an immersion.
pub fn half_norm_squared(s: &Immersion) -> Expr {
    let mut sq = Expr::Num(0.0);
    for c in s.components() {
        sq = Expr::add(sq, Expr::mul(c.clone(), c.clone()));
    }
    Expr::mul(Expr::Num(0.5), sq)
}

struct PointTensors {
    g: Mat<f64>,
    g_inv: Mat<f64>,
    /// (1/2) L_v g, or hess f for gradient flavors
    s: Mat<f64>,
    extr: Option<(f64, f64, f64, f64)>, // lambda, alpha, kappa_min, kappa_max
}

fn point_tensors(
    geometry: &Geometry,
    flavor: Flavor,
    p: &[f64],
) -> Result<PointTensors, SolitonError> {
    match geometry {
        Geometry::Surface(s) => {
            let frame = s.frame_at(p)?;
            let extr = Some((
                frame.lambda,
                frame.alpha,
                frame.kappas[0],
                frame.kappas[frame.kappas.len() - 1],
            ));
            let s_tensor = if flavor.is_gradient() {
                let f = half_norm_squared(s);
                let m = s.induced_metric();
                m.scalar_field_at(&f, p)?.hess
            } else {
                let (lie, _) = s.lie_position_at(p)?;
                lie.iter()
                    .map(|r| r.iter().map(|x| 0.5 * x).collect())
                    .collect()
            };
            Ok(PointTensors {
                g: frame.metric.clone(),
                g_inv: frame.metric_inv.clone(),
                s: s_tensor,
                extr,
            })
        }
        Geometry::Intrinsic {
            metric,
            potential,
            vector,
        } => {
            let use_potential = flavor.is_gradient() || vector.is_none();
            let s_tensor: Mat<f64> = if use_potential {
                let f = potential
                    .as_ref()
                    .ok_or_else(|| SolitonError::MissingInput {
                        flavor: flavor.name(),
                        what: "a potential f".into(),
                    })?;
                metric.scalar_field_at(f, p)?.hess
            } else {
                let v = vector.as_ref().unwrap();
                let d = metric.vector_field_at(v, p)?;
                d.lie_g
                    .iter()
                    .map(|r| r.iter().map(|x| 0.5 * x).collect())
                    .collect()
            };
            let gj = metric.metric_jets(p, 0)?;
            let g = tensor::jet_values(&gj);
            if linalg::cholesky(&g).is_none() {
                return Err(TensorError::NotPositiveDefinite { point: p.to_vec() }.into());
            }
            let g_inv =
                linalg::mat_inverse(&g).ok_or(TensorError::Singular { point: p.to_vec() })?;
            Ok(PointTensors {
                g,
                g_inv,
                s: s_tensor,
                extr: None,
            })
        }
    }
}

fn scalar_curvature(geometry: &Geometry, p: &[f64]) -> Result<f64, SolitonError> {
    let c = match geometry {
        Geometry::Surface(s) => s.induced_metric().curvature_at(p)?,
        Geometry::Intrinsic { metric, .. } => metric.curvature_at(p)?,
    };
    Ok(c.r_scalar)
}

fn sigma_k_at(geometry: &Geometry, k: usize, p: &[f64]) -> Result<f64, SolitonError> {
    let c = match geometry {
        Geometry::Surface(s) => s.induced_metric().curvature_at(p)?,
        Geometry::Intrinsic { metric, .. } => metric.curvature_at(p)?,
    };
    match c.sigma_k(k) {
        Ok(v) => Ok(v),
        Err(TensorError::SchoutenUndefined { .. }) => Err(SolitonError::KYamabeDimension),
        Err(e) => Err(e.into()),
    }
}

/// Evaluate pointwise in parallel, then surface the first error in point
/// order so failures are deterministic.
fn collect_ordered<T: Send>(
    points: &[Vec<f64>],
    f: impl Fn(&[f64]) -> Result<T, SolitonError> + Sync,
) -> Result<Vec<T>, SolitonError> {
    let results: Vec<Result<T, SolitonError>> =
        points.par_iter().map(|p| f(p.as_slice())).collect();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        out.push(r?);
    }
    Ok(out)
}

fn finish_report(
    flavor: &Flavor,
    tol: f64,
    rho: Option<f64>,
    points: Vec<SolitonPointData>,
) -> SolitonReport {
    let sup_residual = points.iter().fold(0.0f64, |a, p| a.max(p.residual));
    SolitonReport {
        flavor: flavor.name(),
        tol,
        rho,
        sup_residual,
        verdict: if sup_residual <= tol {
            Verdict::Soliton
        } else {
            Verdict::NotSoliton
        },
        points,
    }
}

fn point_row(
    t: &PointTensors,
    p: &[f64],
    phi: f64,
    residual: f64,
    rho: Option<f64>,
) -> SolitonPointData {
    SolitonPointData {
        point: p.to_vec(),
        phi,
        residual,
        rho_pointwise: rho,
        lambda: t.extr.map(|e| e.0),
        alpha: t.extr.map(|e| e.1),
        kappa_min: t.extr.map(|e| e.2),
        kappa_max: t.extr.map(|e| e.3),
    }
}

/// Check the plain conformal condition phi g = (1/2) L_v g.
pub fn check_conformal(prob: &SolitonProblem) -> Result<SolitonReport, SolitonError> {
    assert!(
        matches!(prob.flavor, Flavor::Conformal),
        "check_conformal expects the conformal flavor"
    );
    if prob.points.is_empty() {
        return Err(SolitonError::EmptySamplePlan);
    }
    let rows = collect_ordered(&prob.points, |p| {
        let t = point_tensors(&prob.geometry, prob.flavor, p)?;
        let (phi, residual) = trace_fit(&t.g, &t.g_inv, &t.s);
        Ok(point_row(&t, p, phi, residual, None))
    })?;
    Ok(finish_report(&prob.flavor, prob.tol, None, rows))
}

/// Check the configured flavor, fitting the constant rho where the flavor
/// requires one.
pub fn check_flavored(prob: &SolitonProblem) -> Result<SolitonReport, SolitonError> {
    if prob.points.is_empty() {
        return Err(SolitonError::EmptySamplePlan);
    }
    let n = prob.geometry.dim() as f64;

    match prob.flavor {
        Flavor::Conformal => check_conformal(prob),
        Flavor::GradientConformal => {
            let rows = collect_ordered(&prob.points, |p| {
                let t = point_tensors(&prob.geometry, prob.flavor, p)?;
                let (phi, residual) = trace_fit(&t.g, &t.g_inv, &t.s);
                Ok(point_row(&t, p, phi, residual, None))
            })?;
            Ok(finish_report(&prob.flavor, prob.tol, None, rows))
        }
        Flavor::Yamabe | Flavor::AlmostYamabe => {
            // (R - rho) g = (1/2) L_v g; the trace fixes rho(p) = R - phi
            let data = collect_ordered(&prob.points, |p| {
                let t = point_tensors(&prob.geometry, prob.flavor, p)?;
                let r = scalar_curvature(&prob.geometry, p)?;
                Ok((t, r))
            })?;
            let phis: Vec<f64> = data
                .iter()
                .map(|(t, _)| trace_fit(&t.g, &t.g_inv, &t.s).0)
                .collect();
            if matches!(prob.flavor, Flavor::AlmostYamabe) {
                // rho is a free function: rho(p) = R - phi absorbs the trace
                // and the verdict coincides with the conformal one
                let rows: Vec<SolitonPointData> = data
                    .iter()
                    .zip(&phis)
                    .zip(&prob.points)
                    .map(|(((t, r), phi), p)| {
                        let (_, residual) = trace_fit(&t.g, &t.g_inv, &t.s);
                        point_row(t, p, *phi, residual, Some(r - phi))
                    })
                    .collect();
                return Ok(finish_report(&prob.flavor, prob.tol, None, rows));
            }
            let rho_samples: Vec<f64> = data
                .iter()
                .zip(&phis)
                .map(|((_, r), phi)| r - phi)
                .collect();
            let rho = linalg::mean(&rho_samples);
            let rows: Vec<SolitonPointData> = data
                .iter()
                .zip(&phis)
                .zip(&prob.points)
                .map(|(((t, r), phi), p)| {
                    let g_sup = linalg::mat_sup(&t.g).max(f64::MIN_POSITIVE);
                    let nn = t.g.len();
                    let mut defect: f64 = 0.0;
                    for i in 0..nn {
                        for j in 0..nn {
                            defect = defect.max(((r - rho) * t.g[i][j] - t.s[i][j]).abs());
                        }
                    }
                    point_row(t, p, *phi, defect / g_sup, Some(r - phi))
                })
                .collect();
            Ok(finish_report(&prob.flavor, prob.tol, Some(rho), rows))
        }
        Flavor::KYamabe(k) => {
            let dim = prob.geometry.dim();
            if dim < 3 {
                return Err(SolitonError::KYamabeDimension);
            }
            if k == 0 || k > dim {
                return Err(SolitonError::KOutOfRange { k, n: dim });
            }
            // 2(n-1)(sigma_k - rho) g = hess f
            let data = collect_ordered(&prob.points, |p| {
                let t = point_tensors(&prob.geometry, prob.flavor, p)?;
                let sk = sigma_k_at(&prob.geometry, k, p)?;
                Ok((t, sk))
            })?;
            let c = 2.0 * (n - 1.0);
            let rho_samples: Vec<f64> = data
                .iter()
                .map(|(t, sk)| {
                    let phi = trace_fit(&t.g, &t.g_inv, &t.s).0;
                    sk - phi / c
                })
                .collect();
            let rho = linalg::mean(&rho_samples);
            let rows: Vec<SolitonPointData> = data
                .iter()
                .zip(&prob.points)
                .zip(&rho_samples)
                .map(|(((t, sk), p), rho_pt)| {
                    let (phi, _) = trace_fit(&t.g, &t.g_inv, &t.s);
                    let g_sup = linalg::mat_sup(&t.g).max(f64::MIN_POSITIVE);
                    let nn = t.g.len();
                    let mut defect: f64 = 0.0;
                    for i in 0..nn {
                        for j in 0..nn {
                            defect = defect.max((c * (sk - rho) * t.g[i][j] - t.s[i][j]).abs());
                        }
                    }
                    point_row(t, p, phi, defect / g_sup, Some(*rho_pt))
                })
                .collect();
            Ok(finish_report(&prob.flavor, prob.tol, Some(rho), rows))
        }
        Flavor::HAlmost => {
            let h_expr = prob
                .h_function
                .as_ref()
                .ok_or_else(|| SolitonError::MissingInput {
                    flavor: prob.flavor.name(),
                    what: "the weight function h".into(),
                })?;
            let geometry_vars: Vec<String> = match &prob.geometry {
                Geometry::Surface(s) => s.vars().to_vec(),
                Geometry::Intrinsic { metric, .. } => metric.vars().to_vec(),
            };
            let data = collect_ordered(&prob.points, |p| {
                let binds: Vec<(String, f64)> = geometry_vars
                    .iter()
                    .cloned()
                    .zip(p.iter().copied())
                    .collect();
                let h = eval_scalar(h_expr, &binds)?;
                let t = point_tensors(&prob.geometry, prob.flavor, p)?;
                let r = scalar_curvature(&prob.geometry, p)?;
                Ok((t, r, h))
            })?;
            // the definition requires h > 0 or h < 0 throughout
            if data.iter().any(|(_, _, h)| *h == 0.0) {
                return Err(SolitonError::InvalidH {
                    reason: "h vanishes at a sample point".into(),
                });
            }
            let sign = data[0].2.signum();
            if data.iter().any(|(_, _, h)| h.signum() != sign) {
                return Err(SolitonError::InvalidH {
                    reason: "h changes sign over the sample plan".into(),
                });
            }
            // (R - rho) g = h S with S = (1/2) L_v g; trace: rho(p) = R - h phi
            let rho_samples: Vec<f64> = data
                .iter()
                .map(|(t, r, h)| {
                    let phi = trace_fit(&t.g, &t.g_inv, &t.s).0;
                    r - h * phi
                })
                .collect();
            let rho = linalg::mean(&rho_samples);
            let rows: Vec<SolitonPointData> = data
                .iter()
                .zip(&prob.points)
                .zip(&rho_samples)
                .map(|(((t, r, h), p), rho_pt)| {
                    let (phi, _) = trace_fit(&t.g, &t.g_inv, &t.s);
                    let g_sup = linalg::mat_sup(&t.g).max(f64::MIN_POSITIVE);
                    let nn = t.g.len();
                    let mut defect: f64 = 0.0;
                    for i in 0..nn {
                        for j in 0..nn {
                            defect = defect.max(((r - rho) * t.g[i][j] - h * t.s[i][j]).abs());
                        }
                    }
                    point_row(t, p, phi, defect / g_sup, Some(*rho_pt))
                })
                .collect();
            Ok(finish_report(&prob.flavor, prob.tol, Some(rho), rows))
        }
    }
}

/// Concurrent-field check: defect(p) = sup |(nabla v)^i_j - delta^i_j|.
pub fn check_concurrent(
    metric: &MetricField,
    v: &[Expr],
    points: &[Vec<f64>],
    tol: f64,
) -> Result<IdentityReport, SolitonError> {
    if points.is_empty() {
        return Err(SolitonError::EmptySamplePlan);
    }
    let n = metric.dim();
    let rows = collect_ordered(points, |p| {
        let d = metric.vector_field_at(v, p)?;
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((d.nabla[i][j] - id).abs());
            }
        }
        Ok(IdentityPointData {
            point: p.to_vec(),
            defect,
        })
    })?;
    let sup_defect = rows.iter().fold(0.0f64, |a, r| a.max(r.defect));
    Ok(IdentityReport {
        id: "concurrent".into(),
        tol,
        sup_defect,
        pass: sup_defect <= tol,
        note: None,
        aux: BTreeMap::new(),
        points: rows,
    })
}

/// The conformal-gradient identity lemma:
/// (n-1) lap(phi) + (1/2) <grad R, grad f> + R phi = 0 with phi = lap(f)/n.
///
/// Nested derivatives (lap phi, grad R) come from re-running the tensor
/// pipeline with jet-valued scalars at each point: metric jets to order 3,
/// potential jets to order 4, Christoffel and curvature jets one and two
/// orders lower.
///
/// Precondition: (metric, f) passes the gradient-conformal check at `tol`;
/// otherwise the lemma does not apply and an error is returned.
pub fn identity_f1(
    metric: &MetricField,
    f: &Expr,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<IdentityReport, SolitonError> {
    if points.is_empty() {
        return Err(SolitonError::EmptySamplePlan);
    }
    let pre = check_flavored(&SolitonProblem {
        geometry: Geometry::Intrinsic {
            metric: metric.clone(),
            potential: Some(f.clone()),
            vector: None,
        },
        flavor: Flavor::GradientConformal,
        h_function: None,
        points: points.to_vec(),
        tol,
    })?;
    if pre.verdict != Verdict::Soliton {
        return Err(SolitonError::NotApplicable {
            reason: format!(
                "(g, f) is not a conformal gradient soliton: residual {:.3e} > {tol:.3e}",
                pre.sup_residual
            ),
        });
    }

    let n = metric.dim();
    let nf = n as f64;
    let rows = collect_ordered(points, |p| {
        // lifted pipeline: phi to order 2, R to order 1
        let gj3 = metric.metric_jets(p, 3)?;
        let gamma2 =
            tensor::christoffel_jets(&gj3).ok_or(TensorError::Singular { point: p.to_vec() })?;
        let g2: Mat<Jet> = gj3
            .iter()
            .map(|r| r.iter().map(|j| j.truncate(2)).collect())
            .collect();
        let ginv2 = linalg::mat_inverse(&g2).ok_or(TensorError::Singular { point: p.to_vec() })?;

        let ctx = metric.eval_context(p, 4);
        let fj = eval_jet(f, &ctx)?;
        let df2: Vec<Jet> = (0..n)
            .map(|i| fj.extract_derivative(i).truncate(2))
            .collect();
        let mut phi2: Option<Jet> = None;
        for i in 0..n {
            for j in 0..n {
                let mut hess_ij = fj.extract_derivative(i).extract_derivative(j);
                for (k, dfk) in df2.iter().enumerate() {
                    hess_ij = hess_ij.sub(&gamma2[k][i][j].mul(dfk));
                }
                let term = ginv2[i][j].mul(&hess_ij);
                phi2 = Some(match phi2 {
                    Some(s) => s.add(&term),
                    None => term,
                });
            }
        }
        let phi2 = phi2.unwrap().scale(1.0 / nf);

        // scalar curvature as an order-1 jet
        let rm1 = tensor::riemann_upper_jets(&gamma2);
        let g1: Mat<Jet> = gj3
            .iter()
            .map(|r| r.iter().map(|j| j.truncate(1)).collect())
            .collect();
        let ginv1 = linalg::mat_inverse(&g1).ok_or(TensorError::Singular { point: p.to_vec() })?;
        let mut r1: Option<Jet> = None;
        for j in 0..n {
            for k in 0..n {
                let mut ric_jk: Option<Jet> = None;
                for i in 0..n {
                    let term = &rm1[i][i][j][k];
                    ric_jk = Some(match ric_jk {
                        Some(s) => s.add(term),
                        None => term.clone(),
                    });
                }
                let term = ginv1[j][k].mul(&ric_jk.unwrap());
                r1 = Some(match r1 {
                    Some(s) => s.add(&term),
                    None => term,
                });
            }
        }
        let r1 = r1.unwrap();

        // assemble the identity at the point
        let ginv_val: Mat<f64> = ginv2
            .iter()
            .map(|r| r.iter().map(Jet::value).collect())
            .collect();
        let gamma_val: Vec<Mat<f64>> = gamma2
            .iter()
            .map(|m| {
                m.iter()
                    .map(|r| r.iter().map(Jet::value).collect())
                    .collect()
            })
            .collect();
        let dphi: Vec<f64> = (0..n).map(|k| phi2.extract_derivative(k).value()).collect();
        let mut lap_phi = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dd = phi2.extract_derivative(i).extract_derivative(j).value();
                let corr: f64 = (0..n).map(|k| gamma_val[k][i][j] * dphi[k]).sum();
                lap_phi += ginv_val[i][j] * (dd - corr);
            }
        }
        let mut grad_pair = 0.0;
        for i in 0..n {
            for j in 0..n {
                grad_pair += ginv_val[i][j]
                    * r1.extract_derivative(i).value()
                    * fj.extract_derivative(j).value();
            }
        }
        let r_val = r1.value();
        let phi_val = phi2.value();
        let defect = ((nf - 1.0) * lap_phi + 0.5 * grad_pair + r_val * phi_val).abs()
            / (1.0 + (r_val * phi_val).abs());
        Ok(IdentityPointData {
            point: p.to_vec(),
            defect,
        })
    })?;
    let sup_defect = rows.iter().fold(0.0f64, |a, r| a.max(r.defect));
    let mut aux = BTreeMap::new();
    aux.insert("precondition_residual".to_string(), pre.sup_residual);
    Ok(IdentityReport {
        id: "f1".into(),
        tol,
        sup_defect,
        pass: sup_defect <= tol,
        note: None,
        aux,
        points: rows,
    })
}

/// The submanifold identity (phi - 1) g = g(A_{V^perp} ., .) = lambda h,
/// computed unconditionally: it holds exactly when the conformal condition
/// does, and the report carries both defects so callers can check the
/// equivalence.
pub fn identity_ensays(
    surface: &Immersion,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<IdentityReport, SolitonError> {
    if points.is_empty() {
        return Err(SolitonError::EmptySamplePlan);
    }
    let n = surface.dim();
    let data = collect_ordered(points, |p| {
        let check = surface_point_check(surface, p)?;
        let frame = &check.frame;
        let g_sup = linalg::mat_sup(&frame.metric).max(f64::MIN_POSITIVE);
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let lhs = (check.phi - 1.0) * frame.metric[i][j];
                let rhs = frame.lambda * frame.second_form[i][j];
                defect = defect.max((lhs - rhs).abs());
            }
        }
        // pointwise identity: lambda kappa_i - (phi - 1) should vanish per i
        let vals: Vec<f64> = frame
            .kappas
            .iter()
            .map(|k| frame.lambda * k - (check.phi - 1.0))
            .collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
            - vals.iter().cloned().fold(f64::MAX, f64::min);
        // trace identity: phi - 1 = lambda alpha
        let e2 = (check.phi - 1.0 - frame.lambda * frame.alpha).abs();
        Ok((
            IdentityPointData {
                point: p.to_vec(),
                defect: defect / g_sup,
            },
            spread,
            e2,
            check.residual,
        ))
    })?;
    let rows: Vec<IdentityPointData> = data.iter().map(|(r, ..)| r.clone()).collect();
    let sup_defect = rows.iter().fold(0.0f64, |a, r| a.max(r.defect));
    let e1_spread = data.iter().fold(0.0f64, |a, (_, s, ..)| a.max(*s));
    let e2_max = data.iter().fold(0.0f64, |a, (_, _, e, _)| a.max(*e));
    let conformal_residual = data.iter().fold(0.0f64, |a, (.., r)| a.max(*r));
    // the identity is equivalent to the conformal condition; pass means the
    // two verdicts agree at this tolerance
    let pass = (sup_defect <= tol) == (conformal_residual <= tol);
    let mut aux = BTreeMap::new();
    aux.insert("lambda_kappa_spread_max".to_string(), e1_spread);
    aux.insert("trace_identity_defect_max".to_string(), e2_max);
    aux.insert("conformal_residual".to_string(), conformal_residual);
    Ok(IdentityReport {
        id: "ensays".into(),
        tol,
        sup_defect,
        pass,
        note: Some(format!(
            "identity defect {sup_defect:.3e}, conformal residual {conformal_residual:.3e}; \
             the two vanish together"
        )),
        aux,
        points: rows,
    })
}

/// On minimal samples phi must equal 1. Applicability requires
/// |alpha| <= tol_minimal at every sample.
pub fn check_minimal_phi1(
    surface: &Immersion,
    points: &[Vec<f64>],
    tol_minimal: f64,
    tol: f64,
) -> Result<IdentityReport, SolitonError> {
    if points.is_empty() {
        return Err(SolitonError::EmptySamplePlan);
    }
    let data = collect_ordered(points, |p| {
        let check = surface_point_check(surface, p)?;
        Ok((check.frame.alpha, check.phi, p.to_vec()))
    })?;
    let alpha_max = data.iter().fold(0.0f64, |a, (al, ..)| a.max(al.abs()));
    if alpha_max > tol_minimal {
        return Err(SolitonError::NotApplicable {
            reason: format!(
                "surface is not minimal at the samples: max |alpha| = {alpha_max:.3e} > {tol_minimal:.3e}"
            ),
        });
    }
    let rows: Vec<IdentityPointData> = data
        .iter()
        .map(|(_, phi, p)| IdentityPointData {
            point: p.clone(),
            defect: (phi - 1.0).abs(),
        })
        .collect();
    let sup_defect = rows.iter().fold(0.0f64, |a, r| a.max(r.defect));
    let mut aux = BTreeMap::new();
    aux.insert("alpha_max".to_string(), alpha_max);
    Ok(IdentityReport {
        id: "minimal_phi1".into(),
        tol,
        sup_defect,
        pass: sup_defect <= tol,
        note: None,
        aux,
        points: rows,
    })
}

/// Two-route agreement: componentwise relative defect between the
/// coordinate-formula Lie derivative and 2 g + 2 lambda h.
pub fn identity_s3(
    surface: &Immersion,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<IdentityReport, SolitonError> {
    if points.is_empty() {
        return Err(SolitonError::EmptySamplePlan);
    }
    let n = surface.dim();
    let rows = collect_ordered(points, |p| {
        let (a, b) = surface.lie_position_at(p)?;
        let scale = linalg::mat_sup(&a).max(linalg::mat_sup(&b)).max(1.0);
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                defect = defect.max((a[i][j] - b[i][j]).abs());
            }
        }
        Ok(IdentityPointData {
            point: p.to_vec(),
            defect: defect / scale,
        })
    })?;
    let sup_defect = rows.iter().fold(0.0f64, |a, r| a.max(r.defect));
    Ok(IdentityReport {
        id: "s3".into(),
        tol,
        sup_defect,
        pass: sup_defect <= tol,
        note: None,
        aux: BTreeMap::new(),
        points: rows,
    })
}

/// V^T = grad(|F|^2 / 2): the tangential position against the
/// induced-metric gradient, componentwise.
pub fn identity_potential(
    surface: &Immersion,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<IdentityReport, SolitonError> {
    if points.is_empty() {
        return Err(SolitonError::EmptySamplePlan);
    }
    let metric = surface.induced_metric();
    let f = half_norm_squared(surface);
    let n = surface.dim();
    let rows = collect_ordered(points, |p| {
        let frame = surface.frame_at(p)?;
        let sf = metric.scalar_field_at(&f, p)?;
        let scale = frame.vt_chart.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let mut defect: f64 = 0.0;
        for i in 0..n {
            defect = defect.max((frame.vt_chart[i] - sf.grad[i]).abs());
        }
        Ok(IdentityPointData {
            point: p.to_vec(),
            defect: defect / scale,
        })
    })?;
    let sup_defect = rows.iter().fold(0.0f64, |a, r| a.max(r.defect));
    Ok(IdentityReport {
        id: "potential".into(),
        tol,
        sup_defect,
        pass: sup_defect <= tol,
        note: None,
        aux: BTreeMap::new(),
        points: rows,
    })
}

/// Both readings of the Hessian-metric example: the flat-connection check
/// |d_i d_j f - g_ij| and the Levi-Civita check |hess_ij - g_ij|, each with
/// phi = 1 as claimed. Reported side by side without declaring intent.
pub fn check_hessian_conventions(
    metric: &MetricField,
    f: &Expr,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<(IdentityReport, IdentityReport), SolitonError> {
    if points.is_empty() {
        return Err(SolitonError::EmptySamplePlan);
    }
    let n = metric.dim();
    let data = collect_ordered(points, |p| {
        let gj = metric.metric_jets(p, 0)?;
        let g = tensor::jet_values(&gj);
        let g_sup = linalg::mat_sup(&g).max(f64::MIN_POSITIVE);
        let ctx = metric.eval_context(p, 2);
        let fj = eval_jet(f, &ctx)?;
        let mut flat: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dd = fj.extract_derivative(i).extract_derivative(j).value();
                flat = flat.max((dd - g[i][j]).abs());
            }
        }
        let sf = metric.scalar_field_at(f, p)?;
        let mut lc: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                lc = lc.max((sf.hess[i][j] - g[i][j]).abs());
            }
        }
        Ok((
            IdentityPointData {
                point: p.to_vec(),
                defect: flat / g_sup,
            },
            IdentityPointData {
                point: p.to_vec(),
                defect: lc / g_sup,
            },
        ))
    })?;
    let flat_rows: Vec<IdentityPointData> = data.iter().map(|(a, _)| a.clone()).collect();
    let lc_rows: Vec<IdentityPointData> = data.iter().map(|(_, b)| b.clone()).collect();
    let flat_sup = flat_rows.iter().fold(0.0f64, |a, r| a.max(r.defect));
    let lc_sup = lc_rows.iter().fold(0.0f64, |a, r| a.max(r.defect));
    Ok((
        IdentityReport {
            id: "hessian_flat".into(),
            tol,
            sup_defect: flat_sup,
            pass: flat_sup <= tol,
            note: Some("flat-connection reading: g_ij = d_i d_j f".into()),
            aux: BTreeMap::new(),
            points: flat_rows,
        },
        IdentityReport {
            id: "hessian_lc".into(),
            tol,
            sup_defect: lc_sup,
            pass: lc_sup <= tol,
            note: Some("Levi-Civita reading: g_ij = (grad grad f)_ij".into()),
            aux: BTreeMap::new(),
            points: lc_rows,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::hypersurface::DomainBox;

    fn immersion(dim: usize, comps: &[&str], domain: &[(f64, f64)]) -> Immersion {
        Immersion::new(
            dim,
            comps.iter().map(|s| parse(s).unwrap()).collect(),
            domain
                .iter()
                .map(|&(min, max)| DomainBox { min, max })
                .collect(),
            None,
        )
        .unwrap()
    }

    fn grid2(nx: usize, ny: usize, b: &[(f64, f64)]) -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                let x = b[0].0 + (b[0].1 - b[0].0) * (i as f64 + 0.5) / nx as f64;
                let y = b[1].0 + (b[1].1 - b[1].0) * (j as f64 + 0.5) / ny as f64;
                pts.push(vec![x, y]);
            }
        }
        pts
    }

    fn surface_problem(s: Immersion, flavor: Flavor, points: Vec<Vec<f64>>) -> SolitonProblem {
        SolitonProblem {
            geometry: Geometry::Surface(s),
            flavor,
            h_function: None,
            points,
            tol: TOL_SOLITON,
        }
    }

    fn torus() -> Immersion {
        immersion(
            2,
            &["(3+cos(u1))*cos(u2)", "(3+cos(u1))*sin(u2)", "sin(u1)"],
            &[(0.0, 6.3), (0.0, 6.3)],
        )
    }

    #[test]
    fn hyperplane_is_a_soliton_with_phi_one() {
        let s = immersion(2, &["u1", "u2", "5"], &[(-2.0, 2.0), (-2.0, 2.0)]);
        let pts = grid2(5, 5, &[(-1.0, 1.0), (-1.0, 1.0)]);
        let rep = check_conformal(&surface_problem(s, Flavor::Conformal, pts)).unwrap();
        assert_eq!(rep.verdict, Verdict::Soliton);
        assert!(rep.sup_residual < 1e-12);
        for p in &rep.points {
            assert!((p.phi - 1.0).abs() < 1e-12, "phi = {}", p.phi);
        }
    }

    #[test]
    fn origin_sphere_is_a_trivial_soliton() {
        let s = immersion(
            2,
            &["2*sin(u1)*cos(u2)", "2*sin(u1)*sin(u2)", "2*cos(u1)"],
            &[(0.2, 2.9), (0.1, 6.2)],
        );
        let pts = grid2(6, 6, &[(0.3, 2.8), (0.2, 6.0)]);
        let rep = check_conformal(&surface_problem(s, Flavor::Conformal, pts)).unwrap();
        assert_eq!(rep.verdict, Verdict::Soliton);
        for p in &rep.points {
            assert!(p.phi.abs() < 1e-10, "phi = {} should vanish", p.phi);
        }
    }

    #[test]
    fn torus_is_not_a_soliton() {
        let pts = grid2(6, 6, &[(0.1, 6.2), (0.1, 6.2)]);
        let rep = check_conformal(&surface_problem(torus(), Flavor::Conformal, pts)).unwrap();
        assert_eq!(rep.verdict, Verdict::NotSoliton);
        assert!(rep.sup_residual > 0.1, "residual {}", rep.sup_residual);
    }

    #[test]
    fn yamabe_on_origin_sphere_fixes_rho_to_r() {
        // n = 2 surface of radius 2: V^T = 0 forces rho = R = 0.5
        let s = immersion(
            2,
            &["2*sin(u1)*cos(u2)", "2*sin(u1)*sin(u2)", "2*cos(u1)"],
            &[(0.2, 2.9), (0.1, 6.2)],
        );
        let pts = grid2(5, 5, &[(0.3, 2.8), (0.2, 6.0)]);
        let rep = check_flavored(&surface_problem(s, Flavor::Yamabe, pts)).unwrap();
        assert_eq!(rep.verdict, Verdict::Soliton);
        assert!(
            (rep.rho.unwrap() - 0.5).abs() < 1e-10,
            "rho = {:?}",
            rep.rho
        );
        assert!(rep.sup_residual < 1e-10);
    }

    #[test]
    fn gradient_conformal_on_flat_space() {
        let m = MetricField::flat(3);
        let f = parse("0.5*(u1^2+u2^2+u3^2)").unwrap();
        let prob = SolitonProblem {
            geometry: Geometry::Intrinsic {
                metric: m,
                potential: Some(f),
                vector: None,
            },
            flavor: Flavor::GradientConformal,
            h_function: None,
            points: vec![vec![0.1, 0.2, 0.3], vec![-1.0, 0.5, 2.0]],
            tol: TOL_SOLITON,
        };
        let rep = check_flavored(&prob).unwrap();
        assert_eq!(rep.verdict, Verdict::Soliton);
        for p in &rep.points {
            assert!((p.phi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_equals_lie_route_on_flat_space() {
        // gradient_conformal(g, f) equals conformal(g, v = grad f) on flat space
        let m = MetricField::flat(2);
        let f = parse("0.3*u1^2+0.4*u2^2+0.1*u1*u2").unwrap();
        let grad = [f.diff("u1"), f.diff("u2")];
        let points: Vec<Vec<f64>> = vec![vec![0.3, -0.8], vec![1.2, 0.4], vec![-0.5, -0.1]];
        let grad_prob = SolitonProblem {
            geometry: Geometry::Intrinsic {
                metric: m.clone(),
                potential: Some(f),
                vector: None,
            },
            flavor: Flavor::GradientConformal,
            h_function: None,
            points: points.clone(),
            tol: TOL_SOLITON,
        };
        let lie_prob = SolitonProblem {
            geometry: Geometry::Intrinsic {
                metric: m,
                potential: None,
                vector: Some(grad.to_vec()),
            },
            flavor: Flavor::Conformal,
            h_function: None,
            points,
            tol: TOL_SOLITON,
        };
        let a = check_flavored(&grad_prob).unwrap();
        let b = check_conformal(&lie_prob).unwrap();
        for (pa, pb) in a.points.iter().zip(&b.points) {
            assert!((pa.phi - pb.phi).abs() < 1e-10);
            assert!((pa.residual - pb.residual).abs() < 1e-10);
        }
    }

    #[test]
    fn almost_yamabe_matches_conformal_verdict() {
        let pts = grid2(4, 4, &[(0.1, 6.2), (0.1, 6.2)]);
        let almost =
            check_flavored(&surface_problem(torus(), Flavor::AlmostYamabe, pts.clone())).unwrap();
        let conf = check_conformal(&surface_problem(torus(), Flavor::Conformal, pts)).unwrap();
        assert_eq!(almost.verdict, conf.verdict);
        assert!((almost.sup_residual - conf.sup_residual).abs() < 1e-12);
        assert!(almost.points.iter().all(|p| p.rho_pointwise.is_some()));
    }

    #[test]
    fn concurrent_field_checks() {
        let m = MetricField::flat(2);
        let pts = vec![vec![0.3, 0.9], vec![-1.0, 0.4]];
        let pos = [parse("u1").unwrap(), parse("u2").unwrap()];
        let rep = check_concurrent(&m, &pos, &pts, 1e-10).unwrap();
        assert!(rep.pass);
        assert!(rep.sup_defect < 1e-13);
        let twice = [parse("2*u1").unwrap(), parse("2*u2").unwrap()];
        let rep = check_concurrent(&m, &twice, &pts, 1e-10).unwrap();
        assert!(!rep.pass);
        assert!((rep.sup_defect - 1.0).abs() < 1e-12);
        // position field in polar coordinates: chart components (u1, 0)
        let polar = MetricField::from_lower_triangular(
            2,
            vec![
                parse("1").unwrap(),
                parse("0").unwrap(),
                parse("u1^2").unwrap(),
            ],
        )
        .unwrap();
        let v = [parse("u1").unwrap(), parse("0").unwrap()];
        let rep = check_concurrent(&polar, &v, &[vec![0.8, 0.3], vec![1.7, 2.0]], 1e-10).unwrap();
        assert!(rep.pass, "defect {}", rep.sup_defect);
    }

    #[test]
    fn f1_holds_on_flat_quadratic() {
        let m = MetricField::flat(3);
        let f = parse("0.5*(u1^2+u2^2+u3^2)").unwrap();
        let pts = vec![vec![0.2, -0.4, 0.9], vec![1.0, 0.0, -1.0]];
        let rep = identity_f1(&m, &f, &pts, TOL_SOLITON).unwrap();
        assert!(rep.pass);
        assert!(rep.sup_defect < 1e-12, "defect {}", rep.sup_defect);
    }

    #[test]
    fn f1_holds_on_warped_cosh_cylinder() {
        let m = MetricField::from_lower_triangular(
            3,
            vec![
                parse("1").unwrap(),
                parse("0").unwrap(),
                parse("cosh(u1)^2").unwrap(),
                parse("0").unwrap(),
                parse("0").unwrap(),
                parse("cosh(u1)^2*sin(u2)^2").unwrap(),
            ],
        )
        .unwrap();
        let f = parse("sinh(u1)").unwrap();
        let pts = vec![
            vec![0.3, 1.0, 0.7],
            vec![-0.6, 0.8, 2.0],
            vec![0.9, 1.4, 4.0],
        ];
        let rep = identity_f1(&m, &f, &pts, TOL_SOLITON).unwrap();
        assert!(rep.pass, "defect {}", rep.sup_defect);
        assert!(rep.sup_defect < 1e-9, "defect {}", rep.sup_defect);
    }

    #[test]
    fn f1_rejects_non_soliton_input() {
        let m = MetricField::flat(2);
        let f = parse("u1^3").unwrap();
        let pts = vec![vec![0.5, 0.5]];
        match identity_f1(&m, &f, &pts, TOL_SOLITON) {
            Err(SolitonError::NotApplicable { .. }) => {}
            other => panic!("expected not-applicable, got {other:?}"),
        }
    }

    #[test]
    fn ensays_vanishes_exactly_on_solitons_and_tracks_conformal() {
        let plane = immersion(2, &["u1", "u2", "5"], &[(-2.0, 2.0), (-2.0, 2.0)]);
        let pts = grid2(4, 4, &[(-1.0, 1.0), (-1.0, 1.0)]);
        let rep = identity_ensays(&plane, &pts, TOL_SOLITON).unwrap();
        assert!(rep.pass);
        assert!(rep.sup_defect < 1e-12);

        let pts = grid2(4, 4, &[(0.1, 6.2), (0.1, 6.2)]);
        let rep = identity_ensays(&torus(), &pts, TOL_SOLITON).unwrap();
        // defect and conformal residual are both large: equivalence holds
        assert!(rep.pass, "iff-agreement should hold: {rep:?}");
        assert!(rep.sup_defect > 1e-3);
        assert!(rep.aux["conformal_residual"] > 1e-3);
        // trace identity phi - 1 = lambda alpha is universal
        assert!(rep.aux["trace_identity_defect_max"] < 1e-9);
    }

    #[test]
    fn minimal_surfaces_have_phi_one() {
        let catenoid = immersion(
            2,
            &["cosh(u1)*cos(u2)", "cosh(u1)*sin(u2)", "u1"],
            &[(-1.5, 1.5), (0.0, 6.3)],
        );
        let pts = grid2(5, 5, &[(-1.0, 1.0), (0.2, 6.0)]);
        let rep = check_minimal_phi1(&catenoid, &pts, TOL_MINIMAL, 1e-8).unwrap();
        assert!(rep.pass, "catenoid: defect {}", rep.sup_defect);
        assert!(rep.sup_defect < 1e-9);

        let helicoid = immersion(
            2,
            &["u1*cos(u2)", "u1*sin(u2)", "u2"],
            &[(-2.0, 2.0), (-3.0, 3.0)],
        );
        let pts = grid2(5, 5, &[(0.3, 1.8), (-2.5, 2.5)]);
        let rep = check_minimal_phi1(&helicoid, &pts, TOL_MINIMAL, 1e-8).unwrap();
        assert!(rep.pass, "helicoid: defect {}", rep.sup_defect);

        // non-minimal input is explicitly not applicable
        let sphere = immersion(
            2,
            &["2*sin(u1)*cos(u2)", "2*sin(u1)*sin(u2)", "2*cos(u1)"],
            &[(0.2, 2.9), (0.1, 6.2)],
        );
        let pts = grid2(3, 3, &[(0.4, 2.6), (0.3, 5.9)]);
        assert!(matches!(
            check_minimal_phi1(&sphere, &pts, TOL_MINIMAL, 1e-8),
            Err(SolitonError::NotApplicable { .. })
        ));
    }

    #[test]
    fn h_almost_validation() {
        let m = MetricField::flat(3);
        let f = parse("-1*log(u1^2+u2^2+u3^2+1)").unwrap();
        let h = parse("-1/(u1^2+u2^2+u3^2+1)").unwrap();
        let prob = SolitonProblem {
            geometry: Geometry::Intrinsic {
                metric: m.clone(),
                potential: Some(f.clone()),
                vector: None,
            },
            flavor: Flavor::HAlmost,
            h_function: Some(h),
            points: vec![vec![0.3, 0.2, 0.1], vec![1.0, -0.5, 0.7]],
            tol: TOL_SOLITON,
        };
        let rep = check_flavored(&prob).unwrap();
        assert!(rep.rho.is_some());
        assert!(rep.points.iter().all(|p| p.rho_pointwise.is_some()));

        // sign-changing h rejected (h = u1 - 0.5 flips between the samples)
        let bad = SolitonProblem {
            h_function: Some(parse("u1-0.5").unwrap()),
            ..prob
        };
        assert!(matches!(
            check_flavored(&bad),
            Err(SolitonError::InvalidH { .. })
        ));
    }

    #[test]
    fn k_yamabe_dimension_guard() {
        let m = MetricField::flat(2);
        let prob = SolitonProblem {
            geometry: Geometry::Intrinsic {
                metric: m,
                potential: Some(parse("u1^2").unwrap()),
                vector: None,
            },
            flavor: Flavor::KYamabe(1),
            h_function: None,
            points: vec![vec![0.1, 0.2]],
            tol: TOL_SOLITON,
        };
        assert!(matches!(
            check_flavored(&prob),
            Err(SolitonError::KYamabeDimension)
        ));
    }

    #[test]
    fn hessian_example_two_conventions() {
        // g = dd log(exp(x) + exp(y) + 1) is positive definite on R^2;
        // the flat reading is exact by construction, the Levi-Civita
        // reading has a genuine defect
        let s = "exp(u1)+exp(u2)+1";
        let g11 = format!("exp(u1)*(exp(u2)+1)/({s})^2");
        let g21 = format!("-exp(u1)*exp(u2)/({s})^2");
        let g22 = format!("exp(u2)*(exp(u1)+1)/({s})^2");
        let m = MetricField::from_lower_triangular(
            2,
            vec![
                parse(&g11).unwrap(),
                parse(&g21).unwrap(),
                parse(&g22).unwrap(),
            ],
        )
        .unwrap();
        let f = parse(&format!("log({s})")).unwrap();
        let pts = vec![vec![0.0, 0.0], vec![0.5, -0.3], vec![-1.0, 0.8]];
        let (flat, lc) = check_hessian_conventions(&m, &f, &pts, TOL_SOLITON).unwrap();
        assert!(flat.pass, "flat defect {}", flat.sup_defect);
        assert!(flat.sup_defect < 1e-11);
        assert!(!lc.pass, "lc defect {}", lc.sup_defect);
        assert!(lc.sup_defect > 1e-2);
    }

    #[test]
    fn s3_and_potential_identities_on_gallery_surfaces() {
        let pts = grid2(5, 5, &[(0.1, 6.2), (0.1, 6.2)]);
        let s3 = identity_s3(&torus(), &pts, 1e-8).unwrap();
        assert!(s3.pass, "s3 defect {}", s3.sup_defect);
        let pot = identity_potential(&torus(), &pts, 1e-9).unwrap();
        assert!(pot.pass, "potential defect {}", pot.sup_defect);
    }

    #[test]
    fn ensays_iff_agreement_on_a_random_surface_family() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        let pts = grid2(4, 4, &[(-0.8, 0.8), (-0.8, 0.8)]);
        for _ in 0..20 {
            let c: Vec<f64> = (0..5).map(|_| rng.random_range(-0.5..0.5)).collect();
            let z = format!(
                "({})*u1^2+({})*u1*u2+({})*u2^2+({})*u1+({})",
                c[0], c[1], c[2], c[3], c[4]
            );
            let s = immersion(2, &["u1", "u2", &z], &[(-1.0, 1.0), (-1.0, 1.0)]);
            let rep = identity_ensays(&s, &pts, 1e-8).unwrap();
            assert!(
                rep.pass,
                "iff-agreement at 1e-8 for z = {z}: defect {:.3e}, residual {:.3e}",
                rep.sup_defect, rep.aux["conformal_residual"]
            );
        }
    }

    #[test]
    fn verdicts_are_scale_invariant() {
        // replacing F by c F leaves the Soliton/NotSoliton verdict unchanged
        for scale in [0.5, 3.0] {
            let torus_scaled = immersion(
                2,
                &[
                    &format!("{scale}*((3+cos(u1))*cos(u2))"),
                    &format!("{scale}*((3+cos(u1))*sin(u2))"),
                    &format!("{scale}*sin(u1)"),
                ],
                &[(0.0, 6.3), (0.0, 6.3)],
            );
            let pts = grid2(5, 5, &[(0.1, 6.2), (0.1, 6.2)]);
            let rep =
                check_conformal(&surface_problem(torus_scaled, Flavor::Conformal, pts)).unwrap();
            assert_eq!(rep.verdict, Verdict::NotSoliton, "scale {scale}");

            let sphere_scaled = immersion(
                2,
                &[
                    &format!("{scale}*2*sin(u1)*cos(u2)"),
                    &format!("{scale}*2*sin(u1)*sin(u2)"),
                    &format!("{scale}*2*cos(u1)"),
                ],
                &[(0.2, 2.9), (0.1, 6.2)],
            );
            let pts = grid2(5, 5, &[(0.3, 2.8), (0.2, 6.0)]);
            let rep =
                check_conformal(&surface_problem(sphere_scaled, Flavor::Conformal, pts)).unwrap();
            assert_eq!(rep.verdict, Verdict::Soliton, "scale {scale}");
        }
    }

    #[test]
    fn f1_trivial_on_constant_potential() {
        // constant f on a curved metric: phi = 0, grad f = 0, defect 0
        let m = MetricField::from_lower_triangular(
            3,
            vec![
                parse("1").unwrap(),
                parse("0").unwrap(),
                parse("sin(u1)^2").unwrap(),
                parse("0").unwrap(),
                parse("0").unwrap(),
                parse("sin(u1)^2*sin(u2)^2").unwrap(),
            ],
        )
        .unwrap();
        let f = parse("1").unwrap();
        let rep = identity_f1(&m, &f, &[vec![0.8, 1.1, 0.4]], TOL_SOLITON).unwrap();
        assert!(rep.pass);
        assert!(rep.sup_defect < 1e-14, "defect {}", rep.sup_defect);
    }

    #[test]
    fn minimal_phi1_on_plane_through_origin() {
        let s = immersion(2, &["u1", "u2", "0"], &[(-2.0, 2.0), (-2.0, 2.0)]);
        let pts = grid2(4, 4, &[(-1.5, 1.5), (-1.5, 1.5)]);
        let rep = check_minimal_phi1(&s, &pts, TOL_MINIMAL, 1e-8).unwrap();
        assert!(rep.pass);
        assert!(rep.sup_defect < 1e-13, "phi = 1 exactly on a plane");
    }

    #[test]
    fn empty_sample_plan_rejected() {
        let m = MetricField::flat(2);
        let prob = SolitonProblem {
            geometry: Geometry::Intrinsic {
                metric: m,
                potential: Some(parse("u1^2").unwrap()),
                vector: None,
            },
            flavor: Flavor::GradientConformal,
            h_function: None,
            points: vec![],
            tol: TOL_SOLITON,
        };
        assert!(matches!(
            check_flavored(&prob),
            Err(SolitonError::EmptySamplePlan)
        ));
    }
}
