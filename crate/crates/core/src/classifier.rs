//! Decision procedure for the classification theorem: a hypersurface whose
//! tangential-position field satisfies the conformal-soliton condition is
//! decided to lie in a hyperplane, a cone with vertex at the origin, or a
//! hypersphere, with recovered parameters.
//!
//! The pipeline mirrors the cases of the theorem but replaces the
//! connectedness arguments with explicit consistency statistics: where the
//! proof would conclude "constant", the classifier demands a small standard
//! deviation and otherwise returns Undetermined. Mixed support-function
//! signatures (the topological case of the proof) are always reported as
//! Undetermined with diagnostics, never silently upgraded.

use serde::Serialize;
use thiserror::Error;

use crate::hypersurface::Immersion;
use crate::linalg;
use crate::soliton::{self, SolitonError, SolitonPointData};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Soliton(#[from] SolitonError),
    #[error("empty sample plan")]
    EmptySamplePlan,
    #[error("too many dropped points: {dropped} of {total}")]
    TooManyDropped { dropped: usize, total: usize },
}

/// Tolerances for the classification pipeline; all relative.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyConfig {
    pub tol_soliton: f64,
    pub tol_lambda: f64,
    pub tol_alpha: f64,
    pub tol_umbilic: f64,
    pub tol_consistency: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            tol_soliton: 1e-7,
            tol_lambda: 1e-7,
            tol_alpha: 1e-8,
            tol_umbilic: 1e-7,
            tol_consistency: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum VerdictTag {
    Hyperplane { normal: Vec<f64>, offset: f64 },
    Cone {},
    Hypersphere { center: Vec<f64>, radius: f64 },
    NotSoliton {},
    Undetermined {},
}

impl VerdictTag {
    pub fn name(&self) -> &'static str {
        match self {
            VerdictTag::Hyperplane { .. } => "hyperplane",
            VerdictTag::Cone {} => "cone",
            VerdictTag::Hypersphere { .. } => "hypersphere",
            VerdictTag::NotSoliton {} => "not_soliton",
            VerdictTag::Undetermined {} => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub sup_residual: f64,
    pub max_abs_lambda: f64,
    pub min_abs_lambda: f64,
    pub umbilic_spread_max: f64,
    pub alpha_mean: f64,
    pub alpha_stddev: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_stddev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_stddev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_stddev: Option<f64>,
    pub dropped: usize,
    pub total: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DroppedPoint {
    pub point: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationVerdict {
    #[serde(flatten)]
    pub tag: VerdictTag,
    pub diagnostics: Diagnostics,
}

/// Classification plus the per-point table and dropped-point list that
/// reporting layers consume.
pub fn classify_detailed(
    surface: &Immersion,
    points: &[Vec<f64>],
    cfg: &ClassifyConfig,
) -> Result<
    (
        ClassificationVerdict,
        Vec<SolitonPointData>,
        Vec<DroppedPoint>,
    ),
    ClassifyError,
> {
    use rayon::prelude::*;
    if points.is_empty() {
        return Err(ClassifyError::EmptySamplePlan);
    }
    let total = points.len();
    let results: Vec<_> = points
        .par_iter()
        .map(|p| soliton::surface_point_check(surface, p))
        .collect();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(check) => kept.push(check),
            Err(e) => dropped.push(DroppedPoint {
                point: p.clone(),
                reason: e.to_string(),
            }),
        }
    }
    if dropped.len() * 5 > total {
        return Err(ClassifyError::TooManyDropped {
            dropped: dropped.len(),
            total,
        });
    }
    if kept.is_empty() {
        return Err(ClassifyError::TooManyDropped {
            dropped: dropped.len(),
            total,
        });
    }

    let rows: Vec<SolitonPointData> = kept
        .iter()
        .map(|c| SolitonPointData {
            point: c.frame.point.clone(),
            phi: c.phi,
            residual: c.residual,
            rho_pointwise: None,
            lambda: Some(c.frame.lambda),
            alpha: Some(c.frame.alpha),
            kappa_min: Some(c.frame.kappas[0]),
            kappa_max: Some(c.frame.kappas[c.frame.kappas.len() - 1]),
        })
        .collect();

    let sup_residual = kept.iter().fold(0.0f64, |a, c| a.max(c.residual));
    let lambdas: Vec<f64> = kept.iter().map(|c| c.frame.lambda).collect();
    let alphas: Vec<f64> = kept.iter().map(|c| c.frame.alpha).collect();
    let abs_lambdas: Vec<f64> = lambdas.iter().map(|l| l.abs()).collect();
    let spread_max = kept.iter().fold(0.0f64, |a, c| {
        let s = (c.frame.kappas[c.frame.kappas.len() - 1] - c.frame.kappas[0])
            / (1.0 + c.frame.alpha.abs());
        a.max(s)
    });
    let position_scale = kept
        .iter()
        .fold(0.0f64, |a, c| a.max(linalg::norm(&c.frame.position)));

    let mut diag = Diagnostics {
        sup_residual,
        max_abs_lambda: abs_lambdas.iter().cloned().fold(0.0, f64::max),
        min_abs_lambda: abs_lambdas.iter().cloned().fold(f64::MAX, f64::min),
        umbilic_spread_max: spread_max,
        alpha_mean: linalg::mean(&alphas),
        alpha_stddev: linalg::stddev(&alphas),
        lambda_stddev: None,
        normal_stddev: None,
        center_stddev: None,
        dropped: dropped.len(),
        total,
        notes: Vec::new(),
    };

    // (1) the soliton gate
    if sup_residual > cfg.tol_soliton {
        diag.notes
            .push("conformal residual above tolerance: not a soliton".into());
        return Ok((
            ClassificationVerdict {
                tag: VerdictTag::NotSoliton {},
                diagnostics: diag,
            },
            rows,
            dropped,
        ));
    }

    // (2) support-function signature
    let lambda_scale = cfg.tol_lambda * position_scale.max(f64::MIN_POSITIVE);
    let small: Vec<bool> = abs_lambdas.iter().map(|l| *l <= lambda_scale).collect();
    let n_small = small.iter().filter(|b| **b).count();
    if n_small == small.len() {
        // every sample has the position tangent: a cone through the origin
        let alpha_max = alphas.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if alpha_max <= cfg.tol_alpha {
            diag.notes
                .push("plane through the origin (a conic hypersurface)".into());
        }
        return Ok((
            ClassificationVerdict {
                tag: VerdictTag::Cone {},
                diagnostics: diag,
            },
            rows,
            dropped,
        ));
    }
    if n_small > 0 {
        // the topological case: flagged, never resolved from finite samples
        diag.notes.push(format!(
            "mixed support-function signature ({n_small} of {} samples have lambda near 0)",
            small.len()
        ));
        return Ok((
            ClassificationVerdict {
                tag: VerdictTag::Undetermined {},
                diagnostics: diag,
            },
            rows,
            dropped,
        ));
    }

    // (3) umbilicity is forced by the identity phi - 1 = lambda kappa_i
    if spread_max > cfg.tol_umbilic {
        diag.notes.push(format!(
            "expected total umbilicity, found principal-curvature spread {spread_max:.3e}"
        ));
        return Ok((
            ClassificationVerdict {
                tag: VerdictTag::Undetermined {},
                diagnostics: diag,
            },
            rows,
            dropped,
        ));
    }

    let alpha_abs_mean = linalg::mean(&alphas.iter().map(|a| a.abs()).collect::<Vec<_>>());
    if alpha_abs_mean <= cfg.tol_alpha {
        // hyperplane branch: align normals to the first sample before averaging
        let first_normal = kept[0].frame.normal.clone();
        let aligned: Vec<(Vec<f64>, f64)> = kept
            .iter()
            .map(|c| {
                let sign = if linalg::dot(&c.frame.normal, &first_normal) < 0.0 {
                    -1.0
                } else {
                    1.0
                };
                (
                    c.frame.normal.iter().map(|x| sign * x).collect(),
                    sign * c.frame.lambda,
                )
            })
            .collect();
        let normals: Vec<Vec<f64>> = aligned.iter().map(|(n, _)| n.clone()).collect();
        let offsets: Vec<f64> = aligned.iter().map(|(_, l)| *l).collect();
        let normal_stddev = linalg::vec_spread(&normals);
        let lambda_stddev = linalg::stddev(&offsets);
        diag.normal_stddev = Some(normal_stddev);
        diag.lambda_stddev = Some(lambda_stddev);
        let offset = linalg::mean(&offsets);
        if normal_stddev > cfg.tol_consistency
            || lambda_stddev > cfg.tol_consistency * (1.0 + offset.abs())
        {
            diag.notes
                .push("normal or support statistics inconsistent with a hyperplane".into());
            return Ok((
                ClassificationVerdict {
                    tag: VerdictTag::Undetermined {},
                    diagnostics: diag,
                },
                rows,
                dropped,
            ));
        }
        let mean_normal = linalg::vec_mean(&normals);
        let len = linalg::norm(&mean_normal);
        let normal: Vec<f64> = mean_normal.iter().map(|x| x / len).collect();
        return Ok((
            ClassificationVerdict {
                tag: VerdictTag::Hyperplane { normal, offset },
                diagnostics: diag,
            },
            rows,
            dropped,
        ));
    }

    // (4) hypersphere branch: F + N / alpha is constant on a sphere
    if alphas.iter().any(|a| a.abs() < 1e-14) {
        diag.notes
            .push("mean curvature vanishes at a sample inside the sphere branch".into());
        return Ok((
            ClassificationVerdict {
                tag: VerdictTag::Undetermined {},
                diagnostics: diag,
            },
            rows,
            dropped,
        ));
    }
    let centers: Vec<Vec<f64>> = kept
        .iter()
        .map(|c| {
            c.frame
                .position
                .iter()
                .zip(&c.frame.normal)
                .map(|(f, n)| f + n / c.frame.alpha)
                .collect()
        })
        .collect();
    let radius = 1.0 / alpha_abs_mean;
    let center_stddev = linalg::vec_spread(&centers);
    diag.center_stddev = Some(center_stddev);
    if center_stddev > cfg.tol_consistency * radius {
        diag.notes
            .push("center estimates inconsistent with a hypersphere".into());
        return Ok((
            ClassificationVerdict {
                tag: VerdictTag::Undetermined {},
                diagnostics: diag,
            },
            rows,
            dropped,
        ));
    }
    let center = linalg::vec_mean(&centers);
    Ok((
        ClassificationVerdict {
            tag: VerdictTag::Hypersphere { center, radius },
            diagnostics: diag,
        },
        rows,
        dropped,
    ))
}

/// Classify a hypersurface from samples. See [`classify_detailed`] for the
/// variant that also returns the per-point table.
pub fn classify(
    surface: &Immersion,
    points: &[Vec<f64>],
    cfg: &ClassifyConfig,
) -> Result<ClassificationVerdict, ClassifyError> {
    classify_detailed(surface, points, cfg).map(|(v, _, _)| v)
}

/// Principal-curvature spread (kappa_max - kappa_min) / (1 + |alpha|) at
/// each point, plus the maximum.
pub fn umbilicity_stats(
    surface: &Immersion,
    points: &[Vec<f64>],
) -> Result<(Vec<(Vec<f64>, f64)>, f64), ClassifyError> {
    if points.is_empty() {
        return Err(ClassifyError::EmptySamplePlan);
    }
    let mut out = Vec::with_capacity(points.len());
    let mut max_spread = 0.0f64;
    for p in points {
        let frame = surface.frame_at(p).map_err(SolitonError::from)?;
        let spread =
            (frame.kappas[frame.kappas.len() - 1] - frame.kappas[0]) / (1.0 + frame.alpha.abs());
        max_spread = max_spread.max(spread);
        out.push((p.clone(), spread));
    }
    Ok((out, max_spread))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Expr};
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

    fn offcenter_sphere() -> Immersion {
        immersion(
            2,
            &["1+2*sin(u1)*cos(u2)", "2*sin(u1)*sin(u2)", "2*cos(u1)"],
            &[(0.2, 2.9), (0.0, 6.3)],
        )
    }

    #[test]
    fn sphere_recovered_with_center_and_radius() {
        let pts = grid2(14, 15, &[(0.3, 2.8), (0.1, 6.2)]);
        let v = classify(&offcenter_sphere(), &pts, &ClassifyConfig::default()).unwrap();
        match &v.tag {
            VerdictTag::Hypersphere { center, radius } => {
                assert!((center[0] - 1.0).abs() < 1e-6, "center {center:?}");
                assert!(center[1].abs() < 1e-6 && center[2].abs() < 1e-6);
                assert!((radius - 2.0).abs() < 1e-6, "radius {radius}");
            }
            other => panic!("expected hypersphere, got {other:?}"),
        }
        assert!(v.diagnostics.center_stddev.unwrap() < 1e-8);
    }

    #[test]
    fn plane_recovered_with_normal_and_offset() {
        let s = immersion(2, &["u1", "u2", "5"], &[(-2.0, 2.0), (-2.0, 2.0)]);
        let pts = grid2(10, 10, &[(-1.5, 1.5), (-1.5, 1.5)]);
        let v = classify(&s, &pts, &ClassifyConfig::default()).unwrap();
        match &v.tag {
            VerdictTag::Hyperplane { normal, offset } => {
                assert!(normal[0].abs() < 1e-8 && normal[1].abs() < 1e-8);
                assert!((normal[2].abs() - 1.0).abs() < 1e-8);
                // sign pairing: <normal, x> = offset on the plane
                assert!((normal[2] * 5.0 - offset).abs() < 1e-8);
                assert!((offset.abs() - 5.0).abs() < 1e-8);
            }
            other => panic!("expected hyperplane, got {other:?}"),
        }
    }

    #[test]
    fn cone_detected_by_vanishing_support() {
        let s = immersion(
            2,
            &["u1*cos(u2)", "u1*sin(u2)", "2*u1"],
            &[(0.5, 2.0), (0.0, 6.3)],
        );
        let pts = grid2(8, 8, &[(0.6, 1.9), (0.1, 6.2)]);
        let v = classify(&s, &pts, &ClassifyConfig::default()).unwrap();
        assert_eq!(v.tag, VerdictTag::Cone {});
        assert!(v.diagnostics.notes.is_empty(), "a true cone, not a plane");
    }

    #[test]
    fn plane_through_origin_is_a_cone_with_note() {
        let s = immersion(2, &["u1", "u2", "0"], &[(-2.0, 2.0), (-2.0, 2.0)]);
        let pts = grid2(6, 6, &[(-1.5, 1.5), (-1.5, 1.5)]);
        let v = classify(&s, &pts, &ClassifyConfig::default()).unwrap();
        assert_eq!(v.tag, VerdictTag::Cone {});
        assert!(v
            .diagnostics
            .notes
            .iter()
            .any(|n| n.contains("plane through the origin")));
    }

    #[test]
    fn torus_rejected_at_the_soliton_gate() {
        let s = immersion(
            2,
            &["(3+cos(u1))*cos(u2)", "(3+cos(u1))*sin(u2)", "sin(u1)"],
            &[(0.0, 6.3), (0.0, 6.3)],
        );
        let pts = grid2(8, 8, &[(0.1, 6.2), (0.1, 6.2)]);
        let v = classify(&s, &pts, &ClassifyConfig::default()).unwrap();
        assert_eq!(v.tag, VerdictTag::NotSoliton {});
        assert!(v.diagnostics.sup_residual > 1e-3);
    }

    #[test]
    fn random_graph_rejected_at_the_soliton_gate() {
        let s = immersion(
            2,
            &["u1", "u2", "0.4*u1^2-0.3*u2^2+0.2*u1*u2+1"],
            &[(-1.0, 1.0), (-1.0, 1.0)],
        );
        let pts = grid2(7, 7, &[(-0.9, 0.9), (-0.9, 0.9)]);
        let v = classify(&s, &pts, &ClassifyConfig::default()).unwrap();
        assert_eq!(v.tag, VerdictTag::NotSoliton {});
    }

    #[test]
    fn rotation_invariance_of_verdict_and_parameters() {
        // rotate the off-center sphere by a fixed rotation about z then x
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let (c2, s2) = (0.3f64.cos(), 0.3f64.sin());
        // R = Rx(0.3) * Rz(0.6)
        let r = [[c, -s, 0.0], [c2 * s, c2 * c, -s2], [s2 * s, s2 * c, c2]];
        let base = ["1+2*sin(u1)*cos(u2)", "2*sin(u1)*sin(u2)", "2*cos(u1)"];
        let comps: Vec<Expr> = r
            .iter()
            .map(|row| {
                let mut acc = Expr::Num(0.0);
                for (coef, comp) in row.iter().zip(&base) {
                    acc = Expr::add(acc, Expr::mul(Expr::num(*coef), parse(comp).unwrap()));
                }
                acc
            })
            .collect();
        let rotated = Immersion::new(
            2,
            comps,
            vec![
                DomainBox { min: 0.2, max: 2.9 },
                DomainBox { min: 0.0, max: 6.3 },
            ],
            None,
        )
        .unwrap();
        let pts = grid2(12, 13, &[(0.3, 2.8), (0.1, 6.2)]);
        let v1 = classify(&offcenter_sphere(), &pts, &ClassifyConfig::default()).unwrap();
        let v2 = classify(&rotated, &pts, &ClassifyConfig::default()).unwrap();
        match (&v1.tag, &v2.tag) {
            (
                VerdictTag::Hypersphere {
                    center: c1,
                    radius: r1,
                },
                VerdictTag::Hypersphere {
                    center: c2v,
                    radius: r2,
                },
            ) => {
                assert!((r1 - r2).abs() < 1e-6);
                for i in 0..3 {
                    let rc: f64 = (0..3).map(|j| r[i][j] * c1[j]).sum();
                    assert!((rc - c2v[i]).abs() < 1e-6, "rotated center component {i}");
                }
            }
            other => panic!("expected two hyperspheres, got {other:?}"),
        }
    }

    #[test]
    fn scaling_covariance_of_radius() {
        let scaled = immersion(
            2,
            &[
                "3*(1+2*sin(u1)*cos(u2))",
                "3*(2*sin(u1)*sin(u2))",
                "3*(2*cos(u1))",
            ],
            &[(0.2, 2.9), (0.0, 6.3)],
        );
        let pts = grid2(12, 13, &[(0.3, 2.8), (0.1, 6.2)]);
        let v = classify(&scaled, &pts, &ClassifyConfig::default()).unwrap();
        match &v.tag {
            VerdictTag::Hypersphere { center, radius } => {
                assert!((radius - 6.0).abs() < 1e-6 * 6.0);
                assert!((center[0] - 3.0).abs() < 1e-6);
            }
            other => panic!("expected hypersphere, got {other:?}"),
        }
    }

    #[test]
    fn umbilicity_stats_separate_spheres_from_tori() {
        let pts = grid2(5, 5, &[(0.4, 2.7), (0.2, 6.1)]);
        let (_, sphere_spread) = umbilicity_stats(&offcenter_sphere(), &pts).unwrap();
        assert!(sphere_spread < 1e-10, "spread {sphere_spread}");
        let torus = immersion(
            2,
            &["(3+cos(u1))*cos(u2)", "(3+cos(u1))*sin(u2)", "sin(u1)"],
            &[(0.0, 6.3), (0.0, 6.3)],
        );
        let pts = grid2(5, 5, &[(0.1, 6.2), (0.1, 6.2)]);
        let (_, torus_spread) = umbilicity_stats(&torus, &pts).unwrap();
        assert!(torus_spread >= 0.5, "spread {torus_spread}");
        let plane = immersion(2, &["u1", "u2", "5"], &[(-2.0, 2.0), (-2.0, 2.0)]);
        let (rows, plane_spread) =
            umbilicity_stats(&plane, &grid2(3, 3, &[(-1.0, 1.0), (-1.0, 1.0)])).unwrap();
        assert!(plane_spread < 1e-12);
        assert_eq!(rows.len(), 9);
    }

    #[test]
    fn mixed_support_signature_is_flagged_not_resolved() {
        // with a deliberately loose lambda threshold, an off-center sphere
        // has samples on both sides of it: the topological case is reported
        // as undetermined, never upgraded
        let cfg = ClassifyConfig {
            tol_lambda: 0.4,
            ..ClassifyConfig::default()
        };
        let pts = grid2(10, 10, &[(0.3, 2.8), (0.1, 6.2)]);
        let v = classify(&offcenter_sphere(), &pts, &cfg).unwrap();
        assert_eq!(v.tag, VerdictTag::Undetermined {});
        assert!(v
            .diagnostics
            .notes
            .iter()
            .any(|n| n.contains("mixed support-function signature")));
    }

    #[test]
    fn umbilicity_failure_is_undetermined() {
        // paraboloid shifted off the origin: passes a loosened soliton gate
        // but is nowhere umbilical
        let s = immersion(2, &["u1", "u2", "5+0.3*u1^2"], &[(-1.0, 1.0), (-1.0, 1.0)]);
        let cfg = ClassifyConfig {
            tol_soliton: 1e3,
            ..ClassifyConfig::default()
        };
        let pts = grid2(6, 6, &[(-0.9, 0.9), (-0.9, 0.9)]);
        let v = classify(&s, &pts, &cfg).unwrap();
        assert_eq!(v.tag, VerdictTag::Undetermined {});
        assert!(v.diagnostics.notes.iter().any(|n| n.contains("umbilicity")));
        assert!(v.diagnostics.umbilic_spread_max > 0.1);
    }

    #[test]
    fn dropped_points_counted_and_budgeted() {
        // exclusion predicate removes a disk; those points are dropped with
        // a reason rather than failing the run
        let s = Immersion::new(
            2,
            vec![
                parse("u1").unwrap(),
                parse("u2").unwrap(),
                parse("5").unwrap(),
            ],
            vec![
                DomainBox {
                    min: -2.0,
                    max: 2.0,
                },
                DomainBox {
                    min: -2.0,
                    max: 2.0,
                },
            ],
            Some(parse("u1^2+u2^2-0.5").unwrap()),
        )
        .unwrap();
        let pts = grid2(8, 8, &[(-1.5, 1.5), (-1.5, 1.5)]);
        let (v, rows, dropped) = classify_detailed(&s, &pts, &ClassifyConfig::default()).unwrap();
        assert!(matches!(v.tag, VerdictTag::Hyperplane { .. }));
        assert!(!dropped.is_empty());
        assert_eq!(rows.len() + dropped.len(), 64);
        assert!(dropped.iter().all(|d| d.reason.contains("excluded")));

        // shrinking the domain so most points fail trips the 20% budget
        let tiny = grid2(8, 8, &[(-0.6, 0.6), (-0.6, 0.6)]);
        assert!(matches!(
            classify_detailed(&s, &tiny, &ClassifyConfig::default()),
            Err(ClassifyError::TooManyDropped { .. })
        ));
    }
}
