//! Extrinsic geometry of an immersion F: U in R^n -> R^{n+1}: induced
//! metric, unit normal, second fundamental form, shape operator, principal
//! and mean curvature, support function, tangential/normal split of the
//! position vector, Gauss/Codazzi residuals, and the two independent
//! computation routes for the Lie derivative of the metric along the
//! tangential position field.
//!
//! The normal orientation is whatever the chart order induces through the
//! generalized cross product; downstream logic only consumes
//! orientation-invariant combinations (lambda * kappa_i, lambda * alpha,
//! |lambda|, F + N / alpha).

use thiserror::Error;

use crate::expr::{eval_jet, eval_scalar, EvalContext, EvalError, Expr, Jet};
use crate::linalg::{self, Mat};
use crate::tensor::{self, MetricField, TensorError};

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("differential is rank deficient at {point:?}")]
    RankDeficient { point: Vec<f64> },
    #[error("point {point:?} is outside the chart domain on axis {axis}")]
    OutsideDomain { point: Vec<f64>, axis: usize },
    #[error("point {point:?} is excluded by the chart predicate")]
    Excluded { point: Vec<f64> },
    #[error("an immersion into R^{{n+1}} needs {expected} components, got {got}")]
    WrongComponentCount { expected: usize, got: usize },
    #[error("point has {got} coordinates, immersion has dimension {expected}")]
    WrongPointDimension { expected: usize, got: usize },
    #[error("immersion dimension must be at least 2, got {dim}")]
    DimensionTooSmall { dim: usize },
}

/// Per-variable chart bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBox {
    pub min: f64,
    pub max: f64,
}

/// A parametrized hypersurface in euclidean space, given by n+1 coordinate
/// expressions in the chart variables u1..un. Immutable; all pointwise
/// operations are pure.
#[derive(Debug, Clone)]
pub struct Immersion {
    dim: usize,
    vars: Vec<String>,
    components: Vec<Expr>,
    domain: Vec<DomainBox>,
    exclude: Option<Expr>,
}

impl Immersion {
    pub fn new(
        dim: usize,
        components: Vec<Expr>,
        domain: Vec<DomainBox>,
        exclude: Option<Expr>,
    ) -> Result<Self, SurfaceError> {
        if dim < 2 {
            return Err(SurfaceError::DimensionTooSmall { dim });
        }
        if components.len() != dim + 1 {
            return Err(SurfaceError::WrongComponentCount {
                expected: dim + 1,
                got: components.len(),
            });
        }
        if domain.len() != dim {
            return Err(SurfaceError::WrongComponentCount {
                expected: dim,
                got: domain.len(),
            });
        }
        Ok(Immersion {
            dim,
            vars: tensor::chart_vars(dim),
            components,
            domain,
            exclude,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn domain(&self) -> &[DomainBox] {
        &self.domain
    }

    pub fn exclude(&self) -> Option<&Expr> {
        self.exclude.as_ref()
    }

    fn bindings(&self, u: &[f64]) -> Vec<(String, f64)> {
        self.vars.iter().cloned().zip(u.iter().copied()).collect()
    }

    /// Domain-box and exclusion-predicate check shared by all pointwise ops.
    pub fn check_point(&self, u: &[f64]) -> Result<(), SurfaceError> {
        if u.len() != self.dim {
            return Err(SurfaceError::WrongPointDimension {
                expected: self.dim,
                got: u.len(),
            });
        }
        for (axis, (x, b)) in u.iter().zip(&self.domain).enumerate() {
            if *x < b.min || *x > b.max {
                return Err(SurfaceError::OutsideDomain {
                    point: u.to_vec(),
                    axis,
                });
            }
        }
        if let Some(pred) = &self.exclude {
            let v = eval_scalar(pred, &self.bindings(u))?;
            if v <= 0.0 {
                return Err(SurfaceError::Excluded { point: u.to_vec() });
            }
        }
        Ok(())
    }

    /// Component jets of F at u.
    fn position_jets(&self, u: &[f64], order: usize) -> Result<Vec<Jet>, SurfaceError> {
        let ctx = EvalContext::new(self.bindings(u), order);
        self.components
            .iter()
            .map(|e| eval_jet(e, &ctx).map_err(SurfaceError::from))
            .collect()
    }

    /// Full extrinsic frame at a chart point.
    pub fn frame_at(&self, u: &[f64]) -> Result<ExtrinsicFrame, SurfaceError> {
        self.check_point(u)?;
        let n = self.dim;
        let ambient = n + 1;
        let fj = self.position_jets(u, 2)?;
        let position: Vec<f64> = fj.iter().map(Jet::value).collect();
        // tangent rows T_i = dF/du_i
        let tangents: Mat<f64> = (0..n)
            .map(|i| fj.iter().map(|c| c.extract_derivative(i).value()).collect())
            .collect();
        let normal_raw = linalg::cross_product(&tangents);
        let tangent_norms: f64 = tangents.iter().map(|t| linalg::norm(t)).product();
        let raw_len = linalg::norm(&normal_raw);
        if raw_len < 1e-10 * tangent_norms.max(f64::MIN_POSITIVE) {
            return Err(SurfaceError::RankDeficient { point: u.to_vec() });
        }
        let normal: Vec<f64> = normal_raw.iter().map(|w| w / raw_len).collect();

        let mut metric = linalg::mat_zero(n);
        for i in 0..n {
            for j in 0..n {
                metric[i][j] = linalg::dot(&tangents[i], &tangents[j]);
            }
        }
        let metric_inv = linalg::mat_inverse(&metric)
            .ok_or(SurfaceError::RankDeficient { point: u.to_vec() })?;

        // h_ij = <d_i d_j F, N>, straight from the order-2 jets
        let mut second_form = linalg::mat_zero(n);
        for i in 0..n {
            for j in 0..n {
                let ddf: Vec<f64> = fj
                    .iter()
                    .map(|c| c.extract_derivative(i).extract_derivative(j).value())
                    .collect();
                second_form[i][j] = linalg::dot(&ddf, &normal);
            }
        }

        // shape operator A^i_j = g^ik h_kj
        let mut shape = linalg::mat_zero(n);
        for i in 0..n {
            for j in 0..n {
                shape[i][j] = (0..n).map(|k| metric_inv[i][k] * second_form[k][j]).sum();
            }
        }
        let kappas = linalg::whitened_eigenvalues(&metric, &second_form)
            .ok_or(SurfaceError::RankDeficient { point: u.to_vec() })?;
        let alpha = kappas.iter().sum::<f64>() / n as f64;

        let lambda = linalg::dot(&normal, &position);
        // chart components of the tangential part: g^{ij} <F, T_j>
        let b: Vec<f64> = (0..n)
            .map(|j| linalg::dot(&position, &tangents[j]))
            .collect();
        let vt_chart: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| metric_inv[i][j] * b[j]).sum())
            .collect();
        let mut vt_ambient = vec![0.0; ambient];
        for (i, t) in tangents.iter().enumerate() {
            for (va, ta) in vt_ambient.iter_mut().zip(t) {
                *va += vt_chart[i] * ta;
            }
        }

        Ok(ExtrinsicFrame {
            point: u.to_vec(),
            position,
            tangents,
            metric,
            metric_inv,
            normal,
            second_form,
            shape,
            kappas,
            alpha,
            lambda,
            vt_chart,
            vt_ambient,
        })
    }

    /// The induced metric as a field of component expressions,
    /// g_ij = sum_a d_i F^a d_j F^a, built by symbolic differentiation of
    /// the immersion components. This is the bridge into the tensor module.
    pub fn induced_metric(&self) -> MetricField {
        let n = self.dim;
        let derivs: Vec<Vec<Expr>> = (0..n)
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.diff(&self.vars[i]))
                    .collect()
            })
            .collect();
        let mut rows = vec![vec![Expr::Num(0.0); n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut acc = Expr::Num(0.0);
                for a in 0..=n {
                    acc = Expr::add(acc, Expr::mul(derivs[i][a].clone(), derivs[j][a].clone()));
                }
                rows[i][j] = acc.clone();
                rows[j][i] = acc;
            }
        }
        MetricField::from_full(n, rows).expect("induced metric dimensions are consistent")
    }

    /// Second fundamental form components as jets of the given order
    /// (normal computed with jet arithmetic so its derivatives are exact).
    fn second_form_jets(&self, u: &[f64], order: usize) -> Result<Mat<Jet>, SurfaceError> {
        let n = self.dim;
        let fj = self.position_jets(u, order + 2)?;
        let tangent_jets: Vec<Vec<Jet>> = (0..n)
            .map(|i| {
                fj.iter()
                    .map(|c| c.extract_derivative(i).truncate(order))
                    .collect()
            })
            .collect();
        let w = linalg::cross_product(&tangent_jets);
        let mut wsq = w[0].mul(&w[0]);
        for wa in &w[1..] {
            wsq = wsq.add(&wa.mul(wa));
        }
        let wlen = wsq
            .sqrt()
            .map_err(|_| SurfaceError::RankDeficient { point: u.to_vec() })?;
        let normal: Vec<Jet> = w
            .iter()
            .map(|wa| {
                wa.div(&wlen)
                    .map_err(|_| SurfaceError::RankDeficient { point: u.to_vec() })
            })
            .collect::<Result<_, _>>()?;
        let mut h = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut acc: Option<Jet> = None;
                for (c, na) in fj.iter().zip(&normal) {
                    let dd = c
                        .extract_derivative(i)
                        .extract_derivative(j)
                        .truncate(order);
                    let term = dd.mul(na);
                    acc = Some(match acc {
                        Some(s) => s.add(&term),
                        None => term,
                    });
                }
                row.push(acc.unwrap());
            }
            h.push(row);
        }
        Ok(h)
    }

    /// Gauss and Codazzi residuals at a chart point, each the sup over index
    /// combinations of the defect normalized by 1 + max(|R|, |h|^2).
    ///
    /// The two sides come from genuinely different pipelines: the curvature
    /// side goes through the induced-metric expressions and the tensor
    /// module, the second-form side through direct jets of F.
    pub fn compatibility_at(&self, u: &[f64]) -> Result<CompatibilityResidual, SurfaceError> {
        self.check_point(u)?;
        let n = self.dim;
        let curv = self.induced_metric().curvature_at(u)?;
        let hj = self.second_form_jets(u, 1)?;
        let h = tensor::jet_values(&hj);
        let dh: Vec<Mat<f64>> = (0..n)
            .map(|k| {
                hj.iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| e.extract_derivative(k).value())
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let h_sup = linalg::mat_sup(&h);
        let r_sup = curv
            .rm_lower
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0f64, |a, &x| a.max(x.abs()));
        let scale = 1.0 + r_sup.max(h_sup * h_sup);

        let mut gauss: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let lhs = curv.rm_lower[i][j][k][l];
                        let rhs = h[i][k] * h[j][l] - h[i][l] * h[j][k];
                        gauss = gauss.max((lhs - rhs).abs());
                    }
                }
            }
        }

        // flat ambient Codazzi: nabla_i h_jk - nabla_j h_ik = 0, with
        // nabla_i h_jk = d_i h_jk - Gamma^m_ij h_mk - Gamma^m_ik h_jm
        let mut codazzi: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut d = dh[i][j][k] - dh[j][i][k];
                    for m in 0..n {
                        d -= curv.gamma[m][i][j] * h[m][k] + curv.gamma[m][i][k] * h[j][m];
                        d += curv.gamma[m][j][i] * h[m][k] + curv.gamma[m][j][k] * h[i][m];
                    }
                    codazzi = codazzi.max(d.abs());
                }
            }
        }

        Ok(CompatibilityResidual {
            gauss: gauss / scale,
            codazzi: codazzi / scale,
        })
    }

    /// Chart components of the tangential position field V^T and the induced
    /// metric, both as jets (the differentiable route into the Lie
    /// derivative).
    fn tangential_position_jets(
        &self,
        u: &[f64],
        order: usize,
    ) -> Result<(Vec<Jet>, Mat<Jet>), SurfaceError> {
        let n = self.dim;
        let fj = self.position_jets(u, order + 1)?;
        let pos: Vec<Jet> = fj.iter().map(|c| c.truncate(order)).collect();
        let tj: Vec<Vec<Jet>> = (0..n)
            .map(|i| {
                fj.iter()
                    .map(|c| c.extract_derivative(i).truncate(order))
                    .collect()
            })
            .collect();
        let mut g = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut acc: Option<Jet> = None;
                for a in 0..=n {
                    let term = tj[i][a].mul(&tj[j][a]);
                    acc = Some(match acc {
                        Some(s) => s.add(&term),
                        None => term,
                    });
                }
                row.push(acc.unwrap());
            }
            g.push(row);
        }
        let g_inv =
            linalg::mat_inverse(&g).ok_or(SurfaceError::RankDeficient { point: u.to_vec() })?;
        let mut b = Vec::with_capacity(n);
        for j in 0..n {
            let mut acc: Option<Jet> = None;
            for a in 0..=n {
                let term = pos[a].mul(&tj[j][a]);
                acc = Some(match acc {
                    Some(s) => s.add(&term),
                    None => term,
                });
            }
            b.push(acc.unwrap());
        }
        let v: Vec<Jet> = (0..n)
            .map(|i| {
                let mut acc: Option<Jet> = None;
                for j in 0..n {
                    let term = g_inv[i][j].mul(&b[j]);
                    acc = Some(match acc {
                        Some(s) => s.add(&term),
                        None => term,
                    });
                }
                acc.unwrap()
            })
            .collect();
        Ok((v, g))
    }

    /// The Lie derivative of the induced metric along V^T, by two
    /// independent routes: the coordinate Lie-derivative formula applied to
    /// the chart components of V^T (first), and 2 g_ij + 2 lambda h_ij from
    /// the extrinsic frame (second). Callers cross-check the two.
    pub fn lie_position_at(&self, u: &[f64]) -> Result<(Mat<f64>, Mat<f64>), SurfaceError> {
        self.check_point(u)?;
        let n = self.dim;
        let (vj, gj) = self.tangential_position_jets(u, 1)?;
        let v: Vec<f64> = vj.iter().map(Jet::value).collect();
        let dv: Mat<f64> = vj
            .iter()
            .map(|c| (0..n).map(|k| c.extract_derivative(k).value()).collect())
            .collect();
        let g = tensor::jet_values(&gj);
        let mut lie = linalg::mat_zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += v[k] * gj[i][j].extract_derivative(k).value();
                    s += g[k][j] * dv[k][i] + g[i][k] * dv[k][j];
                }
                lie[i][j] = s;
            }
        }

        let frame = self.frame_at(u)?;
        let mut via_s3 = linalg::mat_zero(n);
        for i in 0..n {
            for j in 0..n {
                via_s3[i][j] =
                    2.0 * frame.metric[i][j] + 2.0 * frame.lambda * frame.second_form[i][j];
            }
        }
        Ok((lie, via_s3))
    }
}

/// Extrinsic data at one chart point.
#[derive(Debug, Clone)]
pub struct ExtrinsicFrame {
    pub point: Vec<f64>,
    /// V = F(u)
    pub position: Vec<f64>,
    /// rows T_i = dF/du_i
    pub tangents: Mat<f64>,
    /// g_ij = <T_i, T_j>
    pub metric: Mat<f64>,
    pub metric_inv: Mat<f64>,
    /// unit normal induced by the chart order
    pub normal: Vec<f64>,
    /// h_ij = <d_i d_j F, N>
    pub second_form: Mat<f64>,
    /// A^i_j = g^ik h_kj
    pub shape: Mat<f64>,
    /// principal curvatures, ascending
    pub kappas: Vec<f64>,
    /// mean curvature (1/n) sum kappa_i
    pub alpha: f64,
    /// support function <N, V>
    pub lambda: f64,
    /// chart components of the tangential position part
    pub vt_chart: Vec<f64>,
    /// ambient components of the tangential position part
    pub vt_ambient: Vec<f64>,
}

impl ExtrinsicFrame {
    /// V^perp = lambda N.
    pub fn v_perp(&self) -> Vec<f64> {
        self.normal.iter().map(|na| self.lambda * na).collect()
    }
}

/// Sup-norm defects of the Gauss and Codazzi equations, normalized.
#[derive(Debug, Clone, Copy)]
pub struct CompatibilityResidual {
    pub gauss: f64,
    pub codazzi: f64,
}
