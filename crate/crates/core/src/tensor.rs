//! Intrinsic Riemannian calculus at sample points: connection, curvature,
//! Schouten tensor and sigma_k curvatures, Hessian, Laplacian, gradient,
//! Lie derivative, covariant derivative of vector fields.
//!
//! All derivatives come from the jet engine. The kernels work on matrices of
//! jets, so the same code path yields plain values (order-0 request) and
//! derivative-carrying values for the nested pipelines in the soliton module.
//!
//! Index conventions, fixed so the round sphere has positive scalar
//! curvature and the flat-ambient Gauss equation in the hypersurface module
//! holds as `R_ijkl = h_ik h_jl - h_il h_jk`:
//!
//! ```text
//! Gamma^k_ij   = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
//! R^l_ijk      = d_i Gamma^l_jk - d_j Gamma^l_ik
//!                + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik
//! Ric_jk       = R^i_ijk
//! R            = g^jk Ric_jk
//! R_ijkl       = g_ml R^m_jik          (lowered, pair-symmetric form)
//! ```

use thiserror::Error;

use crate::expr::{eval_jet, EvalContext, EvalError, Expr, Jet};
use crate::linalg::{self, Mat};

#[derive(Debug, Error)]
pub enum TensorError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("matrix inversion failed at {point:?}: zero pivot")]
    Singular { point: Vec<f64> },
    #[error("Schouten tensor and sigma_k require dimension >= 3 (metric has n = {dim})")]
    SchoutenUndefined { dim: usize },
    #[error("expected {expected} components, got {got}")]
    WrongComponentCount { expected: usize, got: usize },
    #[error("point has {got} coordinates, metric has dimension {expected}")]
    WrongPointDimension { expected: usize, got: usize },
    #[error("metric dimension must be at least 2, got {dim}")]
    DimensionTooSmall { dim: usize },
}

/// Chart variable names `u1..un`.
pub fn chart_vars(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("u{i}")).collect()
}

/// A Riemannian metric given by component expressions in the chart
/// variables u1..un. Immutable; evaluation at points is pure.
#[derive(Debug, Clone)]
pub struct MetricField {
    dim: usize,
    vars: Vec<String>,
    /// full symmetric matrix of component expressions
    components: Vec<Vec<Expr>>,
}

impl MetricField {
    /// Build from the lower triangle in row-major order:
    /// g11, g21, g22, g31, g32, g33, ...
    pub fn from_lower_triangular(dim: usize, entries: Vec<Expr>) -> Result<Self, TensorError> {
        if dim < 2 {
            return Err(TensorError::DimensionTooSmall { dim });
        }
        let expected = dim * (dim + 1) / 2;
        if entries.len() != expected {
            return Err(TensorError::WrongComponentCount {
                expected,
                got: entries.len(),
            });
        }
        let mut components = vec![vec![Expr::Num(0.0); dim]; dim];
        let mut it = entries.into_iter();
        for i in 0..dim {
            for j in 0..=i {
                let e = it.next().unwrap();
                components[i][j] = e.clone();
                components[j][i] = e;
            }
        }
        Ok(MetricField {
            dim,
            vars: chart_vars(dim),
            components,
        })
    }

    /// Build from a full symmetric matrix of expressions (used by the
    /// induced metric of an immersion; symmetry is the caller's contract).
    pub fn from_full(dim: usize, components: Vec<Vec<Expr>>) -> Result<Self, TensorError> {
        if dim < 2 {
            return Err(TensorError::DimensionTooSmall { dim });
        }
        if components.len() != dim || components.iter().any(|r| r.len() != dim) {
            return Err(TensorError::WrongComponentCount {
                expected: dim * dim,
                got: components.iter().map(|r| r.len()).sum(),
            });
        }
        Ok(MetricField {
            dim,
            vars: chart_vars(dim),
            components,
        })
    }

    /// The euclidean metric delta_ij on R^n.
    pub fn flat(dim: usize) -> Self {
        let components = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| Expr::Num(if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        MetricField {
            dim,
            vars: chart_vars(dim),
            components,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i][j]
    }

    fn check_point(&self, p: &[f64]) -> Result<(), TensorError> {
        if p.len() != self.dim {
            return Err(TensorError::WrongPointDimension {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn eval_context(&self, p: &[f64], order: usize) -> EvalContext {
        EvalContext::new(
            self.vars.iter().cloned().zip(p.iter().copied()).collect(),
            order,
        )
    }

    /// Metric components as jets of the requested order at p.
    pub(crate) fn metric_jets(&self, p: &[f64], order: usize) -> Result<Mat<Jet>, TensorError> {
        self.check_point(p)?;
        let ctx = self.eval_context(p, order);
        let mut rows: Vec<Vec<Jet>> = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut row = Vec::with_capacity(self.dim);
            for j in 0..self.dim {
                row.push(eval_jet(&self.components[i][j], &ctx)?);
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// All intrinsic curvature data at a point.
    pub fn curvature_at(&self, p: &[f64]) -> Result<CurvaturePoint, TensorError> {
        self.check_point(p)?;
        let n = self.dim;
        let gj = self.metric_jets(p, 2)?;
        let g: Mat<f64> = jet_values(&gj);
        if linalg::cholesky(&g).is_none() {
            return Err(TensorError::NotPositiveDefinite { point: p.to_vec() });
        }
        let g_inv = linalg::mat_inverse(&g).ok_or(TensorError::Singular { point: p.to_vec() })?;

        let gamma_j = christoffel_jets(&gj).ok_or(TensorError::Singular { point: p.to_vec() })?;
        let rm_up_j = riemann_upper_jets(&gamma_j);

        let gamma: Vec<Mat<f64>> = gamma_j
            .iter()
            .map(|m| {
                m.iter()
                    .map(|r| r.iter().map(Jet::value).collect())
                    .collect()
            })
            .collect();
        let rm_upper: Vec<Vec<Vec<Vec<f64>>>> = rm_up_j
            .iter()
            .map(|a| {
                a.iter()
                    .map(|b| {
                        b.iter()
                            .map(|c| c.iter().map(Jet::value).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();

        // lowered pair-symmetric form: R_ijkl = g_ml R^m_jik
        let mut rm_lower = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = 0.0;
                        for (m, g_row) in g.iter().enumerate() {
                            s += g_row[l] * rm_upper[m][j][i][k];
                        }
                        rm_lower[i][j][k][l] = s;
                    }
                }
            }
        }

        let mut ric = linalg::mat_zero(n);
        for j in 0..n {
            for k in 0..n {
                ric[j][k] = (0..n).map(|i| rm_upper[i][i][j][k]).sum();
            }
        }
        let mut r_scalar = 0.0;
        for j in 0..n {
            for k in 0..n {
                r_scalar += g_inv[j][k] * ric[j][k];
            }
        }

        let (schouten, schouten_eigs, sigma) = if n >= 3 {
            let factor = r_scalar / (2.0 * (n as f64 - 1.0));
            let a: Mat<f64> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (ric[i][j] - factor * g[i][j]) / (n as f64 - 2.0))
                        .collect()
                })
                .collect();
            let mu = linalg::whitened_eigenvalues(&g, &a)
                .ok_or(TensorError::NotPositiveDefinite { point: p.to_vec() })?;
            let sigma = elementary_symmetric(&mu);
            (Some(a), Some(mu), Some(sigma))
        } else {
            (None, None, None)
        };

        Ok(CurvaturePoint {
            point: p.to_vec(),
            g,
            g_inv,
            gamma,
            rm_upper,
            rm_lower,
            ric,
            r_scalar,
            schouten,
            schouten_eigs,
            sigma,
        })
    }

    /// Value, gradient, Hessian and Laplacian of a scalar field at p.
    pub fn scalar_field_at(&self, f: &Expr, p: &[f64]) -> Result<ScalarFieldData, TensorError> {
        self.check_point(p)?;
        let n = self.dim;
        let gj = self.metric_jets(p, 1)?;
        let g: Mat<f64> = jet_values(&gj);
        if linalg::cholesky(&g).is_none() {
            return Err(TensorError::NotPositiveDefinite { point: p.to_vec() });
        }
        let g_inv = linalg::mat_inverse(&g).ok_or(TensorError::Singular { point: p.to_vec() })?;
        let gamma = christoffel_values(&gj).ok_or(TensorError::Singular { point: p.to_vec() })?;

        let ctx = self.eval_context(p, 2);
        let fj = eval_jet(f, &ctx)?;
        let df: Vec<f64> = (0..n).map(|i| fj.extract_derivative(i).value()).collect();
        let mut hess = linalg::mat_zero(n);
        for i in 0..n {
            for j in 0..n {
                let ddf = fj.extract_derivative(i).extract_derivative(j).value();
                let correction: f64 = (0..n).map(|k| gamma[k][i][j] * df[k]).sum();
                hess[i][j] = ddf - correction;
            }
        }
        let grad: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| g_inv[i][j] * df[j]).sum())
            .collect();
        let mut laplacian = 0.0;
        for i in 0..n {
            for j in 0..n {
                laplacian += g_inv[i][j] * hess[i][j];
            }
        }
        Ok(ScalarFieldData {
            point: p.to_vec(),
            value: fj.value(),
            grad,
            hess,
            laplacian,
        })
    }

    /// Covariant derivative and Lie derivative data of a vector field at p.
    pub fn vector_field_at(&self, v: &[Expr], p: &[f64]) -> Result<VectorFieldData, TensorError> {
        self.check_point(p)?;
        let n = self.dim;
        if v.len() != n {
            return Err(TensorError::WrongComponentCount {
                expected: n,
                got: v.len(),
            });
        }
        let gj = self.metric_jets(p, 1)?;
        let g: Mat<f64> = jet_values(&gj);
        if linalg::cholesky(&g).is_none() {
            return Err(TensorError::NotPositiveDefinite { point: p.to_vec() });
        }
        let gamma = christoffel_values(&gj).ok_or(TensorError::Singular { point: p.to_vec() })?;

        let ctx = self.eval_context(p, 1);
        let vj: Vec<Jet> = v
            .iter()
            .map(|e| eval_jet(e, &ctx))
            .collect::<Result<_, _>>()?;
        let value: Vec<f64> = vj.iter().map(Jet::value).collect();
        let dv: Vec<Vec<f64>> = vj
            .iter()
            .map(|j| (0..n).map(|k| j.extract_derivative(k).value()).collect())
            .collect();

        // (nabla v)^i_j = d_j v^i + Gamma^i_jk v^k
        let mut nabla = linalg::mat_zero(n);
        for i in 0..n {
            for j in 0..n {
                nabla[i][j] = dv[i][j] + (0..n).map(|k| gamma[i][j][k] * value[k]).sum::<f64>();
            }
        }

        // coordinate formula: (L_v g)_ij = v^k d_k g_ij + g_kj d_i v^k + g_ik d_j v^k
        let mut lie_g = linalg::mat_zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += value[k] * gj[i][j].extract_derivative(k).value();
                    s += g[k][j] * dv[k][i] + g[i][k] * dv[k][j];
                }
                lie_g[i][j] = s;
            }
        }

        Ok(VectorFieldData {
            point: p.to_vec(),
            value,
            nabla,
            lie_g,
        })
    }
}

/// Intrinsic tensors at one sample point.
#[derive(Debug, Clone)]
pub struct CurvaturePoint {
    pub point: Vec<f64>,
    pub g: Mat<f64>,
    pub g_inv: Mat<f64>,
    /// `gamma[k][i][j]` = Gamma^k_ij
    pub gamma: Vec<Mat<f64>>,
    /// `rm_upper[l][i][j][k]` = R^l_ijk
    pub rm_upper: Vec<Vec<Vec<Vec<f64>>>>,
    /// `rm_lower[i][j][k][l]` = R_ijkl with the pair-symmetric Gauss-equation sign
    pub rm_lower: Vec<Vec<Vec<Vec<f64>>>>,
    pub ric: Mat<f64>,
    pub r_scalar: f64,
    schouten: Option<Mat<f64>>,
    schouten_eigs: Option<Vec<f64>>,
    sigma: Option<Vec<f64>>,
}

impl CurvaturePoint {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// Schouten tensor A = (Ric - R/(2(n-1)) g)/(n-2); an error for n = 2.
    pub fn schouten(&self) -> Result<&Mat<f64>, TensorError> {
        self.schouten
            .as_ref()
            .ok_or(TensorError::SchoutenUndefined { dim: self.dim() })
    }

    /// Eigenvalues of g^{-1} A, ascending; an error for n = 2.
    pub fn schouten_eigenvalues(&self) -> Result<&[f64], TensorError> {
        self.schouten_eigs
            .as_deref()
            .ok_or(TensorError::SchoutenUndefined { dim: self.dim() })
    }

    /// sigma_1 .. sigma_n: elementary symmetric polynomials of the Schouten
    /// eigenvalues; an error for n = 2.
    pub fn sigma(&self) -> Result<&[f64], TensorError> {
        self.sigma
            .as_deref()
            .ok_or(TensorError::SchoutenUndefined { dim: self.dim() })
    }

    /// sigma_k for 1 <= k <= n.
    pub fn sigma_k(&self, k: usize) -> Result<f64, TensorError> {
        let s = self.sigma()?;
        assert!((1..=s.len()).contains(&k), "sigma_k needs 1 <= k <= n");
        Ok(s[k - 1])
    }
}

/// Scalar field data at one point.
#[derive(Debug, Clone)]
pub struct ScalarFieldData {
    pub point: Vec<f64>,
    pub value: f64,
    /// contravariant gradient components grad^i = g^ij d_j f
    pub grad: Vec<f64>,
    /// covariant Hessian hess_ij = d_i d_j f - Gamma^k_ij d_k f
    pub hess: Mat<f64>,
    pub laplacian: f64,
}

/// Vector field data at one point.
#[derive(Debug, Clone)]
pub struct VectorFieldData {
    pub point: Vec<f64>,
    pub value: Vec<f64>,
    /// `nabla[i][j]` = (nabla v)^i_j
    pub nabla: Mat<f64>,
    /// (L_v g)_ij by the coordinate formula
    pub lie_g: Mat<f64>,
}

pub(crate) fn jet_values(m: &Mat<Jet>) -> Mat<f64> {
    m.iter()
        .map(|row| row.iter().map(Jet::value).collect())
        .collect()
}

/// Christoffel symbols as jets, one order below the metric jets:
/// gamma[k][i][j] = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij).
/// `None` when the metric value matrix is singular.
pub(crate) fn christoffel_jets(g: &Mat<Jet>) -> Option<Vec<Mat<Jet>>> {
    let n = g.len();
    let order = g[0][0].order();
    assert!(order >= 1, "christoffel needs metric jets of order >= 1");
    let target = order - 1;
    let gt: Mat<Jet> = g
        .iter()
        .map(|row| row.iter().map(|j| j.truncate(target)).collect())
        .collect();
    let g_inv = linalg::mat_inverse(&gt)?;
    // dg[k][i][j] = d_k g_ij
    let dg: Vec<Mat<Jet>> = (0..n)
        .map(|k| {
            g.iter()
                .map(|row| row.iter().map(|j| j.extract_derivative(k)).collect())
                .collect()
        })
        .collect();
    let mut gamma = Vec::with_capacity(n);
    for k in 0..n {
        let mut mk = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut acc: Option<Jet> = None;
                for l in 0..n {
                    let term = dg[i][j][l].add(&dg[j][i][l]).sub(&dg[l][i][j]);
                    let contribution = g_inv[k][l].mul(&term);
                    acc = Some(match acc {
                        Some(a) => a.add(&contribution),
                        None => contribution,
                    });
                }
                row.push(acc.unwrap().scale(0.5));
            }
            mk.push(row);
        }
        gamma.push(mk);
    }
    Some(gamma)
}

/// Christoffel symbol values from metric jets (order >= 1).
pub(crate) fn christoffel_values(g: &Mat<Jet>) -> Option<Vec<Mat<f64>>> {
    let gamma = christoffel_jets(g)?;
    Some(
        gamma
            .iter()
            .map(|m| {
                m.iter()
                    .map(|r| r.iter().map(Jet::value).collect())
                    .collect()
            })
            .collect(),
    )
}

/// Curvature tensor R^l_ijk as jets, one order below the Christoffel jets.
pub(crate) fn riemann_upper_jets(gamma: &[Mat<Jet>]) -> Vec<Vec<Vec<Vec<Jet>>>> {
    let n = gamma.len();
    let order = gamma[0][0][0].order();
    assert!(order >= 1, "riemann needs christoffel jets of order >= 1");
    let target = order - 1;
    let gt: Vec<Mat<Jet>> = gamma
        .iter()
        .map(|m| {
            m.iter()
                .map(|r| r.iter().map(|j| j.truncate(target)).collect())
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for l in 0..n {
        let mut tl = Vec::with_capacity(n);
        for i in 0..n {
            let mut ti = Vec::with_capacity(n);
            for j in 0..n {
                let mut tj = Vec::with_capacity(n);
                for k in 0..n {
                    let mut acc = gamma[l][j][k]
                        .extract_derivative(i)
                        .sub(&gamma[l][i][k].extract_derivative(j));
                    for m in 0..n {
                        acc = acc.add(&gt[l][i][m].mul(&gt[m][j][k]));
                        acc = acc.sub(&gt[l][j][m].mul(&gt[m][i][k]));
                    }
                    tj.push(acc);
                }
                ti.push(tj);
            }
            tl.push(ti);
        }
        out.push(tl);
    }
    out
}

/// Elementary symmetric polynomials e_1..e_n of the given values.
pub(crate) fn elementary_symmetric(mu: &[f64]) -> Vec<f64> {
    let n = mu.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for &m in mu {
        for k in (1..=n).rev() {
            e[k] += e[k - 1] * m;
        }
    }
    e.remove(0);
    e
}
