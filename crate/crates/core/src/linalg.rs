//! Dense linear algebra for the small symmetric matrices (n <= 4 typically)
//! that show up at every sample point: Cholesky factorization, a cyclic
//! Jacobi eigenvalue solver, Gauss-Jordan inversion generic over the entry
//! type, and the generalized cross product that produces hypersurface
//! normals.

/// Entry type for the generic routines: implemented by `f64` and by jets,
/// so the same elimination code serves plain and derivative-carrying paths.
pub trait Num: Clone {
    fn nadd(&self, rhs: &Self) -> Self;
    fn nsub(&self, rhs: &Self) -> Self;
    fn nmul(&self, rhs: &Self) -> Self;
    fn nneg(&self) -> Self;
    /// `None` when the divisor's value part is exactly zero.
    fn ndiv(&self, rhs: &Self) -> Option<Self>;
    /// `None` outside the domain (negative, or zero with derivatives requested).
    fn nsqrt(&self) -> Option<Self>;
    /// A constant with the same shape as `self`.
    fn nconst(&self, c: f64) -> Self;
    /// The value part, used for pivot selection.
    fn nvalue(&self) -> f64;
}

impl Num for f64 {
    fn nadd(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn nsub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn nmul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn nneg(&self) -> Self {
        -self
    }
    fn ndiv(&self, rhs: &Self) -> Option<Self> {
        if *rhs == 0.0 {
            None
        } else {
            Some(self / rhs)
        }
    }
    fn nsqrt(&self) -> Option<Self> {
        if *self < 0.0 {
            None
        } else {
            Some(self.sqrt())
        }
    }
    fn nconst(&self, c: f64) -> Self {
        c
    }
    fn nvalue(&self) -> f64 {
        *self
    }
}

pub type Mat<T> = Vec<Vec<T>>;

pub fn mat_zero(n: usize) -> Mat<f64> {
    vec![vec![0.0; n]; n]
}

pub fn mat_identity(n: usize) -> Mat<f64> {
    let mut m = mat_zero(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// Largest absolute entry.
pub fn mat_sup(m: &[Vec<f64>]) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Cholesky factor L (lower triangular, g = L L^T) of a symmetric matrix.
/// Returns `None` when a pivot falls at or below `1e-12 * max|g_ij|`,
/// which is the positive-definiteness test used throughout.
pub fn cholesky(g: &[Vec<f64>]) -> Option<Mat<f64>> {
    let n = g.len();
    let threshold = 1e-12 * mat_sup(g);
    let mut l = mat_zero(n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= threshold {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solve L x = b with L lower triangular.
pub fn solve_lower(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Solve L^T x = b with L lower triangular.
pub fn solve_lower_transpose(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Eigenvalues of the symmetric pencil (s, g): the eigenvalues of g^{-1} s,
/// computed by whitening with the Cholesky factor of g and running Jacobi on
/// the resulting symmetric matrix. Ascending order. `None` if g is not
/// positive definite.
pub fn whitened_eigenvalues(g: &[Vec<f64>], s: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = g.len();
    let l = cholesky(g)?;
    // m = L^{-1} s L^{-T}: solve column-wise, then row-wise.
    let mut cols = mat_zero(n);
    for j in 0..n {
        let b: Vec<f64> = (0..n).map(|i| s[i][j]).collect();
        let x = solve_lower(&l, &b);
        for i in 0..n {
            cols[i][j] = x[i];
        }
    }
    let mut m = mat_zero(n);
    for i in 0..n {
        let x = solve_lower(&l, &cols[i]); // rows of cols * L^{-T}, via symmetry
        m[i] = x;
    }
    // symmetrize against rounding before Jacobi
    for i in 0..n {
        for j in 0..i {
            let a = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = a;
            m[j][i] = a;
        }
    }
    Some(jacobi_eigenvalues(m))
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix. Stops when the
/// off-diagonal Frobenius mass drops below 1e-13 of the total, or after 50
/// sweeps. Returns eigenvalues in ascending order.
pub fn jacobi_eigenvalues(mut a: Mat<f64>) -> Vec<f64> {
    let n = a.len();
    if n == 1 {
        return vec![a[0][0]];
    }
    let frob: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    let tol = 1e-13 * frob.max(f64::MIN_POSITIVE);
    for _sweep in 0..50 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off += 2.0 * a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Gauss-Jordan inverse with partial pivoting on the value part.
/// `None` when a pivot value is exactly zero (singular to working shape).
pub fn mat_inverse<T: Num>(m: &[Vec<T>]) -> Option<Mat<T>> {
    let n = m.len();
    let proto = &m[0][0];
    let mut a: Mat<T> = m.to_vec();
    let mut inv: Mat<T> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| proto.nconst(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                a[r1][col]
                    .nvalue()
                    .abs()
                    .partial_cmp(&a[r2][col].nvalue().abs())
                    .unwrap()
            })
            .unwrap();
        if a[pivot_row][col].nvalue() == 0.0 {
            return None;
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].ndiv(&pivot)?;
            inv[col][j] = inv[col][j].ndiv(&pivot)?;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            // factor may have zero value but nonzero derivative parts, so the
            // subtraction runs unconditionally
            let factor = a[row][col].clone();
            for j in 0..n {
                let t = factor.nmul(&a[col][j]);
                a[row][j] = a[row][j].nsub(&t);
                let t2 = factor.nmul(&inv[col][j]);
                inv[row][j] = inv[row][j].nsub(&t2);
            }
        }
    }
    Some(inv)
}

/// Determinant by Laplace expansion along the first row. Division-free, so
/// derivative-carrying entries keep their derivative parts even when the
/// value part of the determinant vanishes (a pivoting elimination would
/// lose them at zero-value pivots).
pub fn determinant<T: Num>(m: &[Vec<T>]) -> T {
    let n = m.len();
    match n {
        1 => m[0][0].clone(),
        2 => m[0][0].nmul(&m[1][1]).nsub(&m[0][1].nmul(&m[1][0])),
        _ => {
            let mut det: Option<T> = None;
            for j in 0..n {
                let minor: Mat<T> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, v)| v.clone())
                            .collect()
                    })
                    .collect();
                let mut term = m[0][j].nmul(&determinant(&minor));
                if j % 2 == 1 {
                    term = term.nneg();
                }
                det = Some(match det {
                    Some(acc) => acc.nadd(&term),
                    None => term,
                });
            }
            det.unwrap()
        }
    }
}

/// Generalized cross product of n vectors in R^{n+1}: the unique vector
/// orthogonal to all rows, with magnitude the n-volume of their span.
/// Component a is the signed cofactor obtained by deleting column a.
pub fn cross_product<T: Num>(rows: &[Vec<T>]) -> Vec<T> {
    let n = rows.len();
    let dim = n + 1;
    debug_assert!(rows.iter().all(|r| r.len() == dim));
    let mut out = Vec::with_capacity(dim);
    for a in 0..dim {
        let minor: Mat<T> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != a)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let d = determinant(&minor);
        out.push(if a % 2 == 0 { d } else { d.nneg() });
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn stddev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Componentwise mean of a set of vectors.
pub fn vec_mean(vs: &[Vec<f64>]) -> Vec<f64> {
    let dim = vs[0].len();
    let mut m = vec![0.0; dim];
    for v in vs {
        for (mi, vi) in m.iter_mut().zip(v) {
            *mi += vi;
        }
    }
    for mi in &mut m {
        *mi /= vs.len() as f64;
    }
    m
}

/// RMS distance of a set of vectors from their mean.
pub fn vec_spread(vs: &[Vec<f64>]) -> f64 {
    let m = vec_mean(vs);
    let msq: f64 = vs
        .iter()
        .map(|v| {
            v.iter()
                .zip(&m)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum::<f64>()
        / vs.len() as f64;
    msq.sqrt()
}
