//! Multivariate truncated-Taylor jets: every arithmetic operation and
//! elementary function propagates all partial derivatives up to a fixed
//! total order exactly (to rounding), so the tensor formulas downstream see
//! machine-precision derivatives instead of finite differences.
//!
//! Coefficients are stored Taylor-normalized (divided by the multi-index
//! factorial); [`Jet::partial`] converts back to raw partial-derivative
//! values, which is what the public surface reports.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use crate::linalg::Num;

/// Highest jet order the evaluator accepts unless a context raises it.
pub const DEFAULT_MAX_JET_ORDER: usize = 4;

static MAX_ORDER_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_JET_ORDER);

/// Process-wide cap consulted by new evaluation contexts. Intended to be
/// set once at startup (the CLI's --jet-order flag).
pub fn set_default_max_jet_order(cap: usize) {
    MAX_ORDER_CAP.store(cap, Ordering::Relaxed);
}

pub fn default_max_jet_order() -> usize {
    MAX_ORDER_CAP.load(Ordering::Relaxed)
}

/// Index bookkeeping shared by all jets of a given (variable count, order)
/// pair: the graded list of exponent tuples, position lookup, and the
/// truncated multiplication table.
pub struct JetSpace {
    nvars: usize,
    order: usize,
    /// Exponent tuples, degree-ascending, lexicographic within a degree.
    indices: Vec<Vec<u8>>,
    pos: HashMap<Vec<u8>, usize>,
    /// prod[a][b]: position of indices[a] + indices[b], None above the order.
    prod: Vec<Vec<Option<u32>>>,
    /// Multi-index factorial of each entry.
    factorial: Vec<f64>,
    /// Number of indices of total degree <= m, for m in 0..=order.
    prefix_len: Vec<usize>,
}

static SPACES: Lazy<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl JetSpace {
    /// Shared space for `nvars` variables at the given truncation order.
    pub fn get(nvars: usize, order: usize) -> Arc<JetSpace> {
        let mut cache = SPACES.lock().unwrap();
        cache
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(JetSpace::build(nvars, order)))
            .clone()
    }

    fn build(nvars: usize, order: usize) -> JetSpace {
        let mut indices = Vec::new();
        let mut prefix_len = Vec::with_capacity(order + 1);
        for degree in 0..=order {
            let mut current = vec![0u8; nvars];
            enumerate_compositions(degree as u8, 0, &mut current, &mut indices);
            prefix_len.push(indices.len());
        }
        if nvars == 0 {
            // only the empty index exists; the loop above pushed it once per
            // degree, keep the single degree-0 entry
            indices.truncate(1);
            prefix_len = vec![1; order + 1];
        }
        let pos: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, idx)| (idx.clone(), i))
            .collect();
        let count = indices.len();
        let mut prod = vec![vec![None; count]; count];
        for a in 0..count {
            for b in 0..count {
                let sum: Vec<u8> = indices[a]
                    .iter()
                    .zip(&indices[b])
                    .map(|(x, y)| x + y)
                    .collect();
                prod[a][b] = pos.get(&sum).map(|&p| p as u32);
            }
        }
        let factorial = indices
            .iter()
            .map(|idx| idx.iter().map(|&e| fact(e as usize)).product())
            .collect();
        JetSpace {
            nvars,
            order,
            indices,
            pos,
            prod,
            factorial,
            prefix_len,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<u8>] {
        &self.indices
    }
}

fn enumerate_compositions(
    remaining: u8,
    axis: usize,
    current: &mut Vec<u8>,
    out: &mut Vec<Vec<u8>>,
) {
    let nvars = current.len();
    if nvars == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if axis == nvars - 1 {
        current[axis] = remaining;
        out.push(current.clone());
        current[axis] = 0;
        return;
    }
    for e in 0..=remaining {
        current[axis] = e;
        enumerate_compositions(remaining - e, axis + 1, current, out);
    }
    current[axis] = 0;
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binom(m: usize, j: usize) -> f64 {
    fact(m) / (fact(j) * fact(m - j))
}

/// Domain failures of jet operations; the evaluator attaches the offending
/// subexpression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JetError {
    DivisionByZero,
    LogNonPositive,
    SqrtNegative,
    SqrtZeroWithDerivatives,
    AbsAtZero,
    PowNonPositiveBase,
}

impl fmt::Display for JetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            JetError::DivisionByZero => "division by zero",
            JetError::LogNonPositive => "log of a non-positive value",
            JetError::SqrtNegative => "sqrt of a negative value",
            JetError::SqrtZeroWithDerivatives => "sqrt is not differentiable at 0",
            JetError::AbsAtZero => "abs is not differentiable at 0",
            JetError::PowNonPositiveBase => "non-integer power of a non-positive base",
        };
        f.write_str(msg)
    }
}

/// Truncated Taylor expansion of a scalar quantity at a point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.space.nvars)
            .field("order", &self.space.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(space: Arc<JetSpace>, value: f64) -> Jet {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        Jet { space, coeffs }
    }

    /// The coordinate function of `axis` at `value`: unit first derivative.
    pub fn variable(space: Arc<JetSpace>, axis: usize, value: f64) -> Jet {
        assert!(axis < space.nvars);
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = value;
        if space.order >= 1 {
            let mut e = vec![0u8; space.nvars];
            e[axis] = 1;
            coeffs[space.pos[&e]] = 1.0;
        }
        Jet { space, coeffs }
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Value part (the order-0 coefficient).
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw partial derivative for the exponent tuple, i.e. the value of
    /// the corresponding mixed partial at the expansion point.
    pub fn partial(&self, exponents: &[usize]) -> f64 {
        assert_eq!(exponents.len(), self.space.nvars);
        let key: Vec<u8> = exponents.iter().map(|&e| e as u8).collect();
        let p = *self
            .space
            .pos
            .get(&key)
            .unwrap_or_else(|| panic!("multi-index {exponents:?} outside jet order"));
        self.coeffs[p] * self.space.factorial[p]
    }

    /// All (exponent tuple, raw partial derivative) pairs, degree-ascending.
    pub fn partials(&self) -> impl Iterator<Item = (&[u8], f64)> + '_ {
        self.space
            .indices
            .iter()
            .zip(self.coeffs.iter().zip(&self.space.factorial))
            .map(|(idx, (&c, &f))| (idx.as_slice(), c * f))
    }

    fn assert_compatible(&self, other: &Jet) {
        assert!(
            self.space.nvars == other.space.nvars && self.space.order == other.space.order,
            "jet space mismatch: ({}, {}) vs ({}, {})",
            self.space.nvars,
            self.space.order,
            other.space.nvars,
            other.space.order
        );
    }

    pub fn add(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Truncated product: Taylor coefficients convolve, terms above the
    /// order drop (they cannot influence the retained ones).
    pub fn mul(&self, other: &Jet) -> Jet {
        self.assert_compatible(other);
        let mut coeffs = vec![0.0; self.space.len()];
        let prod = &self.space.prod;
        for (a, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for (b, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0.0 {
                    continue;
                }
                if let Some(p) = prod[a][b] {
                    coeffs[p as usize] += ca * cb;
                }
            }
        }
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }

    /// Power-series division: solve g h = f for h in graded coefficient
    /// order. The value part is the single correctly rounded quotient, so
    /// order-0 evaluation matches plain scalar division exactly.
    pub fn div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.assert_compatible(other);
        let g0 = other.value();
        if g0 == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let len = self.space.len();
        let prod = &self.space.prod;
        let mut h = vec![0.0; len];
        for t in 0..len {
            let mut acc = self.coeffs[t];
            for a in 1..len {
                let ga = other.coeffs[a];
                if ga == 0.0 {
                    continue;
                }
                for (b, &hb) in h.iter().enumerate().take(t) {
                    if hb != 0.0 && prod[a][b] == Some(t as u32) {
                        acc -= ga * hb;
                    }
                }
            }
            h[t] = acc / g0;
        }
        Ok(Jet {
            space: self.space.clone(),
            coeffs: h,
        })
    }

    /// Composition with a univariate function given by its derivative values
    /// at `self.value()`: derivs[m] = phi^(m)(value). Exact for the
    /// truncation order via Horner on the zero-constant part.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.space.order;
        debug_assert_eq!(derivs.len(), order + 1);
        let mut hat = self.clone();
        hat.coeffs[0] = 0.0;
        let mut result = Jet::constant(self.space.clone(), derivs[order] / fact(order));
        for m in (0..order).rev() {
            result = result.mul(&hat);
            result.coeffs[0] += derivs[m] / fact(m);
        }
        result
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if x == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let order = self.space.order;
        let mut derivs = Vec::with_capacity(order + 1);
        let mut d = 1.0 / x;
        derivs.push(d);
        for m in 1..=order {
            d *= -(m as f64) / x;
            derivs.push(d);
        }
        Ok(self.compose(&derivs))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.space.order + 1])
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if x <= 0.0 {
            return Err(JetError::LogNonPositive);
        }
        let order = self.space.order;
        let mut derivs = Vec::with_capacity(order + 1);
        derivs.push(x.ln());
        let mut d = 1.0 / x;
        for m in 1..=order {
            derivs.push(d * fact(m - 1) * if m % 2 == 0 { -1.0 } else { 1.0 });
            d /= x;
        }
        Ok(self.compose(&derivs))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if x < 0.0 {
            return Err(JetError::SqrtNegative);
        }
        if x == 0.0 {
            if self.space.order == 0 {
                return Ok(Jet::constant(self.space.clone(), 0.0));
            }
            return Err(JetError::SqrtZeroWithDerivatives);
        }
        // value part is the correctly rounded sqrt; derivatives follow the
        // recurrence d_{m+1} = d_m (1/2 - m) / x
        let order = self.space.order;
        let mut derivs = Vec::with_capacity(order + 1);
        let mut d = x.sqrt();
        derivs.push(d);
        for m in 0..order {
            d *= (0.5 - m as f64) / x;
            derivs.push(d);
        }
        Ok(self.compose(&derivs))
    }

    /// Real power with a constant non-integer exponent; base must be positive.
    pub fn powf(&self, c: f64) -> Result<Jet, JetError> {
        let x = self.value();
        if x <= 0.0 {
            return Err(JetError::PowNonPositiveBase);
        }
        let order = self.space.order;
        let mut derivs = Vec::with_capacity(order + 1);
        let mut coeff = 1.0;
        for m in 0..=order {
            derivs.push(coeff * x.powf(c - m as f64));
            coeff *= c - m as f64;
        }
        Ok(self.compose(&derivs))
    }

    /// Integer power by repeated truncated multiplication; valid for any
    /// base, with negative exponents requiring a nonzero value part.
    pub fn powi(&self, k: i64) -> Result<Jet, JetError> {
        if k == 0 {
            return Ok(Jet::constant(self.space.clone(), 1.0));
        }
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Jet::constant(self.space.clone(), 1.0);
        let mut sq = base;
        loop {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            sq = sq.mul(&sq);
        }
        Ok(acc)
    }

    /// True when all derivative coefficients vanish exactly.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|&c| c == 0.0)
    }

    /// General power. Constant integer exponents use the multiplication
    /// path (any base); everything else goes through exp(b ln a).
    pub fn pow(&self, exponent: &Jet) -> Result<Jet, JetError> {
        if exponent.is_constant() {
            let c = exponent.value();
            if c.fract() == 0.0 && c.abs() <= 2147483647.0 {
                return self.powi(c as i64);
            }
            return self.powf(c);
        }
        Ok(exponent.mul(&self.ln()?).exp())
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cycle = [s, c, -s, -c];
        let derivs: Vec<f64> = (0..=self.space.order).map(|m| cycle[m % 4]).collect();
        self.compose(&derivs)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = (self.value().sin(), self.value().cos());
        let cycle = [c, -s, -c, s];
        let derivs: Vec<f64> = (0..=self.space.order).map(|m| cycle[m % 4]).collect();
        self.compose(&derivs)
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        let derivs: Vec<f64> = (0..=self.space.order)
            .map(|m| if m % 2 == 0 { s } else { c })
            .collect();
        self.compose(&derivs)
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        let derivs: Vec<f64> = (0..=self.space.order)
            .map(|m| if m % 2 == 0 { c } else { s })
            .collect();
        self.compose(&derivs)
    }

    pub fn tan(&self) -> Jet {
        // y' = 1 + y^2, differentiated with Leibniz on y^2
        let order = self.space.order;
        let mut d = Vec::with_capacity(order + 1);
        d.push(self.value().tan());
        if order >= 1 {
            d.push(1.0 + d[0] * d[0]);
        }
        for m in 1..order {
            let mut s = 0.0;
            for j in 0..=m {
                s += binom(m, j) * d[j] * d[m - j];
            }
            d.push(s);
        }
        self.compose(&d)
    }

    pub fn tanh(&self) -> Jet {
        // y' = 1 - y^2
        let order = self.space.order;
        let mut d = Vec::with_capacity(order + 1);
        d.push(self.value().tanh());
        if order >= 1 {
            d.push(1.0 - d[0] * d[0]);
        }
        for m in 1..order {
            let mut s = 0.0;
            for j in 0..=m {
                s += binom(m, j) * d[j] * d[m - j];
            }
            d.push(-s);
        }
        self.compose(&d)
    }

    pub fn atan(&self) -> Jet {
        // (1 + x^2) y' = 1, differentiated m times:
        // (1+x^2) y^(m+1) + 2xm y^(m) + m(m-1) y^(m-1) = 0
        let order = self.space.order;
        let x = self.value();
        let z = 1.0 + x * x;
        let mut d = Vec::with_capacity(order + 1);
        d.push(x.atan());
        if order >= 1 {
            d.push(1.0 / z);
        }
        for m in 1..order {
            let mf = m as f64;
            let next = -(2.0 * x * mf * d[m] + mf * (mf - 1.0) * d[m - 1]) / z;
            d.push(next);
        }
        self.compose(&d)
    }

    pub fn abs(&self) -> Result<Jet, JetError> {
        let x = self.value();
        if x > 0.0 {
            Ok(self.clone())
        } else if x < 0.0 {
            Ok(self.neg())
        } else if self.space.order == 0 {
            Ok(Jet::constant(self.space.clone(), 0.0))
        } else {
            Err(JetError::AbsAtZero)
        }
    }

    /// Jet of the partial derivative along `axis`, one order lower.
    pub fn extract_derivative(&self, axis: usize) -> Jet {
        assert!(self.space.order >= 1, "cannot differentiate an order-0 jet");
        assert!(axis < self.space.nvars);
        let target = JetSpace::get(self.space.nvars, self.space.order - 1);
        let mut coeffs = vec![0.0; target.len()];
        for (p, idx) in target.indices.iter().enumerate() {
            let mut bumped = idx.clone();
            bumped[axis] += 1;
            let src = self.space.pos[&bumped];
            coeffs[p] = self.coeffs[src] * (idx[axis] as f64 + 1.0);
        }
        Jet {
            space: target,
            coeffs,
        }
    }

    /// Forget derivatives above `order`. Indices are graded, so this is a
    /// prefix copy.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.space.order);
        if order == self.space.order {
            return self.clone();
        }
        let target = JetSpace::get(self.space.nvars, order);
        let coeffs = self.coeffs[..self.space.prefix_len[order]].to_vec();
        debug_assert_eq!(coeffs.len(), target.len());
        Jet {
            space: target,
            coeffs,
        }
    }
}

impl Num for Jet {
    fn nadd(&self, rhs: &Self) -> Self {
        self.add(rhs)
    }
    fn nsub(&self, rhs: &Self) -> Self {
        self.sub(rhs)
    }
    fn nmul(&self, rhs: &Self) -> Self {
        self.mul(rhs)
    }
    fn nneg(&self) -> Self {
        self.neg()
    }
    fn ndiv(&self, rhs: &Self) -> Option<Self> {
        self.div(rhs).ok()
    }
    fn nsqrt(&self) -> Option<Self> {
        self.sqrt().ok()
    }
    fn nconst(&self, c: f64) -> Self {
        Jet::constant(self.space.clone(), c)
    }
    fn nvalue(&self) -> f64 {
        self.value()
    }
}
