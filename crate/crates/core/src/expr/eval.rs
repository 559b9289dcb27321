//! Evaluation of expressions, either as plain scalars or as truncated
//! Taylor jets over the bound variables.

use thiserror::Error;

use super::jet::{default_max_jet_order, Jet, JetError, JetSpace};
use super::{BinOp, Expr, UnaryOp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{name}`")]
    Unbound { name: String },
    #[error("domain error in `{subexpr}`: {message}")]
    Domain { subexpr: String, message: String },
    #[error("jet order {requested} exceeds the configured maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },
}

/// Bindings plus the differentiation request: jets are taken with respect to
/// the bound variables in the order given here.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub vars: Vec<(String, f64)>,
    pub order: usize,
    pub max_order: usize,
}

impl EvalContext {
    pub fn new(vars: Vec<(String, f64)>, order: usize) -> EvalContext {
        EvalContext {
            vars,
            order,
            max_order: default_max_jet_order(),
        }
    }

    pub fn with_max_order(mut self, max_order: usize) -> EvalContext {
        self.max_order = max_order;
        self
    }
}

fn domain(e: &Expr, err: JetError) -> EvalError {
    EvalError::Domain {
        subexpr: e.to_string(),
        message: err.to_string(),
    }
}

/// Integer power by the same square-and-multiply sequence the jet engine
/// uses, so order-0 jet evaluation and scalar evaluation agree bit for bit.
fn powi_bin(x: f64, k: i64) -> Option<f64> {
    if k == 0 {
        return Some(1.0);
    }
    let base = if k < 0 {
        if x == 0.0 {
            return None;
        }
        1.0 / x
    } else {
        x
    };
    let mut e = k.unsigned_abs();
    let mut acc = 1.0;
    let mut sq = base;
    loop {
        if e & 1 == 1 {
            acc *= sq;
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        sq *= sq;
    }
    Some(acc)
}

/// Evaluate `e` as a jet of the context's order at the bound point.
/// All free variables must be bound; the order-0 coefficient equals the
/// plain scalar evaluation.
pub fn eval_jet(e: &Expr, ctx: &EvalContext) -> Result<Jet, EvalError> {
    if ctx.order > ctx.max_order {
        return Err(EvalError::OrderTooHigh {
            requested: ctx.order,
            max: ctx.max_order,
        });
    }
    let space = JetSpace::get(ctx.vars.len(), ctx.order);
    eval_jet_in(e, ctx, &space)
}

fn eval_jet_in(
    e: &Expr,
    ctx: &EvalContext,
    space: &std::sync::Arc<JetSpace>,
) -> Result<Jet, EvalError> {
    match e {
        Expr::Num(v) => Ok(Jet::constant(space.clone(), *v)),
        Expr::Var(name) => {
            let axis = ctx
                .vars
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| EvalError::Unbound { name: name.clone() })?;
            Ok(Jet::variable(space.clone(), axis, ctx.vars[axis].1))
        }
        Expr::Unary(op, inner) => {
            let x = eval_jet_in(inner, ctx, space)?;
            match op {
                UnaryOp::Neg => Ok(x.neg()),
                UnaryOp::Sin => Ok(x.sin()),
                UnaryOp::Cos => Ok(x.cos()),
                UnaryOp::Tan => Ok(x.tan()),
                UnaryOp::Sinh => Ok(x.sinh()),
                UnaryOp::Cosh => Ok(x.cosh()),
                UnaryOp::Tanh => Ok(x.tanh()),
                UnaryOp::Exp => Ok(x.exp()),
                UnaryOp::Log => x.ln().map_err(|err| domain(e, err)),
                UnaryOp::Sqrt => x.sqrt().map_err(|err| domain(e, err)),
                UnaryOp::Abs => x.abs().map_err(|err| domain(e, err)),
                UnaryOp::Atan => Ok(x.atan()),
            }
        }
        Expr::Binary(op, l, r) => {
            let a = eval_jet_in(l, ctx, space)?;
            let b = eval_jet_in(r, ctx, space)?;
            match op {
                BinOp::Add => Ok(a.add(&b)),
                BinOp::Sub => Ok(a.sub(&b)),
                BinOp::Mul => Ok(a.mul(&b)),
                BinOp::Div => a.div(&b).map_err(|err| domain(e, err)),
                BinOp::Pow => a.pow(&b).map_err(|err| domain(e, err)),
            }
        }
    }
}

/// Plain recursive evaluation; agrees exactly with `eval_jet` at order 0.
pub fn eval_scalar(e: &Expr, bindings: &[(String, f64)]) -> Result<f64, EvalError> {
    match e {
        Expr::Num(v) => Ok(*v),
        Expr::Var(name) => bindings
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| EvalError::Unbound { name: name.clone() }),
        Expr::Unary(op, inner) => {
            let x = eval_scalar(inner, bindings)?;
            match op {
                UnaryOp::Neg => Ok(-x),
                UnaryOp::Sin => Ok(x.sin()),
                UnaryOp::Cos => Ok(x.cos()),
                UnaryOp::Tan => Ok(x.tan()),
                UnaryOp::Sinh => Ok(x.sinh()),
                UnaryOp::Cosh => Ok(x.cosh()),
                UnaryOp::Tanh => Ok(x.tanh()),
                UnaryOp::Exp => Ok(x.exp()),
                UnaryOp::Log => {
                    if x <= 0.0 {
                        Err(domain(e, JetError::LogNonPositive))
                    } else {
                        Ok(x.ln())
                    }
                }
                UnaryOp::Sqrt => {
                    if x < 0.0 {
                        Err(domain(e, JetError::SqrtNegative))
                    } else {
                        Ok(x.sqrt())
                    }
                }
                UnaryOp::Abs => Ok(x.abs()),
                UnaryOp::Atan => Ok(x.atan()),
            }
        }
        Expr::Binary(op, l, r) => {
            let a = eval_scalar(l, bindings)?;
            let b = eval_scalar(r, bindings)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => {
                    if b == 0.0 {
                        Err(domain(e, JetError::DivisionByZero))
                    } else {
                        Ok(a / b)
                    }
                }
                BinOp::Pow => {
                    if b.fract() == 0.0 && b.abs() <= 2147483647.0 {
                        powi_bin(a, b as i64).ok_or_else(|| domain(e, JetError::DivisionByZero))
                    } else if a <= 0.0 {
                        Err(domain(e, JetError::PowNonPositiveBase))
                    } else {
                        Ok(a.powf(b))
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn ctx(vars: &[(&str, f64)], order: usize) -> EvalContext {
        EvalContext::new(
            vars.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
            order,
        )
    }

    #[test]
    fn unbound_variable_reported() {
        let e = parse("log(e^x)").unwrap();
        let err = eval_jet(&e, &ctx(&[("x", 1.0)], 1)).unwrap_err();
        assert_eq!(
            err,
            EvalError::Unbound {
                name: "e".to_string()
            }
        );
    }

    #[test]
    fn division_by_zero_names_subexpression() {
        let e = parse("1/(u1-1)").unwrap();
        match eval_jet(&e, &ctx(&[("u1", 1.0)], 1)) {
            Err(EvalError::Domain { subexpr, .. }) => assert_eq!(subexpr, "1/(u1-1)"),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn order_capped() {
        let e = parse("u1").unwrap();
        let c = ctx(&[("u1", 1.0)], 5);
        assert!(matches!(
            eval_jet(&e, &c),
            Err(EvalError::OrderTooHigh {
                requested: 5,
                max: 4
            })
        ));
        let raised = c.with_max_order(6);
        assert!(eval_jet(&e, &raised).is_ok());
    }

    #[test]
    fn order_zero_matches_scalar_eval() {
        let exprs = [
            "u1^2+sinh(u2)",
            "exp(u1*u2)-atan(u2)",
            "sqrt(u1^2+1)/cosh(u2)",
            "tan(u1)*log(u1+2)",
        ];
        let binds = [("u1".to_string(), 0.7), ("u2".to_string(), -1.3)];
        for s in exprs {
            let e = parse(s).unwrap();
            let scalar = eval_scalar(&e, &binds).unwrap();
            let jet = eval_jet(&e, &ctx(&[("u1", 0.7), ("u2", -1.3)], 0)).unwrap();
            assert_eq!(jet.value(), scalar, "expr {s}");
        }
    }

    #[test]
    fn polynomial_on_negative_domain() {
        // integer powers must work for negative bases
        let e = parse("u1^3 - u1^2").unwrap();
        let j = eval_jet(&e, &ctx(&[("u1", -2.0)], 2)).unwrap();
        assert_eq!(j.value(), -12.0);
        assert_eq!(j.partial(&[1]), 3.0 * 4.0 - 2.0 * -2.0);
        assert_eq!(j.partial(&[2]), 6.0 * -2.0 - 2.0);
    }
}
