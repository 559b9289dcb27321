//! A small math expression language: parsing, printing, free-variable
//! analysis, symbolic first derivatives, and evaluation either as plain
//! scalars or as multivariate truncated-Taylor jets.
//!
//! Grammar (precedence `^` > unary minus > `*` `/` > `+` `-`, with `^`
//! right-associative and binding tighter than unary minus on its left
//! operand, so `-u1^2` parses as `-(u1^2)`):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | base
//! base   := atom ("^" factor)?
//! atom   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Numbers are decimal with an optional exponent. Identifiers are
//! `[a-zA-Z_][a-zA-Z0-9_]*`; an identifier followed by `(` must be one of
//! the known functions. There are no named constants: `pi` is a free
//! variable unless bound.

mod eval;
mod jet;

pub use eval::{eval_jet, eval_scalar, EvalContext, EvalError};
pub use jet::{
    default_max_jet_order, set_default_max_jet_order, Jet, JetSpace, DEFAULT_MAX_JET_ORDER,
};

use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
    Atan,
}

impl UnaryOp {
    fn function_name(self) -> Option<&'static str> {
        Some(match self {
            UnaryOp::Neg => return None,
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
            UnaryOp::Atan => "atan",
        })
    }

    fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tan" => UnaryOp::Tan,
            "sinh" => UnaryOp::Sinh,
            "cosh" => UnaryOp::Cosh,
            "tanh" => UnaryOp::Tanh,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            "atan" => UnaryOp::Atan,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression AST. Immutable after construction; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("empty input")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
}

/// Parse an expression. See the module docs for the grammar.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(ParseError::Empty);
    }
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(ParseError::Syntax {
            offset: p.pos,
            message: format!("unexpected `{}`", p.peek_char()),
        });
    }
    Ok(e)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_char(&self) -> char {
        self.bytes.get(self.pos).map(|&b| b as char).unwrap_or(' ')
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Expr::Binary(BinOp::Add, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expr::Binary(BinOp::Sub, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = Expr::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = Expr::Binary(BinOp::Div, Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            let inner = self.factor()?;
            Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)))
        } else {
            self.base()
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let atom = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            let exp = self.factor()?;
            Ok(Expr::Binary(BinOp::Pow, Box::new(atom), Box::new(exp)))
        } else {
            Ok(atom)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(ParseError::Syntax {
                        offset: self.pos,
                        message: "expected `)`".into(),
                    });
                }
                Ok(e)
            }
            Some(b) if b.is_ascii_digit() => self.number(),
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => self.ident_or_call(),
            _ => Err(ParseError::Syntax {
                offset: self.pos,
                message: if self.at_end() {
                    "unexpected end of input".into()
                } else {
                    format!("unexpected `{}`", self.peek_char())
                },
            }),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            if !matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                return Err(ParseError::Syntax {
                    offset: self.pos,
                    message: "expected digits after decimal point".into(),
                });
            }
            while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            // only an exponent if followed by digits (or sign + digits)
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("invalid number `{text}`"),
        })?;
        Ok(Expr::Num(value))
    }

    fn ident_or_call(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .to_string();
        let save = self.pos;
        self.skip_ws();
        if self.eat(b'(') {
            let op = UnaryOp::from_name(&name).ok_or(ParseError::UnknownFunction {
                offset: start,
                name: name.clone(),
            })?;
            let arg = self.expr()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(ParseError::Syntax {
                    offset: self.pos,
                    message: "expected `)`".into(),
                });
            }
            Ok(Expr::Unary(op, Box::new(arg)))
        } else {
            self.pos = save;
            Ok(Expr::Var(name))
        }
    }
}

// Precedence levels for printing: must agree with the parser.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Num(_) | Expr::Var(_) => 5,
        Expr::Unary(UnaryOp::Neg, _) => 3,
        Expr::Unary(..) => 5, // function call syntax is self-delimiting
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Binary(BinOp::Pow, ..) => 4,
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(child) < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Unary(UnaryOp::Neg, inner) => {
                write!(f, "-")?;
                fmt_child(f, inner, 3)
            }
            Expr::Unary(op, inner) => {
                write!(f, "{}({inner})", op.function_name().unwrap())
            }
            Expr::Binary(op, l, r) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                match op {
                    BinOp::Pow => {
                        // right-associative: parenthesize compound left operands
                        fmt_child(f, l, 5)?;
                        write!(f, "{sym}")?;
                        fmt_child(f, r, 4)
                    }
                    _ => {
                        fmt_child(f, l, prec)?;
                        write!(f, "{sym}")?;
                        fmt_child(f, r, prec + 1)
                    }
                }
            }
        }
    }
}

impl Expr {
    /// Variable names referenced anywhere in the AST, lexicographic.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Unary(_, inner) => inner.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// Literal constant; negative values are normalized to `Neg` of a
    /// positive literal so that printing round-trips.
    pub fn num(value: f64) -> Expr {
        debug_assert!(value.is_finite());
        if value < 0.0 {
            Expr::Unary(UnaryOp::Neg, Box::new(Expr::Num(-value)))
        } else {
            Expr::Num(value + 0.0) // maps -0.0 to 0.0
        }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Unary(UnaryOp::Neg, inner) => inner.as_const().map(|v| -v),
            _ => None,
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            (Some(x), Some(y)) => Expr::num(x + y),
            _ => Expr::Binary(BinOp::Add, Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (_, Some(0.0)) => a,
            (Some(0.0), _) => Expr::neg(b),
            (Some(x), Some(y)) => Expr::num(x - y),
            _ => Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(0.0), _) | (_, Some(0.0)) => Expr::Num(0.0),
            (Some(1.0), _) => b,
            (_, Some(1.0)) => a,
            (Some(x), Some(y)) => Expr::num(x * y),
            _ => Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(0.0), _) => Expr::Num(0.0),
            (_, Some(1.0)) => a,
            _ => Expr::Binary(BinOp::Div, Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Num(v) => Expr::num(-v),
            Expr::Unary(UnaryOp::Neg, inner) => *inner,
            other => Expr::Unary(UnaryOp::Neg, Box::new(other)),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        match b.as_const() {
            Some(0.0) => Expr::Num(1.0),
            Some(1.0) => a,
            _ => Expr::Binary(BinOp::Pow, Box::new(a), Box::new(b)),
        }
    }

    pub fn func(op: UnaryOp, a: Expr) -> Expr {
        Expr::Unary(op, Box::new(a))
    }

    /// Replace every occurrence of variable `name` by a numeric literal.
    pub fn substitute(&self, name: &str, value: f64) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(v) => {
                if v == name {
                    Expr::num(value)
                } else {
                    self.clone()
                }
            }
            Expr::Unary(op, inner) => Expr::Unary(*op, Box::new(inner.substitute(name, value))),
            Expr::Binary(op, l, r) => Expr::Binary(
                *op,
                Box::new(l.substitute(name, value)),
                Box::new(r.substitute(name, value)),
            ),
        }
    }

    /// Symbolic partial derivative with respect to `var`, with light
    /// constant folding to keep derived expressions compact.
    pub fn diff(&self, var: &str) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(name) => {
                if name == var {
                    Expr::Num(1.0)
                } else {
                    Expr::Num(0.0)
                }
            }
            Expr::Unary(op, inner) => {
                let de = inner.diff(var);
                let e = (**inner).clone();
                match op {
                    UnaryOp::Neg => Expr::neg(de),
                    UnaryOp::Sin => Expr::mul(Expr::func(UnaryOp::Cos, e), de),
                    UnaryOp::Cos => Expr::neg(Expr::mul(Expr::func(UnaryOp::Sin, e), de)),
                    UnaryOp::Tan => {
                        let t = Expr::func(UnaryOp::Tan, e);
                        Expr::mul(Expr::add(Expr::Num(1.0), Expr::mul(t.clone(), t)), de)
                    }
                    UnaryOp::Sinh => Expr::mul(Expr::func(UnaryOp::Cosh, e), de),
                    UnaryOp::Cosh => Expr::mul(Expr::func(UnaryOp::Sinh, e), de),
                    UnaryOp::Tanh => {
                        let t = Expr::func(UnaryOp::Tanh, e);
                        Expr::mul(Expr::sub(Expr::Num(1.0), Expr::mul(t.clone(), t)), de)
                    }
                    UnaryOp::Exp => Expr::mul(Expr::func(UnaryOp::Exp, e), de),
                    UnaryOp::Log => Expr::div(de, e),
                    UnaryOp::Sqrt => {
                        Expr::div(de, Expr::mul(Expr::Num(2.0), Expr::func(UnaryOp::Sqrt, e)))
                    }
                    UnaryOp::Abs => {
                        // sign(e) * de, written so evaluation at 0 is a domain error
                        Expr::mul(Expr::div(e.clone(), Expr::func(UnaryOp::Abs, e)), de)
                    }
                    UnaryOp::Atan => {
                        Expr::div(de, Expr::add(Expr::Num(1.0), Expr::mul(e.clone(), e)))
                    }
                }
            }
            Expr::Binary(op, l, r) => {
                let dl = l.diff(var);
                let dr = r.diff(var);
                let (a, b) = ((**l).clone(), (**r).clone());
                match op {
                    BinOp::Add => Expr::add(dl, dr),
                    BinOp::Sub => Expr::sub(dl, dr),
                    BinOp::Mul => Expr::add(Expr::mul(dl, b), Expr::mul(a, dr)),
                    BinOp::Div => Expr::div(
                        Expr::sub(Expr::mul(dl, b.clone()), Expr::mul(a, dr)),
                        Expr::mul(b.clone(), b),
                    ),
                    BinOp::Pow => {
                        if let Some(c) = r.as_const() {
                            // d(a^c) = c a^(c-1) da
                            Expr::mul(
                                Expr::mul(Expr::num(c), Expr::pow(a, Expr::num(c - 1.0))),
                                dl,
                            )
                        } else {
                            // d(a^b) = a^b (db log a + b da / a)
                            let val = Expr::pow(a.clone(), b.clone());
                            let term1 = Expr::mul(dr, Expr::func(UnaryOp::Log, a.clone()));
                            let term2 = Expr::div(Expr::mul(b, dl), a);
                            Expr::mul(val, Expr::add(term1, term2))
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn parse_precedence() {
        // "u1^2 + sinh(u2)" -> Add(Pow(u1, 2), Sinh(u2))
        let e = p("u1^2 + sinh(u2)");
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Binary(
                    BinOp::Pow,
                    Box::new(Expr::var("u1")),
                    Box::new(Expr::Num(2.0))
                )),
                Box::new(Expr::Unary(UnaryOp::Sinh, Box::new(Expr::var("u2"))))
            )
        );
    }

    #[test]
    fn unary_minus_binds_below_pow() {
        // "-u1^2" -> Neg(Pow(u1, 2)), not Pow(Neg(u1), 2)
        let e = p("-u1^2");
        assert_eq!(
            e,
            Expr::Unary(
                UnaryOp::Neg,
                Box::new(Expr::Binary(
                    BinOp::Pow,
                    Box::new(Expr::var("u1")),
                    Box::new(Expr::Num(2.0))
                ))
            )
        );
    }

    #[test]
    fn pow_right_associative() {
        let e = p("2^3^2");
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Pow,
                Box::new(Expr::Num(2.0)),
                Box::new(Expr::Binary(
                    BinOp::Pow,
                    Box::new(Expr::Num(3.0)),
                    Box::new(Expr::Num(2.0))
                ))
            )
        );
    }

    #[test]
    fn no_named_constants() {
        // "log(e^x)" parses with `e` as a plain variable; binding is checked
        // at evaluation time.
        let e = p("log(e^x)");
        assert_eq!(e.free_vars().into_iter().collect::<Vec<_>>(), ["e", "x"]);
    }

    #[test]
    fn unknown_function_rejected() {
        match parse("foo(1)") {
            Err(ParseError::UnknownFunction { name, offset }) => {
                assert_eq!(name, "foo");
                assert_eq!(offset, 0);
            }
            other => panic!("expected unknown function, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(parse(""), Err(ParseError::Empty));
        assert_eq!(parse("   "), Err(ParseError::Empty));
    }

    #[test]
    fn syntax_error_reports_offset() {
        match parse("1 + * 2") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn free_vars_examples() {
        assert_eq!(
            p("u1*u3").free_vars().into_iter().collect::<Vec<_>>(),
            ["u1", "u3"]
        );
        assert!(p("2.5").free_vars().is_empty());
        assert_eq!(
            p("sin(t)+t").free_vars().into_iter().collect::<Vec<_>>(),
            ["t"]
        );
    }

    #[test]
    fn print_parse_roundtrip_samples() {
        for s in [
            "u1^2+sinh(u2)",
            "-u1^2",
            "2^3^2",
            "(2^3)^2",
            "1/(u1*u2)-u3",
            "sqrt(abs(u1))",
            "2^-3",
            "u1-(u2-u3)",
            "-(u1+u2)",
            "1.5e-3*u1",
        ] {
            let e = p(s);
            let printed = e.to_string();
            let reparsed = parse(&printed)
                .unwrap_or_else(|err| panic!("reprint of `{s}` -> `{printed}` failed: {err}"));
            assert_eq!(e, reparsed, "round trip of `{s}` via `{printed}`");
        }
    }

    #[test]
    fn diff_polynomial() {
        let e = p("u1^3 + 2*u1*u2");
        let d = e.diff("u1");
        // check numerically at a point
        let binds = [("u1".to_string(), 1.5), ("u2".to_string(), -0.5)];
        let val = eval_scalar(&d, &binds).unwrap();
        assert!((val - (3.0 * 1.5 * 1.5 + 2.0 * -0.5)).abs() < 1e-12);
    }

    #[test]
    fn substitute_binds_parameter() {
        let e = p("r*sin(u1)");
        let s = e.substitute("r", 2.0);
        assert!(s.free_vars().into_iter().collect::<Vec<_>>() == ["u1"]);
        let binds = [("u1".to_string(), 0.5)];
        let val = eval_scalar(&s, &binds).unwrap();
        assert!((val - 2.0 * 0.5f64.sin()).abs() < 1e-15);
    }
}
