//! Property tests for the expression layer: printing round-trips, order-0
//! jets agree with plain evaluation, and jet derivatives of random
//! polynomials match the symbolic-derivative oracle.

use proptest::prelude::*;

use solitonscope::expr::{eval_jet, eval_scalar, parse, EvalContext, Expr, UnaryOp};

const VARS: [&str; 3] = ["u1", "u2", "u3"];

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-3.0f64..3.0).prop_map(Expr::num),
        (0usize..3).prop_map(|i| Expr::var(VARS[i])),
    ]
}

/// Arbitrary expressions over the full grammar (for syntactic properties).
fn arb_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 48, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                solitonscope::expr::BinOp::Div,
                a.into(),
                b.into()
            )),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| Expr::pow(a, Expr::num(k as f64))),
            inner.clone().prop_map(Expr::neg),
            (
                prop_oneof![
                    Just(UnaryOp::Sin),
                    Just(UnaryOp::Cos),
                    Just(UnaryOp::Tan),
                    Just(UnaryOp::Sinh),
                    Just(UnaryOp::Cosh),
                    Just(UnaryOp::Tanh),
                    Just(UnaryOp::Exp),
                    Just(UnaryOp::Log),
                    Just(UnaryOp::Sqrt),
                    Just(UnaryOp::Abs),
                    Just(UnaryOp::Atan),
                ],
                inner
            )
                .prop_map(|(op, a)| Expr::func(op, a)),
        ]
    })
}

/// Polynomial expressions: exact derivatives exist and the symbolic oracle
/// is exact too.
fn arb_polynomial() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner, 0u32..3).prop_map(|(a, k)| Expr::pow(a, Expr::num(k as f64))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_parse_is_a_fixed_point(e in arb_expr()) {
        let printed = e.to_string();
        let reparsed = parse(&printed);
        prop_assert!(reparsed.is_ok(), "`{printed}` failed to parse: {reparsed:?}");
        prop_assert_eq!(&reparsed.unwrap(), &e, "round trip of `{}`", printed);
    }

    #[test]
    fn order_zero_jet_equals_scalar_evaluation(
        e in arb_expr(),
        x in -2.0f64..2.0,
        y in -2.0f64..2.0,
        z in -2.0f64..2.0,
    ) {
        let binds = vec![
            ("u1".to_string(), x),
            ("u2".to_string(), y),
            ("u3".to_string(), z),
        ];
        let ctx = EvalContext::new(binds.clone(), 0);
        match (eval_scalar(&e, &binds), eval_jet(&e, &ctx)) {
            (Ok(a), Ok(j)) => {
                let b = j.value();
                // bit-for-bit when finite (overflow to inf is also shared)
                prop_assert!(
                    a == b || (a.is_nan() && b.is_nan()),
                    "scalar {a} vs jet {b} for `{e}`"
                );
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "divergent outcomes for `{e}`: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn polynomial_jets_match_symbolic_oracle(
        e in arb_polynomial(),
        x in -1.5f64..1.5,
        y in -1.5f64..1.5,
        z in -1.5f64..1.5,
    ) {
        let binds = vec![
            ("u1".to_string(), x),
            ("u2".to_string(), y),
            ("u3".to_string(), z),
        ];
        let ctx = EvalContext::new(binds.clone(), 4);
        let jet = match eval_jet(&e, &ctx) {
            Ok(j) => j,
            Err(_) => return Ok(()), // overflow in a degenerate random tree
        };
        for (idx, val) in jet.partials() {
            let mut oracle = e.clone();
            for (axis, &count) in idx.iter().enumerate() {
                for _ in 0..count {
                    oracle = oracle.diff(VARS[axis]);
                }
            }
            let expect = eval_scalar(&oracle, &binds).unwrap();
            if !expect.is_finite() || !val.is_finite() {
                continue;
            }
            let scale = expect.abs().max(1.0);
            prop_assert!(
                (val - expect).abs() <= 1e-12 * scale,
                "partial {idx:?} of `{e}`: jet {val} vs oracle {expect}"
            );
        }
    }

    #[test]
    fn free_vars_are_exactly_the_referenced_names(e in arb_expr()) {
        // every reported variable occurs in the printed form, and vice versa
        let printed = e.to_string();
        for v in e.free_vars() {
            prop_assert!(printed.contains(&v), "`{printed}` should mention {v}");
        }
    }
}
