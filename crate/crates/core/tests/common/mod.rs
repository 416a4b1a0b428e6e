#![allow(dead_code)]

use oscillation::expr::{BinOp, Expr, Func, ParamBindings};
use proptest::prelude::*;

/// Value bound to the single parameter `a` used by generated expressions.
pub const A: f64 = 1.3;

pub fn bindings() -> ParamBindings {
    ParamBindings::from_pairs([("a", A)])
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        3 => Just(Expr::X),
        2 => (-30i32..=30).prop_map(|k| Expr::Const(k as f64 / 10.0)),
        1 => Just(Expr::param("a")),
    ]
}

fn binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Mul),
        Just(BinOp::Div),
    ]
}

/// Random expressions in `x` and `a` built from every operator and function.
pub fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            4 => (binop(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            2 => (inner.clone(), -2i32..=3).prop_map(|(b, k)| b.pow(Expr::Const(k as f64))),
            1 => (inner.clone(), inner.clone()).prop_map(|(b, e)| b.pow(e)),
            3 => (proptest::sample::select(Func::ALL.to_vec()), inner.clone())
                .prop_map(|(f, a)| Expr::call(f, a)),
            1 => inner.prop_map(Expr::neg),
        ]
    })
}

/// Central difference with step `h`, or `None` outside the domain.
pub fn central_difference(e: &Expr, x: f64, h: f64) -> Option<f64> {
    let p = bindings();
    let fp = e.eval(x + h, &p).ok()?;
    let fm = e.eval(x - h, &p).ok()?;
    Some((fp - fm) / (2.0 * h))
}

/// Compares the symbolic derivative with a central difference (step 1e-5)
/// at `x`. Returns `None` when `x` is not a usable point: outside the
/// domain, or so close to a singularity that the difference quotient itself
/// is unreliable (steps 1e-5 and 2e-5 disagree).
pub fn derivative_error(e: &Expr, d: &Expr, x: f64) -> Option<(f64, f64)> {
    let p = bindings();
    let v = e.eval(x, &p).ok()?;
    let exact = d.eval(x, &p).ok()?;
    let h = 1e-5;
    let cd = central_difference(e, x, h)?;
    let cd2 = central_difference(e, x, 2.0 * h)?;
    if !(v.is_finite() && exact.is_finite() && cd.is_finite()) || v.abs() > 1e6 {
        return None;
    }
    if (cd - cd2).abs() > 1e-6 * (1.0 + cd.abs()) {
        return None;
    }
    Some(((exact - cd).abs(), 1e-5 * (1.0 + exact.abs())))
}
