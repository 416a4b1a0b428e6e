//! Bottom-up constant folding and identity elimination.
//!
//! Every rewrite is exact in IEEE arithmetic on the common domain of the
//! input and output, so evaluation is unchanged wherever both are defined.

use super::{apply_binary, BinOp, Expr};

pub(super) fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::X | Expr::Param(_) => e.clone(),
        Expr::Neg(a) => neg(simplify(a)),
        Expr::Call(f, a) => {
            let a = simplify(a);
            if let Some(v) = a.as_const() {
                if let Ok(out) = f.apply(v) {
                    return Expr::Const(out);
                }
            }
            Expr::call(*f, a)
        }
        Expr::Binary(op, l, r) => binary(*op, simplify(l), simplify(r)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(v) => Expr::Const(-v),
        Expr::Neg(inner) => *inner,
        other => other.neg(),
    }
}

fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
    if let (Some(a), Some(b)) = (l.as_const(), r.as_const()) {
        if let Ok(v) = apply_binary(op, a, b) {
            return Expr::Const(v);
        }
    }
    let lc = l.as_const();
    let rc = r.as_const();
    match op {
        BinOp::Add => match (lc, rc) {
            (Some(0.0), _) => r,
            (_, Some(0.0)) => l,
            _ => match r {
                Expr::Neg(inner) => binary(BinOp::Sub, l, *inner),
                r => l.add(r),
            },
        },
        BinOp::Sub => match (lc, rc) {
            (_, Some(0.0)) => l,
            (Some(0.0), _) => neg(r),
            _ => match r {
                Expr::Neg(inner) => binary(BinOp::Add, l, *inner),
                r => l.sub(r),
            },
        },
        BinOp::Mul => match (lc, rc) {
            (Some(0.0), _) | (_, Some(0.0)) => Expr::Const(0.0),
            (Some(1.0), _) => r,
            (_, Some(1.0)) => l,
            (Some(-1.0), _) => neg(r),
            (_, Some(-1.0)) => neg(l),
            _ => match (l, r) {
                (Expr::Neg(a), Expr::Neg(b)) => binary(BinOp::Mul, *a, *b),
                (Expr::Neg(a), b) => neg(binary(BinOp::Mul, *a, b)),
                (a, Expr::Neg(b)) => neg(binary(BinOp::Mul, a, *b)),
                (l, r) => l.mul(r),
            },
        },
        BinOp::Div => match (lc, rc) {
            (Some(0.0), _) => Expr::Const(0.0),
            (_, Some(1.0)) => l,
            (_, Some(-1.0)) => neg(l),
            _ => match (l, r) {
                (Expr::Neg(a), Expr::Neg(b)) => binary(BinOp::Div, *a, *b),
                (Expr::Neg(a), b) => neg(binary(BinOp::Div, *a, b)),
                (a, Expr::Neg(b)) => neg(binary(BinOp::Div, a, *b)),
                (l, r) => l.div(r),
            },
        },
        BinOp::Pow => match (lc, rc) {
            (_, Some(1.0)) => l,
            (_, Some(0.0)) => Expr::Const(1.0),
            (Some(1.0), _) => Expr::Const(1.0),
            _ => l.pow(r),
        },
    }
}
