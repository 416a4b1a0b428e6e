use super::{BinOp, Expr, Func};

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

/// Raw derivative; the caller simplifies.
pub(super) fn differentiate(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Param(_) => c(0.0),
        Expr::X => c(1.0),
        Expr::Neg(a) => differentiate(a).neg(),
        Expr::Binary(op, l, r) => {
            let (u, v) = (l.as_ref().clone(), r.as_ref().clone());
            match op {
                BinOp::Add => differentiate(l).add(differentiate(r)),
                BinOp::Sub => differentiate(l).sub(differentiate(r)),
                BinOp::Mul => differentiate(l).mul(v).add(u.mul(differentiate(r))),
                BinOp::Div => differentiate(l)
                    .mul(v.clone())
                    .sub(u.mul(differentiate(r)))
                    .div(v.pow(c(2.0))),
                BinOp::Pow => {
                    if !v.contains_x() {
                        // d(u^n) = n u^(n-1) u'
                        v.clone().mul(u.pow(v.sub(c(1.0)))).mul(differentiate(l))
                    } else if !u.contains_x() {
                        // d(a^v) = a^v ln(a) v'
                        e.clone().mul(Expr::call(Func::Ln, u)).mul(differentiate(r))
                    } else {
                        // d(u^v) = u^v (v' ln u + v u'/u)
                        let inner = differentiate(r)
                            .mul(Expr::call(Func::Ln, u.clone()))
                            .add(v.mul(differentiate(l)).div(u));
                        e.clone().mul(inner)
                    }
                }
            }
        }
        Expr::Call(func, a) => {
            let u = a.as_ref().clone();
            let du = differentiate(a);
            match func {
                Func::Sin => Expr::call(Func::Cos, u).mul(du),
                Func::Cos => Expr::call(Func::Sin, u).neg().mul(du),
                Func::Tan => du.div(Expr::call(Func::Cos, u).pow(c(2.0))),
                Func::Exp => Expr::call(Func::Exp, u).mul(du),
                Func::Ln => du.div(u),
                Func::Sqrt => du.div(c(2.0).mul(Expr::call(Func::Sqrt, u))),
                // sign(u) u', undefined at u = 0
                Func::Abs => u.clone().div(Expr::call(Func::Abs, u)).mul(du),
            }
        }
    }
}
