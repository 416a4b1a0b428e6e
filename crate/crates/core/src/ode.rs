//! The equation `y'' + b(x) y' + c(x) y = f(x)`, its two discriminants, and
//! its normal form `u'' + q(x) u = 0`.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{DomainError, Expr, ParamBindings, ParseError};
use crate::quadrature::adaptive_simpson;

/// Absolute tolerance for the weight quadrature.
pub const WEIGHT_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("coefficient {field}: {source}")]
    Parse {
        field: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("coefficient {field} uses unbound parameter `{name}`")]
    Unbound { field: &'static str, name: String },
    #[error("parameter `{name}` has non-finite value")]
    NonFiniteParam { name: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("integration path from {from} to {to} crosses a singular point near x = {at}")]
    SingularPath { from: f64, to: f64, at: f64 },
    #[error("coefficient evaluation failed at x = {x}: {source}")]
    Domain {
        x: f64,
        #[source]
        source: DomainError,
    },
}

/// Coefficient values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub b: f64,
    pub c: f64,
    pub f: f64,
}

/// A second-order linear ODE with its parameter values.
#[derive(Debug, Clone)]
pub struct OdeSpec {
    b: Expr,
    c: Expr,
    f: Expr,
    params: ParamBindings,
    singular_points: Vec<f64>,
    // parameters substituted, for fast evaluation
    bound: [Expr; 3],
    bound_prime: [Expr; 3],
}

/// Serializable echo of a spec.
#[derive(Debug, Clone, Serialize)]
pub struct SpecEcho {
    pub b: String,
    pub c: String,
    pub f: String,
    pub params: ParamBindings,
    pub singular_points: Vec<f64>,
}

impl OdeSpec {
    pub fn new(b: Expr, c: Expr, f: Expr, params: ParamBindings) -> Result<Self, SpecError> {
        for (name, v) in params.iter() {
            if !v.is_finite() {
                return Err(SpecError::NonFiniteParam { name: name.into() });
            }
        }
        for (field, e) in [("b", &b), ("c", &c), ("f", &f)] {
            if let Some(name) = e.params().into_iter().find(|p| params.get(p).is_none()) {
                return Err(SpecError::Unbound { field, name });
            }
        }
        let bound = [
            b.substitute(&params).simplify(),
            c.substitute(&params).simplify(),
            f.substitute(&params).simplify(),
        ];
        let bound_prime = [
            bound[0].differentiate(),
            bound[1].differentiate(),
            bound[2].differentiate(),
        ];
        Ok(Self {
            b,
            c,
            f,
            params,
            singular_points: Vec::new(),
            bound,
            bound_prime,
        })
    }

    pub fn homogeneous(b: Expr, c: Expr, params: ParamBindings) -> Result<Self, SpecError> {
        Self::new(b, c, Expr::zero(), params)
    }

    /// Parses the three coefficients. An empty `f` means homogeneous.
    pub fn parse(b: &str, c: &str, f: &str, params: ParamBindings) -> Result<Self, SpecError> {
        let field = |field: &'static str, text: &str| {
            Expr::parse(text).map_err(|source| SpecError::Parse { field, source })
        };
        let f = if f.trim().is_empty() {
            Expr::zero()
        } else {
            field("f", f)?
        };
        Self::new(field("b", b)?, field("c", c)?, f, params)
    }

    /// The normal-form equation `u'' + q u = 0` as a spec of its own.
    pub fn normal(q: Expr, params: ParamBindings) -> Result<Self, SpecError> {
        Self::homogeneous(Expr::zero(), q, params)
    }

    pub fn with_singular_points(mut self, mut points: Vec<f64>) -> Self {
        points.sort_by(f64::total_cmp);
        points.dedup();
        self.singular_points = points;
        self
    }

    pub fn b(&self) -> &Expr {
        &self.b
    }

    pub fn c(&self) -> &Expr {
        &self.c
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }

    pub fn params(&self) -> &ParamBindings {
        &self.params
    }

    pub fn singular_points(&self) -> &[f64] {
        &self.singular_points
    }

    /// b, c, f with the parameters substituted.
    pub fn bound_b(&self) -> &Expr {
        &self.bound[0]
    }

    pub fn bound_c(&self) -> &Expr {
        &self.bound[1]
    }

    pub fn bound_f(&self) -> &Expr {
        &self.bound[2]
    }

    pub fn is_homogeneous(&self) -> bool {
        self.f.simplify().is_zero()
    }

    /// True when neither b nor c depends on x.
    pub fn is_constant_coefficient(&self) -> bool {
        !self.bound_b().contains_x() && !self.bound_c().contains_x()
    }

    pub fn coefficients(&self, x: f64) -> Result<Coefficients, DomainError> {
        eval_bound(&self.bound, x)
    }

    /// `b'`, `c'` and `f'` at `x`.
    pub fn coefficient_derivatives(&self, x: f64) -> Result<Coefficients, DomainError> {
        eval_bound(&self.bound_prime, x)
    }

    /// Evaluates an expression in this spec's parameters, collapsing unbound
    /// parameters into a domain failure.
    pub fn eval_expr(&self, e: &Expr, x: f64) -> Result<f64, DomainError> {
        e.eval(x, &self.params).map_err(|err| match err {
            crate::expr::EvalError::Domain(d) => d,
            crate::expr::EvalError::Unbound(_) => DomainError::NonFinite,
        })
    }

    /// First declared singular point in the closed span between `a` and `b`.
    pub fn singular_point_between(&self, a: f64, b: f64) -> Option<f64> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.singular_points
            .iter()
            .copied()
            .find(|&s| s >= lo && s <= hi)
    }

    pub fn echo(&self) -> SpecEcho {
        SpecEcho {
            b: self.b.to_string(),
            c: self.c.to_string(),
            f: self.f.to_string(),
            params: self.params.clone(),
            singular_points: self.singular_points.clone(),
        }
    }

    pub fn discriminant(&self) -> Expr {
        discriminant(self)
    }

    pub fn naive_discriminant(&self) -> Expr {
        naive_discriminant(self)
    }
}

fn eval_bound(exprs: &[Expr; 3], x: f64) -> Result<Coefficients, DomainError> {
    let none = ParamBindings::new();
    let get = |e: &Expr| match e.eval(x, &none) {
        Ok(v) => Ok(v),
        Err(crate::expr::EvalError::Domain(d)) => Err(d),
        // construction guarantees every parameter is bound
        Err(crate::expr::EvalError::Unbound(_)) => unreachable!("parameters are substituted"),
    };
    Ok(Coefficients {
        b: get(&exprs[0])?,
        c: get(&exprs[1])?,
        f: get(&exprs[2])?,
    })
}

/// `b^2 - 4c + 2b'`, the predictor whose sign decides oscillation.
pub fn discriminant(spec: &OdeSpec) -> Expr {
    let b = spec.b().clone();
    let two_db = Expr::Const(2.0).mul(b.differentiate());
    b.pow(Expr::Const(2.0))
        .sub(Expr::Const(4.0).mul(spec.c().clone()))
        .add(two_db)
        .simplify()
}

/// `b^2 - 4c`, the frozen-coefficient characteristic-polynomial
/// discriminant. Only correct for constant coefficients.
pub fn naive_discriminant(spec: &OdeSpec) -> Expr {
    spec.b()
        .clone()
        .pow(Expr::Const(2.0))
        .sub(Expr::Const(4.0).mul(spec.c().clone()))
        .simplify()
}

/// `u'' + q u = 0` together with the weight `w` such that `y = w u`.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub q: Expr,
    pub anchor: f64,
    weight: Weight,
}

impl NormalForm {
    /// `w(x) = exp(-1/2 * integral of b from anchor to x)`.
    pub fn weight(&self, x: f64) -> Result<f64, OdeError> {
        self.weight.eval(x)
    }

    pub fn q_at(&self, x: f64, params: &ParamBindings) -> Result<f64, crate::expr::EvalError> {
        self.q.eval(x, params)
    }
}

/// Builds the normal form, anchoring the weight at `anchor`.
pub fn normal_form(spec: &OdeSpec, anchor: f64) -> Result<NormalForm, OdeError> {
    if let Some(at) = spec.singular_point_between(anchor, anchor) {
        return Err(OdeError::SingularPath {
            from: anchor,
            to: anchor,
            at,
        });
    }
    spec.coefficients(anchor)
        .map_err(|source| OdeError::Domain { x: anchor, source })?;
    let q = Expr::Const(-0.25).mul(discriminant(spec)).simplify();
    Ok(NormalForm {
        q,
        anchor,
        weight: Weight::new(spec, anchor),
    })
}

/// Numeric weight evaluator.
///
/// Integrals of b are accumulated over a fixed lattice of unit segments
/// outward from the anchor. Segment integrals are cached; since each one is
/// computed the same way regardless of which query filled it, results do
/// not depend on query order.
#[derive(Debug)]
struct Weight {
    b: Expr,
    anchor: f64,
    segment: f64,
    singular_points: Vec<f64>,
    cache: RwLock<HashMap<i64, f64>>,
}

impl Clone for Weight {
    fn clone(&self) -> Self {
        Self {
            b: self.b.clone(),
            anchor: self.anchor,
            segment: self.segment,
            singular_points: self.singular_points.clone(),
            cache: RwLock::new(self.cache.read().expect("weight cache poisoned").clone()),
        }
    }
}

impl Weight {
    fn new(spec: &OdeSpec, anchor: f64) -> Self {
        Self {
            b: spec.bound_b().clone(),
            anchor,
            segment: 1.0,
            singular_points: spec.singular_points().to_vec(),
            cache: RwLock::new(HashMap::new()),
        }
    }

    fn eval(&self, x: f64) -> Result<f64, OdeError> {
        if x == self.anchor {
            return Ok(1.0);
        }
        Ok((-0.5 * self.integral(x)?).exp())
    }

    fn integrate(&self, a: f64, b: f64) -> Result<f64, OdeError> {
        let none = ParamBindings::new();
        adaptive_simpson(
            |t| {
                self.b.eval(t, &none).map_err(|e| match e {
                    crate::expr::EvalError::Domain(d) => d,
                    crate::expr::EvalError::Unbound(_) => DomainError::NonFinite,
                })
            },
            a,
            b,
            WEIGHT_QUAD_TOL,
        )
        .map_err(|fail| OdeError::SingularPath {
            from: self.anchor,
            to: b,
            at: fail.at,
        })
    }

    fn integral(&self, x: f64) -> Result<f64, OdeError> {
        let (lo, hi) = if x < self.anchor {
            (x, self.anchor)
        } else {
            (self.anchor, x)
        };
        if let Some(&at) = self.singular_points.iter().find(|&&s| s >= lo && s <= hi) {
            return Err(OdeError::SingularPath {
                from: self.anchor,
                to: x,
                at,
            });
        }
        let dir = if x > self.anchor { 1.0 } else { -1.0 };
        let full = ((x - self.anchor).abs() / self.segment).floor() as i64;
        let mut total = 0.0;
        for k in 0..full {
            total += self.segment_integral(dir, k)?;
        }
        let start = self.anchor + dir * full as f64 * self.segment;
        Ok(total + self.integrate(start, x)?)
    }

    fn segment_integral(&self, dir: f64, k: i64) -> Result<f64, OdeError> {
        let key = if dir > 0.0 { k + 1 } else { -(k + 1) };
        if let Some(v) = self.cache.read().expect("weight cache poisoned").get(&key) {
            return Ok(*v);
        }
        let a = self.anchor + dir * k as f64 * self.segment;
        let b = self.anchor + dir * (k + 1) as f64 * self.segment;
        let v = self.integrate(a, b)?;
        self.cache
            .write()
            .expect("weight cache poisoned")
            .insert(key, v);
        Ok(v)
    }
}
