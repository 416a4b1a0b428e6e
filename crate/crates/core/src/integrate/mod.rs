//! Initial-value solver for `y'' + b y' + c y = f` and zero location along
//! the numeric solution.
//!
//! The equation is integrated as the first-order system `y' = v`,
//! `v' = f - b v - c y` with the Dormand–Prince 5(4) embedded pair and
//! standard step-size control. Every accepted node stores `(y, y', y'')` so
//! the trajectory can be interpolated between nodes without extra
//! right-hand-side evaluations.

mod trajectory;
mod zeros;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::DomainError;
use crate::ode::OdeSpec;

pub use trajectory::{fmt17, uniform_grid, Node, SolveStats, State, Trajectory};
pub use zeros::{count_zeros, Zero, ZeroList};

/// Start of an initial-value problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub x0: f64,
    pub y0: f64,
    pub dy0: f64,
}

impl InitialCondition {
    pub fn new(x0: f64, y0: f64, dy0: f64) -> Self {
        Self { x0, y0, dy0 }
    }

    /// The zero initial state only produces the zero solution.
    pub fn is_trivial(&self) -> bool {
        self.y0 == 0.0 && self.dy0 == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Integration stops (without error) once `|y|` exceeds this.
    pub blowup: f64,
    /// Upper bound on a single step. Steps are also capped at 1/32 of the
    /// integration span so the dense output always has some resolution.
    pub max_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 2_000_000,
            blowup: 1e12,
            max_step: f64::INFINITY,
        }
    }
}

impl SolveOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("tolerances must lie in [1e-12, 1e-3] (got rel {rel_tol}, abs {abs_tol})")]
    Tolerance { rel_tol: f64, abs_tol: f64 },
    #[error("initial condition is not finite")]
    NonFiniteInitial,
    #[error("integration path crosses the singular point x = {at}")]
    SingularPoint { at: f64 },
    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64 },
    #[error("coefficients undefined at x = {x}: {source}")]
    Domain {
        x: f64,
        #[source]
        source: DomainError,
    },
    #[error("step limit reached at x = {x}")]
    TooManySteps { x: f64 },
    #[error("initial point {x0} lies outside [{lo}, {hi}]")]
    OutsideSpan { x0: f64, lo: f64, hi: f64 },
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights minus fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type Vec2 = [f64; 2];

struct System<'a> {
    spec: &'a OdeSpec,
    evals: usize,
}

impl System<'_> {
    fn rhs(&mut self, x: f64, s: Vec2) -> Result<Vec2, (f64, DomainError)> {
        self.evals += 1;
        let k = self.spec.coefficients(x).map_err(|e| (x, e))?;
        let acc = k.f - k.b * s[1] - k.c * s[0];
        if !acc.is_finite() {
            return Err((x, DomainError::NonFinite));
        }
        Ok([s[1], acc])
    }
}

/// Node with `y'''` from the differentiated equation, or NaN where the
/// coefficient derivatives are undefined.
fn node(spec: &OdeSpec, x: f64, y: Vec2, ddy: f64) -> Node {
    let dddy = match (spec.coefficients(x), spec.coefficient_derivatives(x)) {
        (Ok(k), Ok(d)) => d.f - d.b * y[1] - k.b * ddy - d.c * y[0] - k.c * y[1],
        _ => f64::NAN,
    };
    Node {
        x,
        y: y[0],
        dy: y[1],
        ddy,
        dddy,
    }
}

fn error_norm(err: Vec2, y: Vec2, y_new: Vec2, opts: &SolveOptions) -> f64 {
    let mut sum = 0.0;
    for i in 0..2 {
        let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
        sum += (err[i] / sc).powi(2);
    }
    (sum / 2.0).sqrt()
}

fn initial_step(
    sys: &mut System<'_>,
    x0: f64,
    y0: Vec2,
    f0: Vec2,
    dir: f64,
    span: f64,
    opts: &SolveOptions,
) -> f64 {
    let norm = |v: Vec2| {
        let mut s = 0.0;
        for i in 0..2 {
            let sc = opts.abs_tol + opts.rel_tol * y0[i].abs();
            s += (v[i] / sc).powi(2);
        }
        (s / 2.0).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let y1 = [y0[0] + dir * h0 * f0[0], y0[1] + dir * h0 * f0[1]];
    let h1 = match sys.rhs(x0 + dir * h0, y1) {
        Ok(f1) => {
            let d2 = norm([f1[0] - f0[0], f1[1] - f0[1]]) / h0;
            if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(1.0 / 5.0)
            }
        }
        Err(_) => h0 * 1e-3,
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates from `ic.x0` to `to_x` (either direction).
///
/// Stops early, without error, when `|y|` exceeds `opts.blowup`; the
/// trajectory then records where it was truncated.
pub fn solve_ivp(
    spec: &OdeSpec,
    ic: InitialCondition,
    to_x: f64,
    opts: &SolveOptions,
) -> Result<Trajectory, SolveError> {
    let tol_ok = |t: f64| (1e-12..=1e-3).contains(&t);
    if !tol_ok(opts.rel_tol) || !tol_ok(opts.abs_tol) {
        return Err(SolveError::Tolerance {
            rel_tol: opts.rel_tol,
            abs_tol: opts.abs_tol,
        });
    }
    if ![ic.x0, ic.y0, ic.dy0, to_x].iter().all(|v| v.is_finite()) {
        return Err(SolveError::NonFiniteInitial);
    }
    if let Some(at) = spec.singular_point_between(ic.x0, to_x) {
        return Err(SolveError::SingularPoint { at });
    }

    let mut sys = System { spec, evals: 0 };
    let mut x = ic.x0;
    let mut y: Vec2 = [ic.y0, ic.dy0];
    let mut k1 = sys
        .rhs(x, y)
        .map_err(|(x, source)| SolveError::Domain { x, source })?;
    let mut nodes = vec![node(spec, x, y, k1[1])];
    let mut stats = SolveStats {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
        accepted_steps: 0,
        rejected_steps: 0,
        rhs_evals: 0,
    };
    if to_x == x {
        stats.rhs_evals = sys.evals;
        return Ok(Trajectory::new(nodes, stats, None));
    }

    let dir = (to_x - x).signum();
    let span = (to_x - x).abs();
    let max_step = opts.max_step.min(span / 32.0);
    let mut h = initial_step(&mut sys, x, y, k1, dir, span, opts).min(max_step);
    let mut truncated_at = None;
    let mut last_domain: Option<(f64, DomainError)> = None;

    while (to_x - x) * dir > 0.0 {
        if stats.accepted_steps + stats.rejected_steps >= opts.max_steps {
            return Err(SolveError::TooManySteps { x });
        }
        let remaining = (to_x - x).abs();
        if h >= remaining || remaining - h <= 1e-13 * to_x.abs().max(1.0) {
            h = remaining;
        }
        let min_h = 1e-14 * x.abs().max(1.0);
        if h < min_h {
            return Err(match last_domain {
                Some((x, source)) => SolveError::Domain { x, source },
                None => SolveError::StepUnderflow { x },
            });
        }

        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        let mut stage_failed = None;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    ys[0] += dir * h * a * kj[0];
                    ys[1] += dir * h * a * kj[1];
                }
            }
            let xs = if s == 6 && h == remaining {
                to_x
            } else {
                x + dir * h * C[s]
            };
            match sys.rhs(xs, ys) {
                Ok(v) => k[s] = v,
                Err(e) => {
                    stage_failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = stage_failed {
            last_domain = Some(e);
            stats.rejected_steps += 1;
            h *= 0.25;
            continue;
        }

        let mut y_new = y;
        let mut err = [0.0; 2];
        for i in 0..2 {
            for s in 0..6 {
                y_new[i] += dir * h * A[6][s] * k[s][i];
            }
            for (s, ks) in k.iter().enumerate() {
                err[i] += dir * h * E[s] * ks[i];
            }
        }
        let en = error_norm(err, y, y_new, opts);
        if !en.is_finite() {
            stats.rejected_steps += 1;
            h *= 0.2;
            continue;
        }
        if en <= 1.0 {
            let x_new = if h == remaining { to_x } else { x + dir * h };
            x = x_new;
            y = y_new;
            k1 = k[6];
            last_domain = None;
            stats.accepted_steps += 1;
            nodes.push(node(spec, x, y, k1[1]));
            if y[0].abs() > opts.blowup {
                truncated_at = Some(x);
                break;
            }
            let factor = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * factor).min(max_step);
        } else {
            stats.rejected_steps += 1;
            h *= (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
        }
    }

    stats.rhs_evals = sys.evals;
    Ok(Trajectory::new(nodes, stats, truncated_at))
}

/// Solves outward from `ic.x0` to both `lo` and `hi` and joins the halves
/// into one ascending trajectory.
pub fn solve_span(
    spec: &OdeSpec,
    ic: InitialCondition,
    lo: f64,
    hi: f64,
    opts: &SolveOptions,
) -> Result<Trajectory, SolveError> {
    if !(lo <= ic.x0 && ic.x0 <= hi) {
        return Err(SolveError::OutsideSpan { x0: ic.x0, lo, hi });
    }
    let right = solve_ivp(spec, ic, hi, opts)?;
    if ic.x0 == lo {
        return Ok(right);
    }
    let left = solve_ivp(spec, ic, lo, opts)?;
    if ic.x0 == hi {
        return Ok(left);
    }
    Ok(Trajectory::join(left, right))
}

/// Largest `|y'' + b y' + c y - f|` over `samples` evenly spaced points of
/// the trajectory, with `y''` taken from the interpolant's second
/// derivative. Points where the coefficients are undefined are skipped.
pub fn residual(spec: &OdeSpec, t: &Trajectory, samples: usize) -> f64 {
    let mut worst = 0.0f64;
    for x in uniform_grid(t.lo(), t.hi(), samples.max(10)) {
        let (Some(s), Ok(k)) = (t.state(x), spec.coefficients(x)) else {
            continue;
        };
        worst = worst.max((s.ddy + k.b * s.dy + k.c * s.y - k.f).abs());
    }
    worst
}
