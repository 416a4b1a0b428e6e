//! Numerical checks of the comparison, Wronskian, Riccati and normal-form
//! identities against integrated solutions.
//!
//! Every report serializes to JSON with a top-level `pass` field.
//!
//! Substituting `y''` from the equation would make the Wronskian and
//! Riccati identities hold by construction, so they are checked with
//! quantities taken from the interpolant instead.

use serde::Serialize;
use thiserror::Error;

use crate::classify::Window;
use crate::expr::{DomainError, EvalError, Expr, ParamBindings};
use crate::integrate::{
    count_zeros, solve_span, uniform_grid, InitialCondition, SolveError, SolveOptions, Trajectory,
    ZeroList,
};
use crate::ode::{normal_form, OdeError, OdeSpec, SpecError};

/// Points at which the comparison hypothesis `q1 > q2` is checked.
pub const HYPOTHESIS_PROBES: usize = 1024;
pub const WRONSKIAN_SAMPLES: usize = 200;
pub const WRONSKIAN_TOL: f64 = 1e-6;
pub const RICCATI_SAMPLES: usize = 400;
pub const RICCATI_TOL: f64 = 1e-5;
pub const RICCATI_CUTOFF_FRACTION: f64 = 1e-3;
pub const NORMAL_FORM_SAMPLES: usize = 400;
pub const NORMAL_FORM_TOL: f64 = 1e-6;
/// Largest distance between matched zeros of `y` and `w u`.
pub const ZERO_MATCH_TOL: f64 = 1e-6;
pub const PARTICULAR_PROBES: usize = 256;
pub const PARTICULAR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("comparison hypothesis q1 > q2 fails at x = {at} (q1 = {q1}, q2 = {q2})")]
    Hypothesis { at: f64, q1: f64, q2: f64 },
    #[error("initial condition is trivial")]
    TrivialInitial,
    #[error("equation must be homogeneous")]
    NotHomogeneous,
    #[error("cutoff must be positive (got {0})")]
    BadCutoff(f64),
    #[error("every sample lies within the cutoff of a zero")]
    AllExcluded,
    #[error("not a particular solution: residual {residual} at x = {at}")]
    NotParticular { at: f64, residual: f64 },
    #[error("expression undefined at x = {x}: {source}")]
    Domain { x: f64, source: DomainError },
    #[error("parameter `{0}` is not bound")]
    Unbound(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

fn eval_at(e: &Expr, x: f64, params: &ParamBindings) -> Result<f64, VerifyError> {
    e.eval(x, params).map_err(|err| match err {
        EvalError::Domain(source) => VerifyError::Domain { x, source },
        EvalError::Unbound(name) => VerifyError::Unbound(name),
    })
}

/// Solver options for verification runs: large solutions are compared
/// relative to their scale rather than cut off.
fn unclamped(opts: &SolveOptions) -> SolveOptions {
    SolveOptions {
        blowup: opts.blowup.max(1e100),
        ..*opts
    }
}

fn solve_normal(
    q: &Expr,
    params: &ParamBindings,
    w: &Window,
    ic: InitialCondition,
    opts: &SolveOptions,
) -> Result<Trajectory, VerifyError> {
    if ic.is_trivial() {
        return Err(VerifyError::TrivialInitial);
    }
    let spec = OdeSpec::normal(q.clone(), params.clone())?;
    Ok(solve_span(&spec, ic, w.lo, w.hi, &unclamped(opts))?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
    /// Zeros of the first solution strictly inside the gap.
    pub inner: Vec<f64>,
    /// Zeros of the first solution that coincide with a gap endpoint.
    pub shared_endpoints: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterlacingReport {
    pub q1: String,
    pub q2: String,
    pub window: Window,
    pub zeros_1: Vec<f64>,
    pub zeros_2: Vec<f64>,
    pub gaps: Vec<Gap>,
    /// Fraction of gaps that hold an interior zero; 1 when there are no gaps.
    pub pass_rate: f64,
    pub pass: bool,
}

/// Solves `u'' + q1 u = 0` and `u'' + q2 u = 0` on the window and checks that
/// the first solution vanishes strictly inside every gap between
/// consecutive zeros of the second.
///
/// Refuses to run unless `q1 > q2` at every hypothesis probe.
pub fn check_sturm(
    q1: &Expr,
    q2: &Expr,
    params: &ParamBindings,
    w: &Window,
    ic1: InitialCondition,
    ic2: InitialCondition,
    opts: &SolveOptions,
) -> Result<InterlacingReport, VerifyError> {
    for x in uniform_grid(w.lo, w.hi, HYPOTHESIS_PROBES) {
        let (a, b) = (eval_at(q1, x, params)?, eval_at(q2, x, params)?);
        if !(a > b) {
            return Err(VerifyError::Hypothesis {
                at: x,
                q1: a,
                q2: b,
            });
        }
    }
    let t1 = solve_normal(q1, params, w, ic1, opts)?;
    let t2 = solve_normal(q2, params, w, ic2, opts)?;
    let zeros_1 = count_zeros(&t1, w.lo, w.hi).xs();
    let zeros_2 = count_zeros(&t2, w.lo, w.hi).xs();

    let same = |a: f64, b: f64| (a - b).abs() <= 1e-8 * (1.0 + a.abs());
    let gaps: Vec<Gap> = zeros_2
        .windows(2)
        .map(|pair| {
            let (lo, hi) = (pair[0], pair[1]);
            let inner: Vec<f64> = zeros_1
                .iter()
                .copied()
                .filter(|&z| z > lo && z < hi && !same(z, lo) && !same(z, hi))
                .collect();
            let shared_endpoints = zeros_1
                .iter()
                .copied()
                .filter(|&z| same(z, lo) || same(z, hi))
                .collect();
            Gap {
                lo,
                hi,
                pass: !inner.is_empty(),
                inner,
                shared_endpoints,
            }
        })
        .collect();
    let passed = gaps.iter().filter(|g| g.pass).count();
    let pass_rate = if gaps.is_empty() {
        1.0
    } else {
        passed as f64 / gaps.len() as f64
    };
    Ok(InterlacingReport {
        q1: q1.to_string(),
        q2: q2.to_string(),
        window: *w,
        zeros_1,
        zeros_2,
        pass: passed == gaps.len(),
        gaps,
        pass_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WronskianSample {
    pub x: f64,
    /// `y1 y2' - y2 y1'`.
    pub w: f64,
    /// `|W' - (q1 - q2) y1 y2|` in mean-value form over the sample interval
    /// ending at `x` (starting at `x` for the first sample).
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WronskianCheck {
    pub samples: Vec<WronskianSample>,
    pub max_residual: f64,
    /// `max W - min W` over the samples.
    pub variation: f64,
    /// Consecutive samples on which `q1 > q2` and `y1 y2 > 0` throughout but
    /// `W` failed to increase.
    pub monotone_violations: usize,
    pub pass: bool,
}

// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];
const GL_PANELS: usize = 4;

fn gauss_legendre<F>(f: F, a: f64, b: f64) -> Result<f64, VerifyError>
where
    F: Fn(f64) -> Result<f64, VerifyError>,
{
    let h = (b - a) / GL_PANELS as f64;
    let mut sum = 0.0;
    for p in 0..GL_PANELS {
        let mid = a + h * (p as f64 + 0.5);
        for (x, w) in GL_X.iter().zip(GL_W) {
            sum += w * f(mid + 0.5 * h * x)?;
        }
    }
    Ok(0.5 * h * sum)
}

/// Checks `W' = (q1 - q2) y1 y2` for solutions of `u'' + q1 u = 0` and
/// `u'' + q2 u = 0` at 200 uniform samples.
///
/// The identity is tested in integrated form, `W(b) - W(a)` against the
/// quadrature of `(q1 - q2) y1 y2` over each sample interval, divided by
/// the interval length. This needs only `y` and `y'`; a pointwise check would
/// need `y''`, which either comes from the equation (making the identity
/// hold by construction) or from differentiating the interpolant twice
/// (amplifying per-step rounding by `1/h^2`).
pub fn check_wronskian(
    q1: &Expr,
    q2: &Expr,
    params: &ParamBindings,
    w: &Window,
    ic1: InitialCondition,
    ic2: InitialCondition,
    opts: &SolveOptions,
) -> Result<WronskianCheck, VerifyError> {
    let t1 = solve_normal(q1, params, w, ic1, opts)?;
    let t2 = solve_normal(q2, params, w, ic2, opts)?;
    let dq = |x: f64| -> Result<f64, VerifyError> {
        Ok(eval_at(q1, x, params)? - eval_at(q2, x, params)?)
    };
    let product = |x: f64| t1.y(x).unwrap_or(f64::NAN) * t2.y(x).unwrap_or(f64::NAN);
    let source = |x: f64| Ok(dq(x)? * product(x));

    let xs: Vec<f64> = uniform_grid(w.lo, w.hi, WRONSKIAN_SAMPLES).collect();
    let mut ws = Vec::with_capacity(xs.len());
    let mut scale = 1.0f64;
    for &x in &xs {
        let s1 = t1.state(x).expect("sample inside window");
        let s2 = t2.state(x).expect("sample inside window");
        let wr = s1.y * s2.dy - s2.y * s1.dy;
        scale = scale.max(wr.abs()).max(source(x)?.abs());
        ws.push(wr);
    }

    let noise = 1e-9 * scale;
    let mut interval_residuals = Vec::with_capacity(xs.len() - 1);
    let mut monotone_violations = 0;
    for i in 1..xs.len() {
        let (a, b) = (xs[i - 1], xs[i]);
        let integral = gauss_legendre(source, a, b)?;
        interval_residuals.push(((ws[i] - ws[i - 1]) - integral).abs() / (b - a));
        let mid = 0.5 * (a + b);
        let increasing = [a, mid, b]
            .into_iter()
            .map(|x| Ok(dq(x)? > 0.0 && product(x) > 0.0))
            .collect::<Result<Vec<bool>, VerifyError>>()?
            .into_iter()
            .all(|ok| ok);
        if increasing && ws[i] - ws[i - 1] < -noise {
            monotone_violations += 1;
        }
    }

    let samples: Vec<WronskianSample> = xs
        .iter()
        .zip(&ws)
        .enumerate()
        .map(|(i, (&x, &wr))| WronskianSample {
            x,
            w: wr,
            residual: interval_residuals[i.saturating_sub(1)],
        })
        .collect();
    let finite = samples
        .iter()
        .all(|s| s.residual.is_finite() && s.w.is_finite());
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.w), hi.max(s.w))
        });
    Ok(WronskianCheck {
        pass: finite && monotone_violations == 0 && max_residual <= WRONSKIAN_TOL * scale,
        variation: hi - lo,
        samples,
        max_residual,
        monotone_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiSample {
    pub x: f64,
    /// `y' / y`.
    pub m: f64,
    /// `|-m' - (m^2 + b m + c)|`.
    pub residual: f64,
}

/// Comparison of a constant `m` with the roots of `r^2 + b r + c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicMatch {
    pub roots: Vec<f64>,
    pub m_mean: f64,
    pub m_spread: f64,
    pub nearest_root: f64,
    pub root_distance: f64,
    /// `|m^2 + b m + c|` at the observed `m`.
    pub char_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiccatiCheck {
    pub cutoff: f64,
    pub samples: Vec<RiccatiSample>,
    pub excluded: usize,
    pub max_residual: f64,
    /// Present for constant coefficients when `m` is constant.
    pub characteristic: Option<CharacteristicMatch>,
    pub pass: bool,
}

/// Checks that `m = y'/y` satisfies `-m' = m^2 + b m + c` away from the zeros
/// of `y`. Samples with `|y| < cutoff` are skipped; the default cutoff is
/// `1e-3 * max |y|`.
pub fn check_riccati(
    spec: &OdeSpec,
    t: &Trajectory,
    cutoff: Option<f64>,
) -> Result<RiccatiCheck, VerifyError> {
    if !spec.is_homogeneous() {
        return Err(VerifyError::NotHomogeneous);
    }
    let cutoff = cutoff.unwrap_or_else(|| RICCATI_CUTOFF_FRACTION * t.max_abs_y(t.lo(), t.hi()));
    if !(cutoff > 0.0) {
        return Err(VerifyError::BadCutoff(cutoff));
    }
    let mut samples = Vec::new();
    let mut excluded = 0;
    for x in uniform_grid(t.lo(), t.hi(), RICCATI_SAMPLES) {
        let s = t.state(x).expect("grid inside trajectory");
        if s.y.abs() < cutoff {
            excluded += 1;
            continue;
        }
        let k = spec
            .coefficients(x)
            .map_err(|source| VerifyError::Domain { x, source })?;
        let m = s.dy / s.y;
        let dm = s.ddy / s.y - m * m;
        samples.push(RiccatiSample {
            x,
            m,
            residual: (-dm - (m * m + k.b * m + k.c)).abs(),
        });
    }
    if samples.is_empty() {
        return Err(VerifyError::AllExcluded);
    }
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);

    let characteristic = if spec.is_constant_coefficient() {
        let k = spec
            .coefficients(t.lo())
            .map_err(|source| VerifyError::Domain { x: t.lo(), source })?;
        characteristic_match(&samples, k.b, k.c)
    } else {
        None
    };
    let char_ok = characteristic
        .as_ref()
        .is_none_or(|c| c.root_distance <= 1e-6);
    Ok(RiccatiCheck {
        cutoff,
        pass: max_residual.is_finite() && max_residual <= RICCATI_TOL && char_ok,
        samples,
        excluded,
        max_residual,
        characteristic,
    })
}

fn characteristic_match(samples: &[RiccatiSample], b: f64, c: f64) -> Option<CharacteristicMatch> {
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        return None;
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.m), hi.max(s.m))
        });
    let m_mean = samples.iter().map(|s| s.m).sum::<f64>() / samples.len() as f64;
    let m_spread = hi - lo;
    if m_spread > 1e-6 * (1.0 + m_mean.abs()) {
        return None;
    }
    let sq = disc.sqrt();
    let roots = vec![(-b - sq) / 2.0, (-b + sq) / 2.0];
    let nearest_root = *roots
        .iter()
        .min_by(|a, b| (*a - m_mean).abs().total_cmp(&(*b - m_mean).abs()))
        .expect("two roots");
    Some(CharacteristicMatch {
        root_distance: (nearest_root - m_mean).abs(),
        char_residual: (m_mean * m_mean + b * m_mean + c).abs(),
        roots,
        m_mean,
        m_spread,
        nearest_root,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalFormCheck {
    pub q: String,
    /// Initial condition used for `u`, derived from the one for `y`.
    pub u_initial: InitialCondition,
    /// `max |y - w u| / max |y|` over the samples.
    pub max_rel_diff: f64,
    pub zeros_y: Vec<f64>,
    pub zeros_u: Vec<f64>,
    /// Largest distance between paired zeros; infinite if the counts differ.
    pub max_zero_gap: f64,
    pub zeros_match: bool,
    pub pass: bool,
}

/// Solves the equation for `y` and its normal form `u'' + q u = 0` for `u`,
/// then checks `y = w u` and that both have the same zeros.
///
/// The weight is anchored at `ic.x0`, so `w(x0) = 1`, `u(x0) = y(x0)` and
/// `u'(x0) = y'(x0) + b(x0) y(x0) / 2`.
pub fn check_normal_form(
    spec: &OdeSpec,
    ic: InitialCondition,
    w: &Window,
    opts: &SolveOptions,
) -> Result<NormalFormCheck, VerifyError> {
    if !spec.is_homogeneous() {
        return Err(VerifyError::NotHomogeneous);
    }
    if ic.is_trivial() {
        return Err(VerifyError::TrivialInitial);
    }
    if let Some(at) = spec.singular_point_between(w.lo, w.hi) {
        return Err(OdeError::SingularPath {
            from: w.lo,
            to: w.hi,
            at,
        }
        .into());
    }
    let nf = normal_form(spec, ic.x0)?;
    let b0 = spec
        .coefficients(ic.x0)
        .map_err(|source| VerifyError::Domain { x: ic.x0, source })?
        .b;
    let u_initial = InitialCondition::new(ic.x0, ic.y0, ic.dy0 + 0.5 * b0 * ic.y0);
    let u_spec = OdeSpec::normal(nf.q.clone(), spec.params().clone())?
        .with_singular_points(spec.singular_points().to_vec());
    let opts = unclamped(opts);
    let ty = solve_span(spec, ic, w.lo, w.hi, &opts)?;
    let tu = solve_span(&u_spec, u_initial, w.lo, w.hi, &opts)?;

    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for x in uniform_grid(w.lo, w.hi, NORMAL_FORM_SAMPLES) {
        let y = ty.y(x).expect("sample inside window");
        let u = tu.y(x).expect("sample inside window");
        diff = diff.max((y - nf.weight(x)? * u).abs());
        scale = scale.max(y.abs());
    }
    let max_rel_diff = if scale > 0.0 { diff / scale } else { diff };

    let zeros_y = count_zeros(&ty, w.lo, w.hi).xs();
    let zeros_u = count_zeros(&tu, w.lo, w.hi).xs();
    let max_zero_gap = if zeros_y.len() == zeros_u.len() {
        zeros_y
            .iter()
            .zip(&zeros_u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let zeros_match = max_zero_gap <= ZERO_MATCH_TOL;
    Ok(NormalFormCheck {
        q: nf.q.to_string(),
        u_initial,
        pass: zeros_match && max_rel_diff <= NORMAL_FORM_TOL,
        max_rel_diff,
        zeros_y,
        zeros_u,
        max_zero_gap,
        zeros_match,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationAbout {
    pub psi_p: String,
    /// Largest relative residual of `psi_p` in the equation at the probes.
    pub gate_residual: f64,
    /// Zeros of `y - psi_p`.
    pub zeros: ZeroList,
    /// `y - psi_p` changes sign somewhere in the window.
    pub pass: bool,
}

/// Integrates the full equation from `ic` (which may lie outside the window)
/// and locates the zeros of `y - psi_p` in the window, after checking that `psi_p` is a particular solution.
pub fn oscillates_about(
    spec: &OdeSpec,
    psi_p: &Expr,
    ic: InitialCondition,
    w: &Window,
    opts: &SolveOptions,
) -> Result<OscillationAbout, VerifyError> {
    let params = spec.params();
    if let Some(name) = psi_p.params().into_iter().find(|p| params.get(p).is_none()) {
        return Err(VerifyError::Unbound(name));
    }
    let p0 = psi_p.substitute(params).simplify();
    let p1 = p0.differentiate();
    let p2 = p1.differentiate();
    let p3 = p2.differentiate();
    let none = ParamBindings::new();
    let derivs = |x: f64| -> Result<[f64; 4], VerifyError> {
        Ok([
            eval_at(&p0, x, &none)?,
            eval_at(&p1, x, &none)?,
            eval_at(&p2, x, &none)?,
            eval_at(&p3, x, &none).unwrap_or(f64::NAN),
        ])
    };

    let mut gate_residual = 0.0f64;
    for x in uniform_grid(w.lo, w.hi, PARTICULAR_PROBES) {
        let [v, dv, ddv, _] = derivs(x)?;
        let k = spec
            .coefficients(x)
            .map_err(|source| VerifyError::Domain { x, source })?;
        let terms = [ddv, k.b * dv, k.c * v, k.f];
        let scale = terms.iter().fold(1.0f64, |s, t| s.max(t.abs()));
        let r = (ddv + k.b * dv + k.c * v - k.f).abs() / scale;
        if !(r < PARTICULAR_TOL) {
            return Err(VerifyError::NotParticular { at: x, residual: r });
        }
        gate_residual = gate_residual.max(r);
    }

    let t = solve_span(spec, ic, w.lo.min(ic.x0), w.hi.max(ic.x0), opts)?;
    for n in t.nodes() {
        derivs(n.x)?;
    }
    let shifted = t.shifted(|x| derivs(x).unwrap_or([f64::NAN; 4]));
    let zeros = count_zeros(&shifted, w.lo, w.hi);
    Ok(OscillationAbout {
        psi_p: p0.to_string(),
        gate_residual,
        pass: !zeros.is_empty(),
        zeros,
    })
}
