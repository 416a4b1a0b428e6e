//! Adaptive Simpson quadrature.

use crate::expr::DomainError;

const MAX_DEPTH: u32 = 50;

/// Where and why the quadrature gave up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureFailure {
    pub at: f64,
    pub domain: Option<DomainError>,
}

/// Integrates `f` over `[a, b]` (either orientation) to absolute tolerance
/// `tol`. Fails when `f` leaves its domain or the recursion cannot meet the
/// tolerance, which is how a non-integrable singularity shows up.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureFailure>
where
    F: Fn(f64) -> Result<f64, DomainError>,
{
    if a == b {
        return Ok(0.0);
    }
    let eval = |x: f64| {
        f(x).map_err(|e| QuadratureFailure {
            at: x,
            domain: Some(e),
        })
    };
    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&eval, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadratureFailure>
where
    F: Fn(f64) -> Result<f64, QuadratureFailure>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 || m == a || m == b {
        return Err(QuadratureFailure {
            at: m,
            domain: None,
        });
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}
