use serde::Serialize;

use super::Trajectory;

/// Interior samples per integration step when scanning for sign changes.
const SUBDIVISIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zero {
    pub x: f64,
    /// `|y|` of the interpolant at `x`.
    pub residual: f64,
    /// `y'` is bounded away from zero at `x`.
    pub simple: bool,
}

/// Sign changes of a trajectory on an interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroList {
    pub lo: f64,
    pub hi: f64,
    pub zeros: Vec<Zero>,
    /// Local minima of `|y|` below the absolute tolerance without a sign
    /// change. Not counted as zeros.
    pub suspects: Vec<f64>,
}

impl ZeroList {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.zeros.iter().map(|z| z.x).collect()
    }

    /// Number of zeros in the closed interval `[lo, hi]`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        self.zeros.iter().filter(|z| z.x >= lo && z.x <= hi).count()
    }
}

fn refine(t: &Trajectory, mut a: f64, mut b: f64, ya: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= 1e-10 * (1.0 + m.abs()) {
            return m;
        }
        let ym = t.y(m).expect("bracket inside trajectory");
        if ym == 0.0 {
            return m;
        }
        if (ym > 0.0) == (ya > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Locates the sign changes of the interpolated solution on `[lo, hi]`
/// (clipped to the trajectory's range). Each is bracketed on a sub-step
/// grid and refined by bisection on the interpolant to
/// `1e-10 * (1 + |x|)`.
pub fn count_zeros(t: &Trajectory, lo: f64, hi: f64) -> ZeroList {
    let lo = lo.max(t.lo());
    let hi = hi.min(t.hi());
    let mut out = ZeroList {
        lo,
        hi,
        zeros: Vec::new(),
        suspects: Vec::new(),
    };
    if !(lo < hi) {
        return out;
    }

    let mut xs = vec![lo];
    let nodes = t.nodes();
    let first = nodes.partition_point(|n| n.x <= lo);
    let mut prev = lo;
    for n in nodes[first..].iter().take_while(|n| n.x < hi) {
        for k in 1..SUBDIVISIONS {
            xs.push(prev + (n.x - prev) * k as f64 / SUBDIVISIONS as f64);
        }
        xs.push(n.x);
        prev = n.x;
    }
    for k in 1..SUBDIVISIONS {
        xs.push(prev + (hi - prev) * k as f64 / SUBDIVISIONS as f64);
    }
    xs.push(hi);
    xs.dedup();
    let ys: Vec<f64> = xs.iter().map(|&x| t.y(x).expect("inside range")).collect();

    let abs_tol = t.stats().abs_tol;
    let mut last_nonzero: Option<usize> = None;
    let mut zero_run: Vec<usize> = Vec::new();
    for i in 0..xs.len() {
        if ys[i] == 0.0 {
            zero_run.push(i);
            continue;
        }
        if let Some(j) = last_nonzero {
            if (ys[i] > 0.0) != (ys[j] > 0.0) {
                let x = if zero_run.is_empty() {
                    refine(t, xs[j], xs[i], ys[j])
                } else {
                    xs[zero_run[zero_run.len() / 2]]
                };
                let s = t.state(x).expect("inside range");
                out.zeros.push(Zero {
                    x,
                    residual: s.y.abs(),
                    simple: s.dy.abs() > abs_tol,
                });
            }
        }
        zero_run.clear();
        last_nonzero = Some(i);
    }

    for i in 1..xs.len().saturating_sub(1) {
        let (a, m, b) = (ys[i - 1], ys[i], ys[i + 1]);
        let same_sign = (a > 0.0) == (m > 0.0) && (m > 0.0) == (b > 0.0);
        if m != 0.0 && m.abs() < abs_tol && m.abs() <= a.abs() && m.abs() <= b.abs() && same_sign {
            out.suspects.push(xs[i]);
        }
    }
    out
}
