use std::fmt::Write as _;

use serde::Serialize;

/// One accepted integration node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Node {
    pub x: f64,
    pub y: f64,
    pub dy: f64,
    /// `y''` from the equation at the node.
    pub ddy: f64,
    /// `y'''` from the differentiated equation; NaN where unavailable.
    pub dddy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
}

/// Dense numeric solution.
///
/// Nodes are stored in ascending `x` regardless of integration direction.
/// Between nodes, `y` is the Hermite interpolant through `(y, y', y'', y''')`
/// at both ends (degree 7), or through `(y, y', y'')` (degree 5) where `y'''`
/// is unavailable. Its derivatives match the node data exactly.
#[derive(Debug, Clone)]
pub struct Trajectory {
    nodes: Vec<Node>,
    stats: SolveStats,
    truncated_at: Option<f64>,
}

/// Interpolated state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub y: f64,
    pub dy: f64,
    pub ddy: f64,
}

impl Trajectory {
    pub(crate) fn new(mut nodes: Vec<Node>, stats: SolveStats, truncated_at: Option<f64>) -> Self {
        if nodes.len() > 1 && nodes[0].x > nodes[nodes.len() - 1].x {
            nodes.reverse();
        }
        debug_assert!(nodes.windows(2).all(|w| w[0].x < w[1].x));
        Self {
            nodes,
            stats,
            truncated_at,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    /// Where integration stopped early because the solution exceeded the
    /// blow-up threshold.
    pub fn truncated_at(&self) -> Option<f64> {
        self.truncated_at
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0].x
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].x
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    /// Index of the segment `[nodes[i], nodes[i+1]]` holding `x`.
    fn segment(&self, x: f64) -> Option<usize> {
        if !self.contains(x) || self.nodes.len() < 2 {
            return None;
        }
        let i = self.nodes.partition_point(|n| n.x <= x);
        Some(i.saturating_sub(1).min(self.nodes.len() - 2))
    }

    pub fn state(&self, x: f64) -> Option<State> {
        if self.nodes.len() == 1 && x == self.nodes[0].x {
            let n = self.nodes[0];
            return Some(State {
                y: n.y,
                dy: n.dy,
                ddy: n.ddy,
            });
        }
        let i = self.segment(x)?;
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        for n in [a, b] {
            if n.x == x {
                return Some(State {
                    y: n.y,
                    dy: n.dy,
                    ddy: n.ddy,
                });
            }
        }
        Some(hermite(a, b, x))
    }

    pub fn y(&self, x: f64) -> Option<f64> {
        self.state(x).map(|s| s.y)
    }

    pub fn dy(&self, x: f64) -> Option<f64> {
        self.state(x).map(|s| s.dy)
    }

    /// Largest `|y|` over the nodes in `[lo, hi]`.
    pub fn max_abs_y(&self, lo: f64, hi: f64) -> f64 {
        let mut m = 0.0f64;
        for n in self.nodes.iter().filter(|n| n.x >= lo && n.x <= hi) {
            m = m.max(n.y.abs());
        }
        for x in [lo, hi] {
            if let Some(y) = self.y(x) {
                m = m.max(y.abs());
            }
        }
        m
    }

    /// Returns a trajectory whose data is `y - g` where `[g, g', g'', g''']`
    /// is supplied per node.
    pub fn shifted<G>(&self, g: G) -> Trajectory
    where
        G: Fn(f64) -> [f64; 4],
    {
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let [v, dv, ddv, dddv] = g(n.x);
                Node {
                    x: n.x,
                    y: n.y - v,
                    dy: n.dy - dv,
                    ddy: n.ddy - ddv,
                    dddy: n.dddy - dddv,
                }
            })
            .collect();
        Trajectory {
            nodes,
            stats: self.stats,
            truncated_at: self.truncated_at,
        }
    }

    /// Joins a trajectory ending at this one's start (or starting at its
    /// end). The shared node is kept once.
    pub(crate) fn join(left: Trajectory, right: Trajectory) -> Trajectory {
        let mut nodes = left.nodes;
        let skip = usize::from(nodes.last().map(|n| n.x) == right.nodes.first().map(|n| n.x));
        nodes.extend(right.nodes.into_iter().skip(skip));
        let stats = SolveStats {
            accepted_steps: left.stats.accepted_steps + right.stats.accepted_steps,
            rejected_steps: left.stats.rejected_steps + right.stats.rejected_steps,
            rhs_evals: left.stats.rhs_evals + right.stats.rhs_evals,
            ..left.stats
        };
        Trajectory {
            nodes,
            stats,
            truncated_at: left.truncated_at.or(right.truncated_at),
        }
    }

    /// CSV with columns `x,y,dy` at the nodes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,dy\n");
        for n in &self.nodes {
            let _ = writeln!(out, "{},{},{}", fmt17(n.x), fmt17(n.y), fmt17(n.dy));
        }
        out
    }

    /// CSV with columns `x,y,dy` on a uniform grid of `points` samples.
    pub fn resampled_csv(&self, points: usize) -> String {
        let mut out = String::from("x,y,dy\n");
        for x in uniform_grid(self.lo(), self.hi(), points) {
            let s = self.state(x).expect("grid lies inside trajectory");
            let _ = writeln!(out, "{},{},{}", fmt17(x), fmt17(s.y), fmt17(s.dy));
        }
        out
    }
}

/// Float formatting with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".to_string()
    }
}

/// `n >= 2` evenly spaced points including both ends; the last point is
/// exactly `hi`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i == n - 1 { hi } else { lo + step * i as f64 })
}

/// Hermite interpolation on one segment.
pub(crate) fn hermite(a: &Node, b: &Node, x: f64) -> State {
    let h = b.x - a.x;
    let t = (x - a.x) / h;
    let (p0, m0, a0) = (a.y, a.dy * h, a.ddy * h * h);
    let (p1, m1, a1) = (b.y, b.dy * h, b.ddy * h * h);
    let mut c = [p0, m0, 0.5 * a0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut size = p0.abs() + p1.abs() + m0.abs() + m1.abs() + a0.abs() + a1.abs();
    if a.dddy.is_finite() && b.dddy.is_finite() {
        let (j0, j1) = (a.dddy * h * h * h, b.dddy * h * h * h);
        size += j0.abs() + j1.abs();
        c[3] = j0 / 6.0;
        c[4] = -5.0 * a0 + 2.5 * a1 - 2.0 * j0 / 3.0 - j1 / 6.0 - 20.0 * m0 - 15.0 * m1 - 35.0 * p0
            + 35.0 * p1;
        c[5] = 10.0 * a0 - 7.0 * a1 + j0 + 0.5 * j1 + 45.0 * m0 + 39.0 * m1 + 84.0 * p0 - 84.0 * p1;
        c[6] = -7.5 * a0 + 6.5 * a1 - 2.0 * j0 / 3.0 - 0.5 * j1 - 36.0 * m0 - 34.0 * m1 - 70.0 * p0
            + 70.0 * p1;
        c[7] = 2.0 * a0 - 2.0 * a1 + j0 / 6.0 + j1 / 6.0 + 10.0 * m0 + 10.0 * m1 + 20.0 * p0
            - 20.0 * p1;
    } else {
        c[3] = -10.0 * p0 - 6.0 * m0 - 1.5 * a0 + 0.5 * a1 - 4.0 * m1 + 10.0 * p1;
        c[4] = 15.0 * p0 + 8.0 * m0 + 1.5 * a0 - a1 + 7.0 * m1 - 15.0 * p1;
        c[5] = -6.0 * p0 - 3.0 * m0 - 0.5 * a0 + 0.5 * a1 - 3.0 * m1 + 6.0 * p1;
    }
    let (mut y, mut dy, mut ddy) = (0.0, 0.0, 0.0);
    for k in (0..8).rev() {
        let kf = k as f64;
        y = y * t + c[k];
        if k >= 1 {
            dy = dy * t + kf * c[k];
        }
        if k >= 2 {
            ddy = ddy * t + kf * (kf - 1.0) * c[k];
        }
    }
    let ddy = ddy / (h * h);
    // On very short steps the interpolant's curvature is dominated by
    // rounding in the node values; fall back to linear interpolation of y''.
    let ddy_linear = (1.0 - t) * a.ddy + t * b.ddy;
    let rounding = 256.0 * f64::EPSILON * size / (h * h);
    State {
        y,
        dy: dy / h,
        ddy: if (ddy - ddy_linear).abs() <= rounding {
            ddy_linear
        } else {
            ddy
        },
    }
}
