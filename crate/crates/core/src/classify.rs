//! Partition of an analysis window by the sign of the discriminant
//! `D = b^2 - 4c + 2b'`.
//!
//! * Where `D >= 0` every non-trivial solution vanishes at most once.
//! * Where `D <= lambda < 0` on an interval that is unbounded, every
//!   non-trivial solution vanishes infinitely often.
//!
//! A finite window cannot show that an interval is unbounded, so the caller
//! declares which edges continue to infinity and the classifier probes the
//! discriminant along a geometric sequence beyond each such edge. A negative
//! piece is labelled oscillatory only if the probes stay at or below
//! `-margin` without decaying towards zero. Interior negative pieces, and
//! negative pieces whose discriminant creeps up to zero, are reported as
//! indeterminate: both behaviours occur there (`sin(k ln x)` oscillates,
//! `sqrt(x)` does not, and both have `D -> 0-`).

use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, Expr, ParamBindings};
use crate::integrate::uniform_grid;
use crate::ode::{discriminant, OdeSpec, SpecEcho};

pub const DEFAULT_MARGIN: f64 = 1e-6;
pub const DEFAULT_GRID: usize = 4096;
pub const MIN_GRID: usize = 16;

/// How far past an unbounded edge the tail probe reaches, in window
/// half-widths.
pub const PROBE_REACH: f64 = 100.0;
const PROBE_POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("window must satisfy lo < hi (got {lo}, {hi})")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("grid must have at least {MIN_GRID} points (got {0})")]
    GridTooSmall(usize),
    #[error("margin must be positive (got {0})")]
    BadMargin(f64),
    #[error("expression is undefined at every sample of the window")]
    AllInvalid,
    #[error("window straddles a singular point near x = {at}")]
    SingularWindow { at: f64 },
    #[error("parameter `{0}` is not bound")]
    Unbound(String),
}

/// Finite stand-in for an interval that may be infinite on either side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub assume_unbounded_left: bool,
    pub assume_unbounded_right: bool,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ClassifyError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(ClassifyError::EmptyWindow { lo, hi });
        }
        Ok(Self {
            lo,
            hi,
            assume_unbounded_left: false,
            assume_unbounded_right: false,
        })
    }

    pub fn unbounded(mut self, left: bool, right: bool) -> Self {
        self.assume_unbounded_left = left;
        self.assume_unbounded_right = right;
        self
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignRegion {
    pub lo: f64,
    pub hi: f64,
    pub sign: Sign,
}

/// Sign structure of a scalar function over a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignScan {
    pub regions: Vec<SignRegion>,
    /// Refined transitions between negative and non-negative values.
    pub roots: Vec<f64>,
    /// Samples where the function was undefined.
    pub invalid: Vec<f64>,
}

fn bisect_sign<F: Fn(f64) -> Option<f64>>(f: &F, mut a: f64, mut b: f64, a_neg: bool) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= 1e-10 * (1.0 + m.abs()) {
            return m;
        }
        match f(m) {
            Some(v) if (v < 0.0) == a_neg => a = m,
            Some(_) => b = m,
            None => return m,
        }
    }
    0.5 * (a + b)
}

struct Open {
    lo: f64,
    last: f64,
    negative: bool,
    all_zero: bool,
}

impl Open {
    fn close(self, hi: f64) -> SignRegion {
        let sign = if self.negative {
            Sign::Negative
        } else if self.all_zero {
            Sign::Zero
        } else {
            Sign::Positive
        };
        SignRegion {
            lo: self.lo,
            hi,
            sign,
        }
    }
}

/// Sign scan of an arbitrary function; `None` marks points outside its
/// domain.
pub fn scan_fn<F>(f: F, lo: f64, hi: f64, grid_n: usize) -> Result<SignScan, ClassifyError>
where
    F: Fn(f64) -> Option<f64>,
{
    if grid_n < MIN_GRID {
        return Err(ClassifyError::GridTooSmall(grid_n));
    }
    let mut scan = SignScan {
        regions: Vec::new(),
        roots: Vec::new(),
        invalid: Vec::new(),
    };
    let mut open: Option<Open> = None;
    for x in uniform_grid(lo, hi, grid_n) {
        let Some(v) = f(x) else {
            scan.invalid.push(x);
            if let Some(o) = open.take() {
                let last = o.last;
                scan.regions.push(o.close(last));
            }
            continue;
        };
        let negative = v < 0.0;
        open = Some(match open.take() {
            None => Open {
                lo: x,
                last: x,
                negative,
                all_zero: v == 0.0,
            },
            Some(mut o) if o.negative == negative => {
                o.last = x;
                o.all_zero &= v == 0.0;
                o
            }
            Some(o) => {
                let root = bisect_sign(&f, o.last, x, o.negative);
                scan.roots.push(root);
                scan.regions.push(o.close(root));
                Open {
                    lo: root,
                    last: x,
                    negative,
                    all_zero: v == 0.0,
                }
            }
        });
    }
    if let Some(o) = open {
        let last = o.last;
        scan.regions.push(o.close(last));
    }
    if scan.regions.is_empty() {
        return Err(ClassifyError::AllInvalid);
    }
    Ok(scan)
}

fn check_bound(e: &Expr, params: &ParamBindings) -> Result<(), ClassifyError> {
    match e.params().into_iter().find(|p| params.get(p).is_none()) {
        Some(name) => Err(ClassifyError::Unbound(name)),
        None => Ok(()),
    }
}

fn evaluator<'a>(e: &'a Expr, params: &'a ParamBindings) -> impl Fn(f64) -> Option<f64> + 'a {
    move |x| match e.eval(x, params) {
        Ok(v) => Some(v),
        Err(EvalError::Domain(_)) => None,
        Err(EvalError::Unbound(_)) => unreachable!("parameters checked before scanning"),
    }
}

/// Samples `e` at `grid_n` uniform points of the window, brackets every
/// change between negative and non-negative values and refines it by
/// bisection to `1e-10 * (1 + |x|)`.
pub fn scan_sign_regions(
    e: &Expr,
    params: &ParamBindings,
    w: &Window,
    grid_n: usize,
) -> Result<SignScan, ClassifyError> {
    check_bound(e, params)?;
    scan_fn(evaluator(e, params), w.lo, w.hi, grid_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Label {
    NonOscillatory,
    Oscillatory,
    Indeterminate,
}

/// Which sufficient condition produced a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Justification {
    /// `D >= 0`: at most one zero.
    NonNegativeDiscriminant,
    /// `D <= -margin` out to an unbounded end: infinitely many zeros.
    NegativeDiscriminantBoundedAway,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifiedInterval {
    pub lo: f64,
    pub hi: f64,
    pub label: Label,
    pub justification: Justification,
    /// Infimum of D on non-negative pieces; supremum of D over the deciding
    /// samples on negative pieces.
    pub witness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Left,
    Right,
}

/// Discriminant samples beyond an unbounded window edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailProbe {
    pub edge: Edge,
    pub reach: f64,
    pub sup: f64,
    pub all_defined: bool,
    pub decaying: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyOptions {
    pub window: Window,
    pub margin: f64,
    pub grid_n: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub spec: SpecEcho,
    #[serde(rename = "D")]
    pub discriminant: String,
    pub pieces: Vec<ClassifiedInterval>,
    pub roots: Vec<f64>,
    pub tail_probes: Vec<TailProbe>,
    pub options: ClassifyOptions,
}

impl ClassificationReport {
    pub fn labels(&self) -> Vec<Label> {
        self.pieces.iter().map(|p| p.label).collect()
    }
}

/// Probes `D` from `edge` outward to `PROBE_REACH` half-widths.
///
/// The probe fails if any sample is undefined or above `-margin`, or if `|D|`
/// in the last third of the (logarithmic) reach has dropped below half its
/// smallest value in the first third.
fn probe_tail<F: Fn(f64) -> Option<f64>>(d: &F, w: &Window, edge: Edge, margin: f64) -> TailProbe {
    let (start, outward) = match edge {
        Edge::Left => (w.lo, -1.0),
        Edge::Right => (w.hi, 1.0),
    };
    let hw = w.half_width();
    let reach = PROBE_REACH * hw;
    let mut sup = f64::NEG_INFINITY;
    let mut all_defined = true;
    let mut early_min = f64::INFINITY;
    let mut late_max = 0.0f64;
    let lo_exp = -2.0f64;
    let hi_exp = PROBE_REACH.log10();
    let offsets = std::iter::once(0.0).chain((0..=PROBE_POINTS).map(|k| {
        let e = lo_exp + (hi_exp - lo_exp) * k as f64 / PROBE_POINTS as f64;
        10f64.powf(e)
    }));
    for s in offsets {
        let x = start + outward * hw * s;
        match d(x) {
            Some(v) => {
                sup = sup.max(v);
                if (1.0..=PROBE_REACH.powf(1.0 / 3.0)).contains(&s) {
                    early_min = early_min.min(v.abs());
                }
                if s >= PROBE_REACH.powf(2.0 / 3.0) {
                    late_max = late_max.max(v.abs());
                }
            }
            None => all_defined = false,
        }
    }
    let decaying = early_min.is_finite() && late_max < 0.5 * early_min;
    TailProbe {
        edge,
        reach,
        sup,
        all_defined,
        decaying,
        passed: all_defined && !decaying && sup <= -margin,
    }
}

/// Labels each maximal sign piece of the discriminant on `w`.
pub fn classify(
    spec: &OdeSpec,
    w: &Window,
    margin: f64,
    grid_n: usize,
) -> Result<ClassificationReport, ClassifyError> {
    if !(margin > 0.0) {
        return Err(ClassifyError::BadMargin(margin));
    }
    Window::new(w.lo, w.hi)?;
    if let Some(&at) = spec
        .singular_points()
        .iter()
        .find(|&&s| s > w.lo && s < w.hi)
    {
        return Err(ClassifyError::SingularWindow { at });
    }
    let d_expr = discriminant(spec);
    check_bound(&d_expr, spec.params())?;
    let d = evaluator(&d_expr, spec.params());
    let scan = scan_fn(&d, w.lo, w.hi, grid_n)?;
    if let Some(&at) = scan.invalid.first() {
        return Err(ClassifyError::SingularWindow { at });
    }

    let samples: Vec<(f64, f64)> = uniform_grid(w.lo, w.hi, grid_n)
        .filter_map(|x| d(x).map(|v| (x, v)))
        .collect();
    let values_on = |lo: f64, hi: f64| {
        samples
            .iter()
            .filter(move |(x, _)| *x >= lo && *x <= hi)
            .map(|(_, v)| *v)
            .chain([lo, hi].into_iter().filter_map(&d))
    };

    let mut probes = Vec::new();
    let mut pieces = Vec::new();
    for region in &scan.regions {
        if region.sign != Sign::Negative {
            let inf = values_on(region.lo, region.hi).fold(f64::INFINITY, f64::min);
            pieces.push(ClassifiedInterval {
                lo: region.lo,
                hi: region.hi,
                label: Label::NonOscillatory,
                justification: Justification::NonNegativeDiscriminant,
                witness: inf.max(0.0),
            });
            continue;
        }
        let mut edges = Vec::new();
        if region.lo == w.lo && w.assume_unbounded_left {
            edges.push(Edge::Left);
        }
        if region.hi == w.hi && w.assume_unbounded_right {
            edges.push(Edge::Right);
        }
        let region_probes: Vec<TailProbe> = edges
            .into_iter()
            .map(|e| probe_tail(&d, w, e, margin))
            .collect();
        let best = region_probes
            .iter()
            .filter(|p| p.passed)
            .map(|p| p.sup)
            .fold(None, |acc: Option<f64>, s| {
                Some(acc.map_or(s, |a| a.min(s)))
            });
        let piece = match best {
            Some(sup) => ClassifiedInterval {
                lo: region.lo,
                hi: region.hi,
                label: Label::Oscillatory,
                justification: Justification::NegativeDiscriminantBoundedAway,
                witness: sup,
            },
            None => {
                let sup = values_on(region.lo, region.hi)
                    .chain(region_probes.iter().map(|p| p.sup))
                    .fold(f64::NEG_INFINITY, f64::max);
                ClassifiedInterval {
                    lo: region.lo,
                    hi: region.hi,
                    label: Label::Indeterminate,
                    justification: Justification::None,
                    witness: sup.min(0.0),
                }
            }
        };
        probes.extend(region_probes);
        pieces.push(piece);
    }

    Ok(ClassificationReport {
        spec: spec.echo(),
        discriminant: d_expr.to_string(),
        pieces,
        roots: scan.roots,
        tail_probes: probes,
        options: ClassifyOptions {
            window: *w,
            margin,
            grid_n,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(b: &str, c: &str, params: &[(&str, f64)]) -> OdeSpec {
        OdeSpec::parse(b, c, "", ParamBindings::from_pairs(params.iter().copied())).unwrap()
    }

    fn window(lo: f64, hi: f64, left: bool, right: bool) -> Window {
        Window::new(lo, hi).unwrap().unbounded(left, right)
    }

    #[test]
    fn linear_sign_change() {
        let e = Expr::parse("4*x").unwrap();
        let scan = scan_sign_regions(
            &e,
            &ParamBindings::new(),
            &window(-10.0, 10.0, false, false),
            64,
        )
        .unwrap();
        assert_eq!(scan.roots.len(), 1);
        assert!(scan.roots[0].abs() < 1e-9);
        assert_eq!(scan.regions.len(), 2);
        assert_eq!(scan.regions[0].sign, Sign::Negative);
        assert_eq!(scan.regions[0].lo, -10.0);
        assert_eq!(scan.regions[1].sign, Sign::Positive);
        assert_eq!(scan.regions[1].hi, 10.0);
    }

    #[test]
    fn hermite_roots() {
        let s = spec("-2*x", "2*lambda", &[("lambda", 18.0)]);
        let scan = scan_sign_regions(
            &s.discriminant(),
            s.params(),
            &window(-10.0, 10.0, false, false),
            1000,
        )
        .unwrap();
        let r = 37f64.sqrt();
        assert_eq!(scan.roots.len(), 2);
        assert!((scan.roots[0] + r).abs() < 1e-8);
        assert!((scan.roots[1] - r).abs() < 1e-8);
        let naive = scan_sign_regions(
            &s.naive_discriminant(),
            s.params(),
            &window(-10.0, 10.0, false, false),
            1000,
        )
        .unwrap();
        assert!((naive.roots[0] + 6.0).abs() < 1e-8);
        assert!((naive.roots[1] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn constant_is_one_region() {
        let e = Expr::parse("5").unwrap();
        let scan = scan_sign_regions(
            &e,
            &ParamBindings::new(),
            &window(0.0, 1.0, false, false),
            16,
        )
        .unwrap();
        assert_eq!(scan.roots, Vec::<f64>::new());
        assert_eq!(scan.regions.len(), 1);
        assert_eq!(scan.regions[0].sign, Sign::Positive);

        let e = Expr::parse("0*x").unwrap();
        let scan = scan_sign_regions(
            &e,
            &ParamBindings::new(),
            &window(0.0, 1.0, false, false),
            16,
        )
        .unwrap();
        assert_eq!(scan.regions[0].sign, Sign::Zero);
    }

    #[test]
    fn domain_failures_split_regions() {
        let e = Expr::parse("1/x").unwrap();
        let scan = scan_sign_regions(
            &e,
            &ParamBindings::new(),
            &window(-1.0, 1.0, false, false),
            21,
        )
        .unwrap();
        assert_eq!(scan.invalid, vec![0.0]);
        assert_eq!(scan.regions.len(), 2);
        assert!(scan.roots.is_empty());
        assert!((scan.regions[0].hi + 0.1).abs() < 1e-15);

        let e = Expr::parse("ln(x)").unwrap();
        assert_eq!(
            scan_sign_regions(
                &e,
                &ParamBindings::new(),
                &window(-2.0, -1.0, false, false),
                16
            ),
            Err(ClassifyError::AllInvalid)
        );
        assert_eq!(
            scan_sign_regions(
                &e,
                &ParamBindings::new(),
                &window(1.0, 2.0, false, false),
                8
            ),
            Err(ClassifyError::GridTooSmall(8))
        );
    }

    #[test]
    fn airy() {
        let s = spec("0", "-x", &[]);
        let r = classify(
            &s,
            &window(-30.0, 10.0, true, false),
            DEFAULT_MARGIN,
            DEFAULT_GRID,
        )
        .unwrap();
        assert_eq!(r.labels(), vec![Label::Oscillatory, Label::NonOscillatory]);
        assert!(r.roots[0].abs() < 1e-6);
        assert_eq!(r.pieces[0].lo, -30.0);
        assert_eq!(r.pieces[1].hi, 10.0);
        assert!(r.pieces[0].witness <= -DEFAULT_MARGIN);
        assert_eq!(
            r.pieces[0].justification,
            Justification::NegativeDiscriminantBoundedAway
        );
    }

    #[test]
    fn airy_without_unbounded_edge_is_indeterminate() {
        let s = spec("0", "-x", &[]);
        let r = classify(
            &s,
            &window(-30.0, 10.0, false, true),
            DEFAULT_MARGIN,
            DEFAULT_GRID,
        )
        .unwrap();
        assert_eq!(
            r.labels(),
            vec![Label::Indeterminate, Label::NonOscillatory]
        );
    }

    #[test]
    fn modified_bessel_everywhere_non_oscillatory() {
        let s = spec("1/x", "-(1 + n^2/x^2)", &[("n", 1.0)]);
        let r = classify(
            &s,
            &window(0.5, 40.0, false, true),
            DEFAULT_MARGIN,
            DEFAULT_GRID,
        )
        .unwrap();
        assert_eq!(r.labels(), vec![Label::NonOscillatory]);
        assert!(r.pieces[0].witness > 4.0);
        assert!(r.roots.is_empty());
    }

    #[test]
    fn euler_log_is_indeterminate() {
        let s = spec("1/x", "k^2/x^2", &[("k", 2.0)]);
        let r = classify(
            &s,
            &window(1.0, 100.0, false, true),
            DEFAULT_MARGIN,
            DEFAULT_GRID,
        )
        .unwrap();
        assert_eq!(r.labels(), vec![Label::Indeterminate]);
        assert!(r.tail_probes[0].decaying);
        // the decay test still rejects it when the margin is tiny
        let r = classify(&s, &window(1.0, 100.0, false, true), 1e-12, DEFAULT_GRID).unwrap();
        assert_eq!(r.labels(), vec![Label::Indeterminate]);
    }

    #[test]
    fn parabolic_cylinder() {
        let s = spec("0", "x^2/4 - a", &[("a", 16.0)]);
        let r = classify(
            &s,
            &window(-20.0, 20.0, true, true),
            DEFAULT_MARGIN,
            DEFAULT_GRID,
        )
        .unwrap();
        assert_eq!(
            r.labels(),
            vec![
                Label::Oscillatory,
                Label::NonOscillatory,
                Label::Oscillatory
            ]
        );
        assert!((r.roots[0] + 8.0).abs() < 1e-6);
        assert!((r.roots[1] - 8.0).abs() < 1e-6);
    }

    #[test]
    fn hermite_interior_piece_is_indeterminate() {
        let s = spec("-2*x", "2*lambda", &[("lambda", 18.0)]);
        let r = classify(
            &s,
            &window(-10.0, 10.0, true, true),
            DEFAULT_MARGIN,
            DEFAULT_GRID,
        )
        .unwrap();
        assert_eq!(
            r.labels(),
            vec![
                Label::NonOscillatory,
                Label::Indeterminate,
                Label::NonOscillatory
            ]
        );
    }

    #[test]
    fn rejects_bad_input() {
        let s = spec("1/x", "1", &[]).with_singular_points(vec![0.0]);
        assert_eq!(
            classify(&s, &window(-1.0, 1.0, false, false), 1e-6, 64).unwrap_err(),
            ClassifyError::SingularWindow { at: 0.0 }
        );
        let s = spec("1/x", "1", &[]);
        assert!(matches!(
            classify(&s, &window(-1.0, 1.0, false, false), 1e-6, 65),
            Err(ClassifyError::SingularWindow { .. })
        ));
        assert_eq!(
            classify(&s, &window(1.0, 2.0, false, false), 0.0, 64).unwrap_err(),
            ClassifyError::BadMargin(0.0)
        );
        assert!(Window::new(2.0, 1.0).is_err());
    }

    #[test]
    fn report_serializes_with_expected_keys() {
        let s = spec("0", "-x", &[]);
        let r = classify(&s, &window(-30.0, 10.0, true, false), DEFAULT_MARGIN, 64).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["spec", "D", "pieces", "roots", "options"] {
            assert!(v.get(key).is_some(), "{key} missing");
        }
        assert_eq!(v["D"], "4*x");
        let piece = &v["pieces"][0];
        assert_eq!(piece["label"], "Oscillatory");
        assert_eq!(piece["justification"], "negative_discriminant_bounded_away");
        for key in ["lo", "hi", "witness"] {
            assert!(piece[key].is_f64(), "{key}");
        }
    }
}
