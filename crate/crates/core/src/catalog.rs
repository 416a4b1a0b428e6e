//! Named equations with known oscillation boundaries.

use serde::Serialize;
use thiserror::Error;

use crate::classify::{classify, Label, Window, DEFAULT_GRID, DEFAULT_MARGIN};
use crate::expr::{EvalError, Expr, ParamBindings};
use crate::integrate::{count_zeros, solve_span, InitialCondition, SolveError, SolveOptions};
use crate::ode::{OdeSpec, SpecError};

/// Boundaries must match the classifier to this distance.
pub const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("no catalog entry named `{0}`")]
    UnknownName(String),
    #[error("entry `{entry}` has no parameter `{param}`")]
    UnknownParam { entry: String, param: String },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("boundary `{expr}` does not evaluate: {source}")]
    Boundary { expr: String, source: EvalError },
}

/// A piece of the expected classification. `None` bounds stand for the
/// window edge; others are expressions in the entry's parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedPiece {
    pub label: Label,
    pub lo: Option<String>,
    pub hi: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedPiece {
    pub label: Label,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub b: String,
    pub c: String,
    pub f: String,
    pub params: ParamBindings,
    pub singular_points: Vec<f64>,
    pub window: Window,
    pub expected: Vec<ExpectedPiece>,
    /// Closed-form solution of the homogeneous equation, if known.
    pub exact_solution: Option<String>,
    /// Particular solution of the non-homogeneous equation, if any.
    pub particular_solution: Option<String>,
    pub note: String,
}

struct Template {
    name: &'static str,
    b: &'static str,
    c: &'static str,
    f: &'static str,
    params: &'static [(&'static str, f64)],
    singular_points: &'static [f64],
    window: (f64, f64, bool, bool),
    expected: &'static [(Label, Option<&'static str>, Option<&'static str>)],
    exact: Option<&'static str>,
    particular: Option<&'static str>,
    note: &'static str,
}

use Label::{Indeterminate, NonOscillatory, Oscillatory};

const TEMPLATES: &[Template] = &[
    Template {
        name: "parabolic_cylinder",
        b: "0",
        c: "x^2/4 - a",
        f: "",
        params: &[("a", 16.0)],
        singular_points: &[],
        window: (-20.0, 20.0, true, true),
        expected: &[
            (Oscillatory, None, Some("-2*sqrt(a)")),
            (NonOscillatory, Some("-2*sqrt(a)"), Some("2*sqrt(a)")),
            (Oscillatory, Some("2*sqrt(a)"), None),
        ],
        exact: None,
        particular: None,
        note: "D = 4a - x^2; oscillatory for |x| >= 2 sqrt(a).",
    },
    Template {
        name: "airy",
        b: "0",
        c: "-x",
        f: "",
        params: &[],
        singular_points: &[],
        window: (-30.0, 10.0, true, false),
        expected: &[
            (Oscillatory, None, Some("0")),
            (NonOscillatory, Some("0"), None),
        ],
        exact: None,
        particular: None,
        note: "D = 4x; oscillatory for x <= 0.",
    },
    Template {
        name: "bessel",
        b: "1/x",
        c: "1 - n^2/x^2",
        f: "",
        params: &[("n", 9.0)],
        singular_points: &[0.0],
        window: (0.5, 60.0, false, true),
        expected: &[
            (NonOscillatory, None, Some("sqrt(n^2 - 1/4)")),
            (Oscillatory, Some("sqrt(n^2 - 1/4)"), None),
        ],
        exact: None,
        particular: None,
        note: "D = (4n^2 - 1)/x^2 - 4; the frozen-coefficient estimate sqrt(n^2 + 1/4) is off by one half under the root.",
    },
    Template {
        name: "hermite",
        b: "-2*x",
        c: "2*lambda",
        f: "",
        params: &[("lambda", 18.0)],
        singular_points: &[],
        window: (-10.0, 10.0, true, true),
        expected: &[
            (NonOscillatory, None, Some("-sqrt(2*lambda + 1)")),
            (Indeterminate, Some("-sqrt(2*lambda + 1)"), Some("sqrt(2*lambda + 1)")),
            (NonOscillatory, Some("sqrt(2*lambda + 1)"), None),
        ],
        exact: None,
        particular: None,
        note: "D = 4x^2 - 8 lambda - 4; the negative piece is finite, so no oscillation claim is made there.",
    },
    Template {
        name: "modified_bessel",
        b: "1/x",
        c: "-(1 + n^2/x^2)",
        f: "",
        params: &[("n", 1.0)],
        singular_points: &[0.0],
        window: (0.5, 40.0, false, true),
        expected: &[(NonOscillatory, None, None)],
        exact: None,
        particular: None,
        note: "D = (4n^2 - 1)/x^2 + 4 > 0 for n >= 1/2.",
    },
    Template {
        name: "euler_log",
        b: "1/x",
        c: "k^2/x^2",
        f: "",
        params: &[("k", 2.0)],
        singular_points: &[0.0],
        window: (0.5, 120.0, false, true),
        expected: &[(Indeterminate, None, None)],
        exact: Some("sin(k*ln(x))"),
        particular: None,
        note: "D = -(4k^2 + 1)/x^2 tends to 0 from below; sin(k ln x) oscillates.",
    },
    Template {
        name: "sqrt_case",
        b: "0",
        c: "1/(4*x^2)",
        f: "",
        params: &[],
        singular_points: &[0.0],
        window: (1.0, 100.0, false, true),
        expected: &[(Indeterminate, None, None)],
        exact: Some("sqrt(x)"),
        particular: None,
        note: "D = -1/x^2 tends to 0 from below; sqrt(x) never vanishes.",
    },
    Template {
        name: "nonhomog_airy",
        b: "0",
        c: "-x",
        f: "5*x^2",
        params: &[],
        singular_points: &[],
        window: (-25.0, 10.0, true, false),
        expected: &[
            (Oscillatory, None, Some("0")),
            (NonOscillatory, Some("0"), None),
        ],
        exact: None,
        particular: Some("-5*x"),
        note: "Solutions oscillate about the particular solution -5x for x <= 0.",
    },
];

impl Template {
    fn build(&self) -> CatalogEntry {
        let (lo, hi, left, right) = self.window;
        CatalogEntry {
            name: self.name.to_string(),
            b: self.b.to_string(),
            c: self.c.to_string(),
            f: self.f.to_string(),
            params: ParamBindings::from_pairs(self.params.iter().copied()),
            singular_points: self.singular_points.to_vec(),
            window: Window::new(lo, hi)
                .expect("catalog windows are non-empty")
                .unbounded(left, right),
            expected: self
                .expected
                .iter()
                .map(|&(label, lo, hi)| ExpectedPiece {
                    label,
                    lo: lo.map(str::to_string),
                    hi: hi.map(str::to_string),
                })
                .collect(),
            exact_solution: self.exact.map(str::to_string),
            particular_solution: self.particular.map(str::to_string),
            note: self.note.to_string(),
        }
    }
}

pub fn catalog_entries() -> Vec<CatalogEntry> {
    TEMPLATES.iter().map(Template::build).collect()
}

pub fn names() -> Vec<&'static str> {
    TEMPLATES.iter().map(|t| t.name).collect()
}

/// Looks up an entry and overrides some of its default parameters.
pub fn get(name: &str, overrides: &ParamBindings) -> Result<CatalogEntry, CatalogError> {
    let mut entry = TEMPLATES
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| CatalogError::UnknownName(name.to_string()))?
        .build();
    for (param, value) in overrides.iter() {
        if entry.params.get(param).is_none() {
            return Err(CatalogError::UnknownParam {
                entry: entry.name,
                param: param.to_string(),
            });
        }
        entry.params.set(param, value);
    }
    Ok(entry)
}

impl CatalogEntry {
    pub fn spec(&self) -> Result<OdeSpec, CatalogError> {
        Ok(
            OdeSpec::parse(&self.b, &self.c, &self.f, self.params.clone())?
                .with_singular_points(self.singular_points.clone()),
        )
    }

    fn bound(&self, text: &Option<String>, edge: f64) -> Result<f64, CatalogError> {
        let Some(text) = text else {
            return Ok(edge);
        };
        let err = |source| CatalogError::Boundary {
            expr: text.clone(),
            source,
        };
        let e = Expr::parse(text).map_err(|p| err(EvalError::Unbound(p.to_string())))?;
        e.eval(0.0, &self.params).map_err(err)
    }

    /// Expected pieces with boundaries evaluated under the entry's params.
    pub fn resolved_pieces(&self) -> Result<Vec<ResolvedPiece>, CatalogError> {
        self.expected
            .iter()
            .map(|p| {
                Ok(ResolvedPiece {
                    label: p.label,
                    lo: self.bound(&p.lo, self.window.lo)?,
                    hi: self.bound(&p.hi, self.window.hi)?,
                })
            })
            .collect()
    }

    /// Initial condition matching the exact solution at `x0`.
    pub fn exact_initial(&self, x0: f64) -> Option<InitialCondition> {
        let e = Expr::parse(self.exact_solution.as_deref()?).ok()?;
        let y = e.eval(x0, &self.params).ok()?;
        let dy = e.differentiate().eval(x0, &self.params).ok()?;
        Some(InitialCondition::new(x0, y, dy))
    }
}

/// Zero counts from one integration per classified piece.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Soundness {
    pub label: Label,
    pub lo: f64,
    pub hi: f64,
    pub initial: InitialCondition,
    /// Zeros on the piece.
    pub count: usize,
    /// Zeros on the piece extended by its own length towards its unbounded
    /// side (oscillatory pieces only).
    pub extended_count: Option<usize>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionReport {
    pub name: String,
    pub expected: Vec<ResolvedPiece>,
    pub found: Vec<ResolvedPiece>,
    pub mismatches: Vec<String>,
    pub soundness: Vec<Soundness>,
    pub pass: bool,
}

/// Classifies the entry at its parameters and compares labels and
/// boundaries with the expected pieces, then integrates once per piece to
/// check the zero counts against the labels.
pub fn regression_check(entry: &CatalogEntry) -> RegressionReport {
    let mut report = RegressionReport {
        name: entry.name.clone(),
        expected: Vec::new(),
        found: Vec::new(),
        mismatches: Vec::new(),
        soundness: Vec::new(),
        pass: false,
    };
    let fail = |mut report: RegressionReport, msg: String| {
        report.mismatches.push(msg);
        report
    };
    let spec = match entry.spec() {
        Ok(s) => s,
        Err(e) => return fail(report, e.to_string()),
    };
    report.expected = match entry.resolved_pieces() {
        Ok(p) => p,
        Err(e) => return fail(report, e.to_string()),
    };
    let classification = match classify(&spec, &entry.window, DEFAULT_MARGIN, DEFAULT_GRID) {
        Ok(r) => r,
        Err(e) => return fail(report, e.to_string()),
    };
    report.found = classification
        .pieces
        .iter()
        .map(|p| ResolvedPiece {
            label: p.label,
            lo: p.lo,
            hi: p.hi,
        })
        .collect();

    if report.found.len() != report.expected.len() {
        report.mismatches.push(format!(
            "expected {} pieces, found {}",
            report.expected.len(),
            report.found.len()
        ));
    }
    for (i, (e, f)) in report.expected.iter().zip(&report.found).enumerate() {
        if e.label != f.label {
            report.mismatches.push(format!(
                "piece {i}: expected {:?}, found {:?}",
                e.label, f.label
            ));
        }
        for (what, a, b) in [("lo", e.lo, f.lo), ("hi", e.hi, f.hi)] {
            if !((a - b).abs() <= BOUNDARY_TOL) {
                report
                    .mismatches
                    .push(format!("piece {i}: expected {what} = {a}, found {b}"));
            }
        }
    }

    // Labels describe solutions of the homogeneous equation (for a forced
    // equation, differences y - psi_p), so that is what gets integrated.
    let homogeneous =
        match OdeSpec::homogeneous(spec.b().clone(), spec.c().clone(), spec.params().clone()) {
            Ok(h) => h.with_singular_points(spec.singular_points().to_vec()),
            Err(e) => return fail(report, e.to_string()),
        };
    let opts = SolveOptions::default();
    for (piece, p) in report.found.iter().zip(&classification.pieces) {
        match soundness(&homogeneous, &entry.window, p.lo, p.hi, piece.label, &opts) {
            Ok(s) => report.soundness.push(s),
            Err(e) => report
                .mismatches
                .push(format!("integration on [{}, {}] failed: {e}", p.lo, p.hi)),
        }
    }
    report.pass = report.mismatches.is_empty() && report.soundness.iter().all(|s| s.pass);
    report
}

fn soundness(
    spec: &OdeSpec,
    w: &Window,
    lo: f64,
    hi: f64,
    label: Label,
    opts: &SolveOptions,
) -> Result<Soundness, SolveError> {
    let len = hi - lo;
    let left_open = lo == w.lo && w.assume_unbounded_left;
    let right_open = hi == w.hi && w.assume_unbounded_right;
    let (x0, span) = match label {
        Label::Oscillatory if left_open => (hi, (lo - len, hi)),
        Label::Oscillatory if right_open => (lo, (lo, hi + len)),
        _ => (0.5 * (lo + hi), (lo, hi)),
    };
    let initial = InitialCondition::new(x0, 1.0, 0.5);
    let t = solve_span(spec, initial, span.0, span.1, opts)?;
    let count = count_zeros(&t, lo, hi).len();
    let extended_count = match label {
        Label::Oscillatory => Some(count_zeros(&t, span.0, span.1).len()),
        _ => None,
    };
    let pass = match label {
        Label::NonOscillatory => count <= 1,
        Label::Oscillatory => extended_count.is_some_and(|e| e > count),
        Label::Indeterminate => true,
    };
    Ok(Soundness {
        label,
        lo,
        hi,
        initial,
        count,
        extended_count,
        pass,
    })
}
