use oscillation::catalog::{self, CatalogEntry, ResolvedPiece};
use oscillation::classify::{classify, Window};
use oscillation::expr::{EvalError, Expr, ParamBindings};
use oscillation::integrate::{
    count_zeros, solve_ivp, uniform_grid, InitialCondition, SolveOptions, SolveStats, Trajectory,
    Zero,
};
use oscillation::ode::{discriminant, naive_discriminant, OdeSpec};
use oscillation::verify::{
    check_normal_form, check_riccati, check_sturm, check_wronskian, oscillates_about,
};
use serde::Serialize;

use crate::args::{
    AnalyzeArgs, CatalogCommand, Command, ComparisonArgs, Format, OutputArgs, SampleArgs,
    SolveArgs, SpecArgs, TolArgs, Unbounded, VerifyCommand, WindowArgs,
};
use crate::error::Failure;
use crate::output::{emit, joined, json, num, opt_num, render, tag, Csv};

/// Runs one command. `Ok(false)` means a check ran and failed.
pub fn run(command: Command) -> Result<bool, Failure> {
    match command {
        Command::Analyze(a) => analyze(a),
        Command::Solve(a) => solve(a, false),
        Command::Zeros(a) => solve(a, true),
        Command::Sample(a) => sample(a),
        Command::Verify { check } => verify(check),
        Command::Catalog { action } => catalog_command(action),
    }
}

struct Resolved {
    spec: OdeSpec,
    entry: Option<CatalogEntry>,
}

fn bindings(pairs: &[(String, f64)]) -> ParamBindings {
    ParamBindings::from_pairs(pairs.iter().map(|(k, v)| (k.clone(), *v)))
}

fn resolve_spec(a: &SpecArgs) -> Result<Resolved, Failure> {
    let params = bindings(&a.params);
    match &a.catalog {
        Some(name) => {
            let entry = catalog::get(name, &params)?;
            Ok(Resolved {
                spec: entry.spec()?,
                entry: Some(entry),
            })
        }
        None => {
            let c =
                a.c.as_deref()
                    .ok_or_else(|| Failure::Usage("--c is required without --catalog".into()))?;
            let spec = OdeSpec::parse(
                a.b.as_deref().unwrap_or("0"),
                c,
                a.f.as_deref().unwrap_or("0"),
                params,
            )?
            .with_singular_points(a.singular.clone());
            Ok(Resolved { spec, entry: None })
        }
    }
}

fn resolve_window(w: &WindowArgs, entry: Option<&CatalogEntry>) -> Result<Window, Failure> {
    let base = match (w.window, entry) {
        (Some((lo, hi)), e) => {
            let flags = e.map(|e| {
                (
                    e.window.assume_unbounded_left,
                    e.window.assume_unbounded_right,
                )
            });
            let (l, r) = flags.unwrap_or((false, false));
            Window::new(lo, hi)?.unbounded(l, r)
        }
        (None, Some(e)) => e.window,
        (None, None) => {
            return Err(Failure::Usage(
                "--window is required without --catalog".into(),
            ))
        }
    };
    Ok(match w.unbounded {
        None => base,
        Some(Unbounded::None) => base.unbounded(false, false),
        Some(Unbounded::Left) => base.unbounded(true, false),
        Some(Unbounded::Right) => base.unbounded(false, true),
        Some(Unbounded::Both) => base.unbounded(true, true),
    })
}

fn solve_options(t: &TolArgs) -> SolveOptions {
    SolveOptions {
        rel_tol: t.rel_tol,
        abs_tol: t.abs_tol,
        blowup: t.blowup,
        max_steps: t.max_steps,
        ..SolveOptions::default()
    }
}

fn initial((x0, y0, dy0): (f64, f64, f64)) -> InitialCondition {
    InitialCondition::new(x0, y0, dy0)
}

fn finish(out: &OutputArgs, body: String, pass: bool) -> Result<bool, Failure> {
    emit(out, &body)?;
    Ok(pass)
}

fn analyze(a: AnalyzeArgs) -> Result<bool, Failure> {
    let r = resolve_spec(&a.spec)?;
    let w = resolve_window(&a.window, r.entry.as_ref())?;
    let report = classify(&r.spec, &w, a.margin, a.grid)?;
    let body = render(
        &a.output,
        Format::Json,
        || json(&report),
        || {
            let mut csv = Csv::new(&["lo", "hi", "label", "justification", "witness"]);
            for p in &report.pieces {
                csv.row([
                    num(p.lo),
                    num(p.hi),
                    tag(&p.label),
                    tag(&p.justification),
                    num(p.witness),
                ]);
            }
            csv.finish()
        },
    );
    finish(&a.output, body, true)
}

#[derive(Serialize)]
struct Sample {
    x: f64,
    y: f64,
    dy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    du: Option<f64>,
}

#[derive(Serialize)]
struct SolveReport {
    initial: InitialCondition,
    to: f64,
    about: Option<String>,
    gate_residual: Option<f64>,
    truncated_at: Option<f64>,
    stats: SolveStats,
    zeros: Vec<Zero>,
    samples: Vec<Sample>,
}

#[derive(Serialize)]
struct ZerosReport {
    initial: InitialCondition,
    lo: f64,
    hi: f64,
    about: Option<String>,
    gate_residual: Option<f64>,
    truncated_at: Option<f64>,
    count: usize,
    zeros: Vec<Zero>,
    /// Near-zeros of |y| without a sign change.
    suspects: Vec<f64>,
}

struct About {
    text: String,
    value: Expr,
    slope: Expr,
    gate_residual: f64,
    zeros: oscillation::integrate::ZeroList,
}

fn about_particular(
    spec: &OdeSpec,
    text: &str,
    ic: InitialCondition,
    to: f64,
    opts: &SolveOptions,
) -> Result<About, Failure> {
    let psi = Expr::parse(text)?;
    let w = Window::new(ic.x0.min(to), ic.x0.max(to))?;
    let report = oscillates_about(spec, &psi, ic, &w, opts)?;
    let value = psi.substitute(spec.params()).simplify();
    let slope = value.differentiate().simplify();
    Ok(About {
        text: report.psi_p,
        value,
        slope,
        gate_residual: report.gate_residual,
        zeros: report.zeros,
    })
}

fn sample_at(t: &Trajectory, about: Option<&About>, x: f64) -> Result<Sample, Failure> {
    let s = t
        .state(x)
        .ok_or_else(|| Failure::Numeric(format!("no solution at x = {x}")))?;
    let (u, du) = match about {
        Some(a) => {
            let none = ParamBindings::new();
            (
                Some(s.y - a.value.eval(x, &none)?),
                Some(s.dy - a.slope.eval(x, &none)?),
            )
        }
        None => (None, None),
    };
    Ok(Sample {
        x,
        y: s.y,
        dy: s.dy,
        u,
        du,
    })
}

fn solve(a: SolveArgs, zeros_only: bool) -> Result<bool, Failure> {
    let r = resolve_spec(&a.spec)?;
    let ic = initial(a.ic);
    let opts = solve_options(&a.tol);
    if a.to == ic.x0 {
        return Err(Failure::Usage(
            "--to must differ from the initial point".into(),
        ));
    }
    let t = solve_ivp(&r.spec, ic, a.to, &opts)?;
    if let Some(x) = t.truncated_at() {
        eprintln!(
            "warning: |y| exceeded {:e}; integration stopped at x = {x}",
            opts.blowup
        );
    }
    let about = match &a.about {
        Some(text) => Some(about_particular(&r.spec, text, ic, a.to, &opts)?),
        None => None,
    };
    let zeros = match &about {
        Some(ab) => ab.zeros.clone(),
        None => count_zeros(&t, t.lo(), t.hi()),
    };

    if zeros_only {
        let report = ZerosReport {
            initial: ic,
            lo: zeros.lo,
            hi: zeros.hi,
            about: about.as_ref().map(|ab| ab.text.clone()),
            gate_residual: about.as_ref().map(|ab| ab.gate_residual),
            truncated_at: t.truncated_at(),
            count: zeros.len(),
            zeros: zeros.zeros,
            suspects: zeros.suspects,
        };
        let body = render(
            &a.output,
            Format::Json,
            || json(&report),
            || {
                let mut csv = Csv::new(&["x", "residual", "simple"]);
                for z in &report.zeros {
                    csv.row([num(z.x), num(z.residual), z.simple.to_string()]);
                }
                csv.finish()
            },
        );
        return finish(&a.output, body, true);
    }

    let xs: Vec<f64> = match a.points {
        Some(n) if n < 2 => return Err(Failure::Usage("--points must be at least 2".into())),
        Some(n) => uniform_grid(t.lo(), t.hi(), n).collect(),
        None => t.nodes().iter().map(|n| n.x).collect(),
    };
    let samples = xs
        .into_iter()
        .map(|x| sample_at(&t, about.as_ref(), x))
        .collect::<Result<Vec<_>, _>>()?;
    let report = SolveReport {
        initial: ic,
        to: a.to,
        about: about.as_ref().map(|ab| ab.text.clone()),
        gate_residual: about.as_ref().map(|ab| ab.gate_residual),
        truncated_at: t.truncated_at(),
        stats: *t.stats(),
        zeros: zeros.zeros,
        samples,
    };
    let body = render(
        &a.output,
        Format::Csv,
        || json(&report),
        || {
            let shifted = report.about.is_some();
            let header: &[&str] = if shifted {
                &["x", "y", "dy", "u", "du"]
            } else {
                &["x", "y", "dy"]
            };
            let mut csv = Csv::new(header);
            for s in &report.samples {
                let mut cells = vec![num(s.x), num(s.y), num(s.dy)];
                if shifted {
                    cells.push(opt_num(s.u));
                    cells.push(opt_num(s.du));
                }
                csv.row(cells);
            }
            csv.finish()
        },
    );
    finish(&a.output, body, true)
}

#[derive(Serialize)]
struct DiscriminantRow {
    x: f64,
    #[serde(rename = "D")]
    d: Option<f64>,
    #[serde(rename = "Q")]
    q: Option<f64>,
    #[serde(rename = "naiveD")]
    naive_d: Option<f64>,
}

#[derive(Serialize)]
struct SampleReport {
    #[serde(rename = "D")]
    discriminant: String,
    #[serde(rename = "naiveD")]
    naive_discriminant: String,
    rows: Vec<DiscriminantRow>,
}

fn defined(e: &Expr, x: f64, params: &ParamBindings) -> Result<Option<f64>, Failure> {
    match e.eval(x, params) {
        Ok(v) => Ok(Some(v)),
        Err(EvalError::Domain(_)) => Ok(None),
        Err(err) => Err(err.into()),
    }
}

fn sample(a: SampleArgs) -> Result<bool, Failure> {
    let r = resolve_spec(&a.spec)?;
    let w = resolve_window(&a.window, r.entry.as_ref())?;
    if a.points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    let d = discriminant(&r.spec);
    let nd = naive_discriminant(&r.spec);
    let params = r.spec.params();
    let mut rows = Vec::with_capacity(a.points);
    for x in uniform_grid(w.lo, w.hi, a.points) {
        let dv = defined(&d, x, params)?;
        rows.push(DiscriminantRow {
            x,
            d: dv,
            q: dv.map(|v| -0.25 * v),
            naive_d: defined(&nd, x, params)?,
        });
    }
    let report = SampleReport {
        discriminant: d.to_string(),
        naive_discriminant: nd.to_string(),
        rows,
    };
    let body = render(
        &a.output,
        Format::Csv,
        || json(&report),
        || {
            let mut csv = Csv::new(&["x", "D", "Q", "naiveD"]);
            for row in &report.rows {
                csv.row([
                    num(row.x),
                    opt_num(row.d),
                    opt_num(row.q),
                    opt_num(row.naive_d),
                ]);
            }
            csv.finish()
        },
    );
    finish(&a.output, body, true)
}

struct Comparison {
    q1: Expr,
    q2: Expr,
    params: ParamBindings,
    window: Window,
    ic1: InitialCondition,
    ic2: InitialCondition,
    opts: SolveOptions,
}

fn comparison(a: &ComparisonArgs) -> Result<Comparison, Failure> {
    let (lo, hi) = a.window;
    let default_ic = (lo, 0.0, 1.0);
    Ok(Comparison {
        q1: Expr::parse(&a.q1)?,
        q2: Expr::parse(&a.q2)?,
        params: bindings(&a.params),
        window: Window::new(lo, hi)?,
        ic1: initial(a.ic1.unwrap_or(default_ic)),
        ic2: initial(a.ic2.unwrap_or(default_ic)),
        opts: solve_options(&a.tol),
    })
}

fn verify(check: VerifyCommand) -> Result<bool, Failure> {
    match check {
        VerifyCommand::Sturm(a) => {
            let c = comparison(&a)?;
            let report = check_sturm(&c.q1, &c.q2, &c.params, &c.window, c.ic1, c.ic2, &c.opts)?;
            let body = render(
                &a.output,
                Format::Json,
                || json(&report),
                || {
                    let mut csv = Csv::new(&["lo", "hi", "inner", "shared_endpoints", "pass"]);
                    for g in &report.gaps {
                        csv.row([
                            num(g.lo),
                            num(g.hi),
                            joined(&g.inner),
                            joined(&g.shared_endpoints),
                            g.pass.to_string(),
                        ]);
                    }
                    csv.finish()
                },
            );
            finish(&a.output, body, report.pass)
        }
        VerifyCommand::Wronskian(a) => {
            let c = comparison(&a)?;
            let report =
                check_wronskian(&c.q1, &c.q2, &c.params, &c.window, c.ic1, c.ic2, &c.opts)?;
            let body = render(
                &a.output,
                Format::Json,
                || json(&report),
                || {
                    let mut csv = Csv::new(&["x", "w", "residual"]);
                    for s in &report.samples {
                        csv.row([num(s.x), num(s.w), num(s.residual)]);
                    }
                    csv.finish()
                },
            );
            finish(&a.output, body, report.pass)
        }
        VerifyCommand::Riccati {
            spec,
            ic,
            to,
            cutoff,
            tol,
            output,
        } => {
            let r = resolve_spec(&spec)?;
            let ic = initial(ic);
            if to == ic.x0 {
                return Err(Failure::Usage(
                    "--to must differ from the initial point".into(),
                ));
            }
            let t = solve_ivp(&r.spec, ic, to, &solve_options(&tol))?;
            let report = check_riccati(&r.spec, &t, cutoff)?;
            let body = render(
                &output,
                Format::Json,
                || json(&report),
                || {
                    let mut csv = Csv::new(&["x", "m", "residual"]);
                    for s in &report.samples {
                        csv.row([num(s.x), num(s.m), num(s.residual)]);
                    }
                    csv.finish()
                },
            );
            finish(&output, body, report.pass)
        }
        VerifyCommand::NormalForm {
            spec,
            window,
            ic,
            tol,
            output,
        } => {
            let r = resolve_spec(&spec)?;
            let w = resolve_window(&window, r.entry.as_ref())?;
            let ic = initial(ic.unwrap_or((w.lo, 1.0, 0.0)));
            let report = check_normal_form(&r.spec, ic, &w, &solve_options(&tol))?;
            let body = render(
                &output,
                Format::Json,
                || json(&report),
                || {
                    let mut csv = Csv::new(&["zero_y", "zero_u"]);
                    for k in 0..report.zeros_y.len().max(report.zeros_u.len()) {
                        csv.row([
                            opt_num(report.zeros_y.get(k).copied()),
                            opt_num(report.zeros_u.get(k).copied()),
                        ]);
                    }
                    csv.finish()
                },
            );
            finish(&output, body, report.pass)
        }
    }
}

#[derive(Serialize)]
struct EntrySummary<'a> {
    name: &'a str,
    b: &'a str,
    c: &'a str,
    f: &'a str,
    params: &'a ParamBindings,
    window: Window,
    note: &'a str,
}

#[derive(Serialize)]
struct EntryDetail<'a> {
    entry: &'a CatalogEntry,
    #[serde(rename = "D")]
    discriminant: String,
    #[serde(rename = "naiveD")]
    naive_discriminant: String,
    expected_pieces: Vec<ResolvedPiece>,
}

fn params_text(p: &ParamBindings) -> String {
    p.iter()
        .map(|(k, v)| format!("{k}={}", num(v)))
        .collect::<Vec<_>>()
        .join(";")
}

fn catalog_command(action: CatalogCommand) -> Result<bool, Failure> {
    match action {
        CatalogCommand::List { output } => {
            let entries = catalog::catalog_entries();
            let summaries: Vec<EntrySummary> = entries
                .iter()
                .map(|e| EntrySummary {
                    name: &e.name,
                    b: &e.b,
                    c: &e.c,
                    f: &e.f,
                    params: &e.params,
                    window: e.window,
                    note: &e.note,
                })
                .collect();
            let body = render(
                &output,
                Format::Json,
                || json(&summaries),
                || {
                    let mut csv = Csv::new(&["name", "b", "c", "f", "params", "lo", "hi"]);
                    for s in &summaries {
                        csv.row([
                            s.name.to_string(),
                            s.b.to_string(),
                            s.c.to_string(),
                            s.f.to_string(),
                            params_text(s.params),
                            num(s.window.lo),
                            num(s.window.hi),
                        ]);
                    }
                    csv.finish()
                },
            );
            finish(&output, body, true)
        }
        CatalogCommand::Show {
            name,
            params,
            output,
        } => {
            let entry = catalog::get(&name, &bindings(&params))?;
            let spec = entry.spec()?;
            let detail = EntryDetail {
                entry: &entry,
                discriminant: discriminant(&spec).to_string(),
                naive_discriminant: naive_discriminant(&spec).to_string(),
                expected_pieces: entry.resolved_pieces()?,
            };
            let body = render(
                &output,
                Format::Json,
                || json(&detail),
                || {
                    let mut csv = Csv::new(&["label", "lo", "hi"]);
                    for p in &detail.expected_pieces {
                        csv.row([tag(&p.label), num(p.lo), num(p.hi)]);
                    }
                    csv.finish()
                },
            );
            finish(&output, body, true)
        }
        CatalogCommand::Check {
            name,
            params,
            output,
        } => {
            let entries = match name {
                Some(name) => vec![catalog::get(&name, &bindings(&params))?],
                None if params.is_empty() => catalog::catalog_entries(),
                None => return Err(Failure::Usage("--param needs an entry name".into())),
            };
            let reports: Vec<_> = entries.iter().map(catalog::regression_check).collect();
            let pass = reports.iter().all(|r| r.pass);
            let body = render(
                &output,
                Format::Json,
                || json(&reports),
                || {
                    let mut csv = Csv::new(&["name", "pass", "mismatches"]);
                    for r in &reports {
                        csv.row([
                            r.name.clone(),
                            r.pass.to_string(),
                            r.mismatches.len().to_string(),
                        ]);
                    }
                    csv.finish()
                },
            );
            finish(&output, body, pass)
        }
    }
}
