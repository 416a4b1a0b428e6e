use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "oscillation",
    version,
    about = "Oscillation analysis for y'' + b(x) y' + c(x) y = f(x)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a window by the sign of the discriminant D = b^2 - 4c + 2b'.
    Analyze(AnalyzeArgs),
    /// Integrate an initial-value problem.
    Solve(SolveArgs),
    /// Locate the zeros of an initial-value solution.
    Zeros(SolveArgs),
    /// Tabulate D, Q = -D/4 and the naive discriminant b^2 - 4c.
    Sample(SampleArgs),
    /// Run a numerical check.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Built-in equations.
    Catalog {
        #[command(subcommand)]
        action: CatalogCommand,
    },
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["catalog", "c"])))]
pub struct SpecArgs {
    /// Use a catalog equation.
    #[arg(long, conflicts_with_all = ["b", "c", "f", "singular"])]
    pub catalog: Option<String>,
    /// Coefficient of y' (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Coefficient of y.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    /// Right-hand side (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Parameter binding; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Singular points of the coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub singular: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unbounded {
    None,
    Left,
    Right,
    Both,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Analysis window.
    #[arg(long, value_name = "LO:HI", value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
    /// Window edges that stand for an infinite interval.
    #[arg(long, value_enum)]
    pub unbounded: Option<Unbounded>,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub abs_tol: f64,
    /// Integration stops once |y| exceeds this.
    #[arg(long, default_value_t = 1e12)]
    pub blowup: f64,
    #[arg(long, default_value_t = 2_000_000)]
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to a file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value_t = oscillation::classify::DEFAULT_MARGIN)]
    pub margin: f64,
    #[arg(long, default_value_t = oscillation::classify::DEFAULT_GRID)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Initial condition.
    #[arg(long, value_name = "X0,Y0,DY0", value_parser = parse_ic, allow_hyphen_values = true)]
    pub ic: (f64, f64, f64),
    /// End of the integration.
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    /// Work with y - psi_p for this particular solution.
    #[arg(long, value_name = "EXPR", allow_hyphen_values = true)]
    pub about: Option<String>,
    /// Resample on this many uniform points instead of the step nodes.
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ComparisonArgs {
    /// Larger normal-form coefficient.
    #[arg(long, default_value = "4", allow_hyphen_values = true)]
    pub q1: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub q2: String,
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    #[arg(long, value_name = "LO:HI", default_value = "0:20", value_parser = parse_window, allow_hyphen_values = true)]
    pub window: (f64, f64),
    /// Initial condition for the q1 equation (default: LO,0,1).
    #[arg(long, value_name = "X0,Y0,DY0", value_parser = parse_ic, allow_hyphen_values = true)]
    pub ic1: Option<(f64, f64, f64)>,
    /// Initial condition for the q2 equation (default: LO,0,1).
    #[arg(long, value_name = "X0,Y0,DY0", value_parser = parse_ic, allow_hyphen_values = true)]
    pub ic2: Option<(f64, f64, f64)>,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Zeros of the q1 solution separate those of the q2 solution.
    Sturm(ComparisonArgs),
    /// W' = (q1 - q2) y1 y2 for the comparison pair.
    Wronskian(ComparisonArgs),
    /// m = y'/y solves -m' = m^2 + b m + c.
    Riccati {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_name = "X0,Y0,DY0", value_parser = parse_ic, allow_hyphen_values = true)]
        ic: (f64, f64, f64),
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        /// Skip samples with |y| below this (default: 1e-3 max |y|).
        #[arg(long)]
        cutoff: Option<f64>,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// y = w u where u solves the normal form u'' + Q u = 0.
    NormalForm {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        window: WindowArgs,
        /// Initial condition (default: LO,1,0).
        #[arg(long, value_name = "X0,Y0,DY0", value_parser = parse_ic, allow_hyphen_values = true)]
        ic: Option<(f64, f64, f64)>,
        #[command(flatten)]
        tol: TolArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// List the built-in equations.
    List {
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Show one equation with its expected classification.
    Show {
        name: String,
        #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Classify and integrate entries against their expected pieces.
    Check {
        /// Entry to check (default: all).
        name: Option<String>,
        #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(format!("empty parameter name in `{s}`"));
    }
    Ok((name.to_string(), parse_number(value)?))
}

pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
    let (lo, hi) = (parse_number(lo)?, parse_number(hi)?);
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(format!("window needs LO < HI, got `{s}`"))
    }
}

pub fn parse_ic(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [x0, y0, dy0] => Ok((parse_number(x0)?, parse_number(y0)?, parse_number(dy0)?)),
        _ => Err(format!("expected X0,Y0,DY0, got `{s}`")),
    }
}
