use std::fmt::Write as _;
use std::fs;
use std::io::{ErrorKind, Write as _};

use oscillation::integrate::fmt17;
use serde::Serialize;

use crate::args::{Format, OutputArgs};
use crate::error::Failure;

/// Pretty JSON with a trailing newline. Non-finite numbers become `null`.
pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// The serialized name of a unit enum variant.
pub fn tag<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

/// Comma-separated table with a header row and LF line endings.
pub struct Csv {
    out: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Self { out }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for cell in cells {
            if !first {
                self.out.push(',');
            }
            first = false;
            self.out.push_str(cell.as_ref());
        }
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn num(v: f64) -> String {
    fmt17(v)
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

pub fn joined(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(';');
        }
        let _ = write!(s, "{}", fmt17(*v));
    }
    s
}

/// Writes the rendered body to `--output` or stdout.
pub fn emit(out: &OutputArgs, body: &str) -> Result<(), Failure> {
    match &out.output {
        Some(path) => fs::write(path, body)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout
                .write_all(body.as_bytes())
                .and_then(|_| stdout.flush())
            {
                Err(e) if e.kind() != ErrorKind::BrokenPipe => {
                    Err(Failure::Numeric(format!("cannot write output: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

/// Renders in the requested format, or the command's default.
pub fn render<J, C>(out: &OutputArgs, default: Format, as_json: J, as_csv: C) -> String
where
    J: FnOnce() -> String,
    C: FnOnce() -> String,
{
    match out.format.unwrap_or(default) {
        Format::Json => as_json(),
        Format::Csv => as_csv(),
    }
}
