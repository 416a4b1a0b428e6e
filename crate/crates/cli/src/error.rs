use std::fmt;

use oscillation::catalog::CatalogError;
use oscillation::classify::ClassifyError;
use oscillation::expr::{EvalError, ParseError};
use oscillation::integrate::SolveError;
use oscillation::ode::{OdeError, SpecError};
use oscillation::verify::VerifyError;

pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// A command that could not produce its report.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: malformed expressions, unknown names, inconsistent options.
    Usage(String),
    /// The numerics broke down on valid input.
    Numeric(String),
    /// A check rejected its input outright.
    Rejected(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Numeric(_) => EXIT_NUMERIC,
            Failure::Rejected(_) => EXIT_FAILED,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) | Failure::Rejected(m) => f.write_str(m),
        }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Unbound(_) => Failure::Usage(e.to_string()),
            EvalError::Domain(_) => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<ClassifyError> for Failure {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::AllInvalid => Failure::Numeric(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Tolerance { .. }
            | SolveError::NonFiniteInitial
            | SolveError::SingularPoint { .. }
            | SolveError::OutsideSpan { .. } => Failure::Usage(e.to_string()),
            SolveError::StepUnderflow { .. }
            | SolveError::Domain { .. }
            | SolveError::TooManySteps { .. } => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<OdeError> for Failure {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::SingularPath { .. } => Failure::Usage(e.to_string()),
            OdeError::Domain { .. } => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Solve(inner) => inner.into(),
            VerifyError::Ode(inner) => inner.into(),
            VerifyError::Spec(inner) => inner.into(),
            VerifyError::NotParticular { .. } => Failure::Rejected(e.to_string()),
            VerifyError::AllExcluded | VerifyError::Domain { .. } => {
                Failure::Numeric(e.to_string())
            }
            VerifyError::Hypothesis { .. }
            | VerifyError::TrivialInitial
            | VerifyError::NotHomogeneous
            | VerifyError::BadCutoff(_)
            | VerifyError::Unbound(_) => Failure::Usage(e.to_string()),
        }
    }
}
