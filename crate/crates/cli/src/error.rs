use hodgeloc::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    /// A document or argument violates an invariant; `invariant` names the
    /// first one that failed.
    #[error("invalid input ({invariant}): {detail}")]
    Invalid { invariant: String, detail: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid(invariant: impl Into<String>, detail: impl ToString) -> CliError {
    CliError::Invalid {
        invariant: invariant.into(),
        detail: detail.to_string(),
    }
}

/// Process exit codes.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const CHECK_FAILED: u8 = 1;
    pub const INVALID_INPUT: u8 = 2;
    pub const UNDERFLOW: u8 = 3;
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Json(_) | CliError::Invalid { .. } => exit::INVALID_INPUT,
            CliError::Core(e) => core_exit_code(e),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            exit::UNDERFLOW => "numerical_underflow",
            exit::CHECK_FAILED => "check_failure",
            _ => "invalid_input",
        }
    }
}

fn core_exit_code(e: &CoreError) -> u8 {
    use CoreError::*;
    match e {
        Underflow(_) => exit::UNDERFLOW,
        Purity { .. }
        | NotMixed(_)
        | Bigrading(_)
        | DimensionPattern { .. }
        | ConeDisagreement(_)
        | NoRelativeFiltration(_)
        | NotDistributive(_)
        | NotGradingUnipotent(_)
        | Singular
        | DegenerateMetric
        | NotPositive
        | NoSolution(_)
        | Verification(_) => exit::CHECK_FAILED,
        Dimension(_)
        | FieldMismatch { .. }
        | NotNilpotent
        | NotUnipotent
        | InvalidFiltration(_)
        | InvalidGrading(_)
        | InvalidLattice(_)
        | NonCommuting(..)
        | ZeroVector
        | FlagType(_)
        | InvalidOrbit(_)
        | Truncation { .. }
        | NonpositiveTau(_)
        | NotCentered(_)
        | Regime(_)
        | InvalidRep(_)
        | Parse(_) => exit::INVALID_INPUT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_the_error_class() {
        assert_eq!(CliError::Core(CoreError::Underflow("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(CoreError::NotPositive).exit_code(), 1);
        assert_eq!(CliError::Core(CoreError::Parse("x".into())).exit_code(), 2);
        assert_eq!(invalid("Q", "not square").exit_code(), 2);
    }
}
