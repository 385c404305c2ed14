use locconv_core::Error;

use crate::gate_source::GateError;

/// Failure of a command, carrying its process exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Malformed input, unreadable file, bad flag value: exit 1.
    Input(String),
    /// Non-unitary gate matrix: exit 2.
    NotUnitary { residual: f64 },
    /// Conversion forbidden by the class order: exit 3.
    Infeasible { source_rank: usize, target_rank: usize },
    /// Any other failure of the core routines: exit 1.
    Core(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Core(_) => 1,
            CliError::NotUnitary { .. } => 2,
            CliError::Infeasible { .. } => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::NotUnitary { residual } => write!(
                f,
                "matrix is not unitary: residual {residual:.3e} exceeds {:.0e}",
                crate::gate_source::INPUT_UNITARY_TOL
            ),
            CliError::Infeasible { source_rank, target_rank } => write!(
                f,
                "infeasible conversion: source Choi Schmidt number {source_rank} is below the target's {target_rank}"
            ),
            CliError::Core(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<GateError> for CliError {
    fn from(e: GateError) -> Self {
        match e {
            GateError::Malformed(m) => CliError::Input(format!("malformed gate: {m}")),
            GateError::NotUnitary { residual } => CliError::NotUnitary { residual },
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Input(m) => CliError::Input(m),
            Error::NotUnitary { residual, .. } => CliError::NotUnitary { residual },
            Error::Infeasible { source_rank, target_rank } => CliError::Infeasible { source_rank, target_rank },
            other => CliError::Core(other.to_string()),
        }
    }
}
