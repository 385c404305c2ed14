use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed caller input (unknown gate name, out-of-range parameter, bad shape).
    #[error("invalid input: {0}")]
    Input(String),

    /// Operator or gate failed the unitarity check.
    #[error("matrix is not unitary (residual {residual:.3e} > {tolerance:.1e})")]
    NotUnitary { residual: f64, tolerance: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An iterative kernel did not reach its target accuracy.
    #[error("numerical failure in {context} (residual {residual:.3e})")]
    Numerical { context: &'static str, residual: f64 },

    /// A two-qubit gate produced a Choi Schmidt number of 3, which cannot happen
    /// for exact arithmetic; usually a badly chosen rank tolerance.
    #[error("impossible Schmidt number 3 for a two-qubit gate, spectrum {spectrum:?}")]
    ImpossibleRank { spectrum: Vec<f64> },

    /// Conversion from a gate of Schmidt number `source` to one of `target` violates
    /// the convertibility condition source >= target.
    #[error("infeasible conversion: source Schmidt number {source_rank} < target Schmidt number {target_rank}")]
    Infeasible { source_rank: usize, target_rank: usize },

    #[error("register too large: {0} amplitudes (max 256)")]
    RegisterTooLarge(usize),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    /// Measurement basis or filter fails orthonormality / completeness.
    #[error("incomplete measurement: {0}")]
    IncompleteMeasurement(String),

    /// A protocol would consume the resource gate more than once.
    #[error("resource gate used {0} times; protocols may use it once")]
    ResourceOveruse(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
