//! Error type shared by every module in the crate.

use alloc::string::String;

/// Everything that can go wrong across the crate.
///
/// Variants split into two broad families: contract violations (bad qubit
/// indices, malformed text, mismatched dimensions) and numerical failures
/// (non-convergence, underflow, shot starvation). The CLI maps the first
/// family to exit code 2 and the second to exit code 3.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("qubit count {0} exceeds the supported maximum of {1}")]
    TooManyQubits(usize, usize),

    #[error("control and target qubits coincide (qubit {0})")]
    DuplicateQubit(usize),

    #[error("amplitude vector length {0} is not a power of two")]
    BadDimension(usize),

    #[error("state norm {0} differs from 1 beyond tolerance")]
    NotNormalized(f64),

    #[error("empty keep set or keep set not a strict subset of qubits")]
    BadKeepSet,

    #[error("shots must be positive")]
    ZeroShots,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("hamiltonian text contains no terms")]
    EmptyHamiltonian,

    #[error("pauli strings have mismatched qubit counts ({0} vs {1})")]
    MixedStringLength(usize, usize),

    #[error("chain length {0} is too short (need at least 2 sites)")]
    ChainTooShort(usize),

    #[error("moment order {0} exceeds the supported maximum of {1}")]
    MomentOrderTooLarge(usize, usize),

    #[error("gate {0} carries no parameter")]
    GateNotParameterized(String),

    #[error("gate {0} requires an angle but none was supplied")]
    MissingAngle(String),

    #[error("parameter slot {0} out of range for {1} parameters")]
    ParamOutOfRange(usize, usize),

    #[error("parameter slots must cover 0..{expected} exactly once; slot {slot} {problem}")]
    BadParamSlots {
        expected: usize,
        slot: usize,
        problem: &'static str,
    },

    #[error("theta has length {0} but the circuit declares {1} parameters")]
    ThetaLengthMismatch(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max asymmetry {0})")]
    NotHermitian(f64),

    #[error("density matrix invalid: {0}")]
    BadDensityMatrix(String),

    #[error("eigensolver failed to converge after {0} sweeps")]
    EigenNoConverge(usize),

    #[error("trajectory energy rate never settles below the threshold; final rate {0}")]
    NotConverged(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("measured overlap is zero or negative; increase shots")]
    ShotStarvation,

    #[error("{0} must be positive (got {1})")]
    NonPositive(&'static str, f64),

    #[error("measurement pairs overlap or fall outside the register")]
    BadPairs,
}

impl Error {
    /// True for failures of the numerics rather than of the call contract.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNoConverge(_)
                | Error::NotConverged(_)
                | Error::Numerical(_)
                | Error::ShotStarvation
        )
    }
}
