use std::fmt;

use thiserror::Error;

/// A single failed density-matrix invariant together with its measured residual.
#[derive(Debug, Clone, PartialEq)]
pub enum StateViolation {
    /// ‖ρ − ρ†‖_F relative to ‖ρ‖_F.
    Hermiticity(f64),
    /// Measured trace.
    Trace(f64),
    /// Most negative eigenvalue.
    Negativity(f64),
}

impl fmt::Display for StateViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateViolation::Hermiticity(r) => write!(f, "hermiticity residual {r:e}"),
            StateViolation::Trace(t) => write!(f, "trace {t} differs from 1 by {:e}", (t - 1.0).abs()),
            StateViolation::Negativity(l) => write!(f, "minimum eigenvalue {l:e} is negative"),
        }
    }
}

fn join_violations(v: &[StateViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("hermiticity violation: ‖H − H†‖_F = {residual:e} exceeds {limit:e}")]
    NotHermitian { residual: f64, limit: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("invalid density matrix: {}", join_violations(.0))]
    InvalidState(Vec<StateViolation>),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid differencing step {0:e}: must lie in [1e-9, 1e-2]")]
    InvalidStep(f64),

    #[error("finite-difference step underflow: steps ε and 2ε disagree by relative {relative:e}")]
    StepUnderflow { relative: f64 },

    #[error("derivative leaves the support of the state: |⟨ψ{row}|∂ρ|ψ{col}⟩| = {magnitude:e} on a kernel pair")]
    InconsistentDerivative { row: usize, col: usize, magnitude: f64 },

    #[error("SLD equation residual {residual:e} exceeds {limit:e}")]
    SldResidual { residual: f64, limit: f64 },

    #[error("degenerate eigenvalue pair ({i}, {j}): |p_i − p_j| = {gap:e}")]
    Degenerate { i: usize, j: usize, gap: f64 },

    #[error("wrong spectral branch: rank {rank} of dimension {dim}; use the {expected} formula")]
    WrongBranch { rank: usize, dim: usize, expected: &'static str },

    #[error("imaginary residue {0:e} in a quantity that must be real")]
    ImaginaryResidue(f64),

    #[error("regret undefined for quantum Fisher information {0:e}")]
    UndefinedRegret(f64),

    #[error("classical Fisher information {cfi} exceeds quantum Fisher information {qfi}")]
    MonotonicityViolation { qfi: f64, cfi: f64 },

    #[error("incompatibility coefficient undefined: Fisher information ({0:e}, {1:e})")]
    UndefinedIncompatibility(f64, f64),

    #[error("incompatibility coefficient {0} exceeds 1")]
    IncompatibilityOutOfRange(f64),

    #[error("every measurement outcome has probability below the floor")]
    DegenerateMeasurement,

    #[error("negative square-root argument {0:e}")]
    NegativeSqrtArgument(f64),

    #[error("oracle unsupported: {0}")]
    OracleUnsupported(String),

    #[error("oracle linear solve residual {0:e} exceeds 1e-8")]
    OracleInconsistent(f64),

    #[error("neighbouring states are nearly orthogonal (overlap {0:e}); reduce the plaquette size")]
    NearOrthogonal(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
