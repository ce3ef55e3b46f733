use thiserror::Error;

/// Errors shared by every module in this crate.
///
/// Numeric payloads are carried as `f64` regardless of the working scalar
/// type so the enum stays object-simple.
#[derive(Debug, Clone, Error)]
pub enum FracError {
    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Gamma argument beyond the overflow guard.
    #[error("gamma overflow: z = {z} exceeds {limit}")]
    GammaOverflow { z: f64, limit: f64 },
    /// Grid has too few nodes for the stencil.
    #[error("grid too small: {count} nodes, need at least {min}")]
    GridTooSmall { count: usize, min: usize },
    /// The operation integrates from 0 and needs the grid to start there.
    #[error("grid lower terminal must be 0, got {0}")]
    NonZeroTerminal(f64),
    /// Spectral operations need a power-of-two node count.
    #[error("grid count {0} is not a power of two")]
    NotPowerOfTwo(usize),
    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// Axis/component counts disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A series or iteration failed to converge.
    #[error("nonconvergence: {0}")]
    NonConvergence(String),
    /// Explicit time step exceeds the advective stability bound.
    #[error("stability bound violated: dt = {dt} exceeds {bound}")]
    StabilityViolation { dt: f64, bound: f64 },
    /// A NaN appeared during time stepping.
    #[error("NaN detected at step {step}")]
    NanAbort { step: usize },
    /// A precondition gate (boundary-vanishing check) failed.
    #[error("boundary gate failed: {0}")]
    BoundaryGate(String),
    /// Reduction was asked to keep no particles.
    #[error("empty keep set for reduction")]
    EmptyKeep,
    /// Field values must stay finite.
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, FracError>;
