//! Error type shared across the solver crates.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("mode index {index:?} out of range for grid resolution {resolution:?}")]
    ModeOutOfRange {
        index: Vec<usize>,
        resolution: Vec<usize>,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error(
        "operator multiplier is not finite at eigenvalue {lambda} (mode {index:?}); \
         project the field to zero mean or request mode-0 pass-through"
    )]
    MultiplierUndefined { lambda: f64, index: Vec<usize> },

    #[error("operation requires a zero-mean field (mode-0 coefficient {coeff})")]
    NotZeroMean { coeff: f64 },

    #[error("negative time {0} passed to the heat semigroup")]
    NegativeTime(f64),

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("matrix is not symmetric: entry ({i},{j}) = {aij} vs ({j},{i}) = {aji}")]
    NotSymmetric { i: usize, j: usize, aij: f64, aji: f64 },

    #[error(
        "detailed balance violated at ({i},{j}): |pi_i a_ij - pi_j a_ji| = {residual} \
         exceeds gate {gate}"
    )]
    DetailedBalance {
        i: usize,
        j: usize,
        residual: f64,
        gate: f64,
    },

    #[error(
        "coupling spectrum is not in the right half-plane: \
         smallest eigenvalue of (pi_i a_ij) is {c0} <= 0"
    )]
    SpectrumNotPositive { c0: f64 },

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("species {species}: density fell below tolerance {tol} (min value {min})")]
    NegativeDensity { species: usize, min: f64, tol: f64 },

    #[error(
        "species {species}: positivity clip moved {clipped:.3e} of mass \
         (limit {limit:.3e}); reduce the time step"
    )]
    PositivityFailure {
        species: usize,
        clipped: f64,
        limit: f64,
    },

    #[error("numerical blow-up {context}")]
    NumericalBlowup { context: String },

    #[error("time step underflow at t = {t} (dt = {dt}); the run cannot continue")]
    TimeStepUnderflow { t: f64, dt: f64 },

    #[error("per-species masses differ beyond {tol} relative: {detail}")]
    MassMismatch { tol: f64, detail: String },

    #[error(
        "absolute continuity failure for species {species}: \
         reference vanishes at node {node} where the density is {value}"
    )]
    AbsoluteContinuity {
        species: usize,
        node: usize,
        value: f64,
    },

    #[error("rate fit window [{a}, {b}] holds {found} samples; at least {need} required")]
    WindowTooSmall { a: f64, b: f64, found: usize, need: usize },

    #[error(
        "relative entropy is not positive inside the fit window (value {value} at t = {t}); \
         the trajectory has converged below the resolvable floor"
    )]
    ConvergedBelowFloor { t: f64, value: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("trajectories do not share {0}")]
    TrajectoryMismatch(String),
}
