use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("self-interaction requested: Green's tensor is singular at R = 0")]
    SelfInteraction,
    #[error("Wood-anomaly degenerate point: |q+g|² = k² within tolerance (order {order:?})")]
    WoodAnomaly { order: (i64, i64) },
    #[error("lattice sum did not converge: {0}")]
    NonConvergent(String),
    #[error("mirrors overlap: cavity length {ell} must exceed mirror spacing {ell_m}")]
    MirrorsOverlap { ell: f64, ell_m: f64 },
    #[error("driven at complex resonance (denominator {0:e})")]
    AtPole(f64),
    #[error("degenerate 0/0 point: {0}")]
    Degenerate(String),
    #[error("resonance at infinite detuning (cos(kℓ) = 0)")]
    InfiniteResonance,
    #[error("basis mismatch in composition")]
    BasisMismatch,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("basis matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),
    #[error("resonant scatterer has no length-shift interpretation")]
    ResonantScatterer,
    #[error("zero transmission at the reference length")]
    ZeroTransmission,
    #[error("ω_c = 0: model degenerate")]
    DegenerateModel,
    #[error("singular system matrix (condition estimate {0:e})")]
    Singular(f64),
    #[error("time step {dt} exceeds stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("instability detected at t = {0}")]
    Unstable(f64),
    #[error("point coincides with an emitter")]
    OnEmitter,
    #[error("insensitive quadrature: mean cos δφ vanishes")]
    InsensitiveQuadrature,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
