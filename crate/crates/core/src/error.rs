use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the numerical modules.
///
/// Variants fall in two classes: configuration problems (bad input that the
/// caller can fix) and numerical failures (the computation ran but could not
/// produce a trustworthy answer). [`Error::is_config`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("interlayer coupling G = 0: hybridization angles are undefined where f(k) = 0")]
    DegenerateHybridization,

    #[error("no middle band gap for eta = {eta}, G = {g}")]
    NoGap { eta: f64, g: f64 },

    #[error("z = {z} lies inside a band (gap edge {edge}); the self-energy is not real there")]
    PrincipalValue { z: f64, edge: f64 },

    #[error("no inner-gap bound state: pole function has no sign change on ({lo}, {hi})")]
    NoBoundState { lo: f64, hi: f64 },

    #[error(
        "no in-gap eigenstate with emitter weight > 0.5; best candidates (E, weight): {candidates:?}"
    )]
    HybridizationFailure { candidates: Vec<(f64, f64)> },

    #[error("coupling points are not mutually even-neighbor: {0}")]
    ParityViolation(String),

    #[error("phase decomposition failed: {0}")]
    Decomposition(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("spectrum is gapless on the sampling grid (minimum gap {min_gap:e})")]
    Gapless { min_gap: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("no fidelity maximum before t = {t_limit}")]
    ProtocolFailure { t_limit: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// `true` for input problems, `false` for numerical failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::ParityViolation(_) | Error::GeometryMismatch(_))
    }

    /// Short machine-readable tag for the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::DegenerateHybridization => "degenerate_hybridization",
            Error::NoGap { .. } => "no_gap",
            Error::PrincipalValue { .. } => "principal_value",
            Error::NoBoundState { .. } => "no_bound_state",
            Error::HybridizationFailure { .. } => "hybridization_failure",
            Error::ParityViolation(_) => "parity_violation",
            Error::Decomposition(_) => "decomposition",
            Error::Resolution(_) => "resolution",
            Error::GeometryMismatch(_) => "geometry_mismatch",
            Error::Gapless { .. } => "gapless",
            Error::Integration(_) => "integration",
            Error::ProtocolFailure { .. } => "protocol_failure",
            Error::LinearAlgebra(_) => "linear_algebra",
        }
    }
}
