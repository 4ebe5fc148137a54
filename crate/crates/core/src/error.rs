use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode count must be positive, got {0}")]
    InvalidModeCount(usize),

    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("covariance matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not symplectic (max deviation {0:e})")]
    NotSymplectic(f64),

    #[error("state violates the uncertainty principle (min symplectic eigenvalue {0})")]
    Unphysical(f64),

    #[error("symplectic eigenvalues do not pair up (gap {0:e})")]
    SpectrumPairing(f64),

    #[error("drift matrix is not Hurwitz (max Re eig = {0}); no steady state")]
    Unstable(f64),

    #[error("Lyapunov system is singular")]
    SingularSystem,

    #[error("integration produced a non-finite state at t = {0}")]
    NonFinite(f64),

    #[error("time grid must be non-empty, start at 0 and increase")]
    InvalidTimeGrid,

    #[error("unsupported: {0}")]
    Unsupported(&'static str),

    #[error("energy change is zero; efficiency undefined")]
    ZeroEnergyChange,

    #[error("trajectory has {0} points, need at least 3")]
    TrajectoryTooShort(usize),

    #[error("trajectory stays pure around t = {0}; speed is singular")]
    SingularSpeed(f64),

    #[error("trajectory did not reach the steady state within eps_ss = {eps_ss:e} by t = {horizon}")]
    NotConverged { eps_ss: f64, horizon: f64 },

    #[error("fidelity evaluation hit a singular matrix")]
    SingularFidelity,
}
