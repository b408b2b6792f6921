use alloc::string::String;

/// Errors raised by the core model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A site, field or contour is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A height violates the floor or ceiling of the model.
    #[error("constraint violated at site index {site}: height {height} not in [{lo}, {hi}]")]
    Constraint {
        site: usize,
        height: i64,
        lo: i64,
        hi: i64,
    },
    /// Invalid model parameters.
    #[error("invalid parameter: {0}")]
    Param(String),
    /// The requested enumeration does not fit under the cap.
    #[error("state space of {required} states exceeds enumeration cap {cap}")]
    Resource { required: u128, cap: u128 },
    /// Conditioning on an event of zero probability.
    #[error("conditioning event has zero mass")]
    ZeroMass,
    /// Operation used outside its contract.
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = core::result::Result<T, Error>;
