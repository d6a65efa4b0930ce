use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A covariance or precision matrix failed Cholesky factorisation.
    #[error("matrix is not positive definite (pivot {pivot})")]
    Conditioning { pivot: usize },

    /// Adaptive quadrature stopped before reaching its tolerance.
    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// A Gibbs chain left the numerically sane region.
    #[error("chain diverged at sweep {sweep}: {reason}")]
    Diverged { sweep: usize, reason: String },

    /// A Gibbs chain produced a singular state.
    #[error("conditioning failure at sweep {sweep} (pivot {pivot})")]
    SweepConditioning { sweep: usize, pivot: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures that indicate numerical divergence of a chain rather
    /// than bad input.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Diverged { .. } | Error::SweepConditioning { .. })
    }
}
