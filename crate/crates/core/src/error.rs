use thiserror::Error;

/// Errors raised by the forward model, the inverter and the signal chain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of a physical relation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Snell's law admits no real refracted angle.
    #[error("total internal reflection: n_in * sin(theta_in) / n_out = {ratio}")]
    TotalInternalReflection { ratio: f64 },

    /// No ray through the stack lands on the requested reflector.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Fewer scalar residuals than unknowns.
    #[error("under-determined system: {residuals} residuals for {unknowns} unknowns")]
    UnderDetermined { residuals: usize, unknowns: usize },

    /// No multi-start run met the convergence criteria.
    #[error("solver did not converge after {starts} starts (best residual norm {best_residual_norm} ns)")]
    NonConvergence { starts: usize, best_residual_norm: f64, best_effort: crate::inverse::UnknownVector },

    /// A result was used that did not converge.
    #[error("refusing to use a non-converged estimate")]
    NotConverged,

    /// Echo delay outside the unambiguous span of the sweep.
    #[error("echo delay {delay_ns} ns outside unambiguous span [0, {span_ns}) ns")]
    Aliased { delay_ns: f64, span_ns: f64 },

    /// Two sweeps that must share a frequency grid do not.
    #[error("sweep configuration mismatch: {0}")]
    ConfigMismatch(String),

    /// No peak strong enough inside the search window.
    #[error("no detection: {0}")]
    NoDetection(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
