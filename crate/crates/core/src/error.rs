use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {error_estimate:e})")]
    NonConvergence {
        subdivisions: usize,
        error_estimate: f64,
    },

    #[error("integrator failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("expression is singular at r = {r}")]
    Singularity { r: f64 },

    #[error("boundary-condition system is singular")]
    SingularSystem,

    #[error("trajectories are sampled on different grids")]
    GridMismatch,

    #[error("threshold not reached for t_f <= {t_max}")]
    NotReached { t_max: f64 },
}

pub(crate) fn check_unit(what: &'static str, r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::Domain { what, value: r })
    }
}
