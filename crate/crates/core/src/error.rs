use thiserror::Error;

#[derive(Debug, Error)]
pub enum PmnsError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field is not Hermitian-symmetric (max deviation {max_deviation:.3e}, scale {scale:.3e})")]
    SymmetryViolation { max_deviation: f64, scale: f64 },

    #[error("unsupported rescale factor {0}; only 2 and 1/2 map the lattice into itself")]
    UnsupportedRescale(f64),

    #[error("time {0} is not a knot of the trajectory")]
    NotAKnot(f64),

    #[error("point {0:?} is the singular point of the Landau field")]
    SingularPoint([f64; 3]),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "data too large for the contraction ball: data norm {data_norm:.6e} exceeds epsilon {epsilon:.6e} (1/(4 eta) = {threshold:.6e})"
    )]
    SmallnessViolated {
        data_norm: f64,
        epsilon: f64,
        threshold: f64,
    },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last increment {last_increment:.3e})")]
    NonConvergence {
        iterations: usize,
        last_increment: f64,
        ratios: Vec<f64>,
        ball_radius: f64,
    },

    #[error("ETD step rejected on [{t0}, {t1}]: local error estimate {estimate:.3e} exceeds budget {budget:.3e}")]
    StepRejected {
        t0: f64,
        t1: f64,
        estimate: f64,
        budget: f64,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PmnsError>;
