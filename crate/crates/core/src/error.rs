use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("expected a field in {expected} representation, got {found}")]
    Representation {
        expected: &'static str,
        found: &'static str,
    },

    #[error("fields live on different lattices")]
    LatticeMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("envelope does not fit in the lattice: 1e-10 mass radius {radius:.3} sites exceeds L = {half_width}")]
    SupportViolation { radius: f64, half_width: usize },

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("odd number of vertices: r * n_bar = {0}")]
    OddVertexCount(usize),

    #[error("pairing has non-negligible imaginary part {imag:e} (real part {real:e})")]
    ImaginaryPairing { real: f64, imag: f64 },

    #[error("rejection sampler exhausted its budget of {0} proposals")]
    RejectionBudget(usize),

    #[error("time step too large: dt * max_rate = {0:.4} > 0.1")]
    TimeStepTooLarge(f64),

    #[error("estimate unreliable: relative standard error {0:.3}")]
    Unreliable(f64),

    #[error("degenerate standard error; increase the sample count")]
    DegenerateError,

    #[error("malformed field file: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
