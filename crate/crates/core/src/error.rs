use thiserror::Error;

/// Errors returned by the simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate spectrum: smallest level gap {gap:.3e} rad/ns")]
    DegenerateSpectrum { gap: f64 },

    #[error("no sweet spot found in detuning bracket [{lo:.4}, {hi:.4}] rad/ns")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("pulse area must be positive, got {0}")]
    NonPositiveArea(f64),

    #[error("unknown gate family `{0}`")]
    UnknownFamily(String),

    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    #[error("cutoffs out of order: omega_ir = {ir:.4e}, omega_uv = {uv:.4e}")]
    CutoffOrder { ir: f64, uv: f64 },

    #[error("time step {dt:.4e} ns does not resolve omega_uv; need dt <= {max:.4e} ns")]
    Resolution { dt: f64, max: f64 },

    #[error("trace too short for spectral estimate: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("density matrix lost positivity: smallest eigenvalue {min_eigenvalue:.3e}")]
    PositivityViolation { min_eigenvalue: f64 },

    #[error("density matrix trace drifted to {trace:.12}")]
    TraceDrift { trace: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error stems from a numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence(_)
                | Error::PositivityViolation { .. }
                | Error::TraceDrift { .. }
                | Error::NoRootInBracket { .. }
                | Error::DegenerateSpectrum { .. }
        )
    }
}
