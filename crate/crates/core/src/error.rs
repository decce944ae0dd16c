use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
///
/// Variants carry a human readable detail string; [`Error::kind`] gives the
/// stable machine-readable tag used in CLI reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("off-lattice value: {0}")]
    Lattice(String),
    #[error("frequency at or above the grid Nyquist limit: {0}")]
    Nyquist(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("resolvent requested at a point of the spectrum: {0}")]
    SingularResolvent(String),
    #[error("spectrum of the generator meets the imaginary axis: {0}")]
    SpectrumOnAxis(String),
    #[error("semigroup is not hyperbolic: {0}")]
    NotHyperbolic(String),
    #[error("contour quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("grid period too short for the Green kernel: {0}")]
    PeriodTooShort(String),
    #[error("right-hand side is not band-limited to the requested interval: {0}")]
    SpectrumMismatch(String),
    #[error("eigenvalue of the generator lies on the band contour: {0}")]
    SpectrumOnContour(String),
    #[error("grid resolution insufficient: {0}")]
    Resolution(String),
    #[error("Picard iteration failed to contract although the hypotheses hold: {0}")]
    ContractionViolation(String),
}

impl Error {
    /// Stable tag, e.g. `"NotHyperbolicError"`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Lattice(_) => "LatticeError",
            Error::Nyquist(_) => "NyquistError",
            Error::Parameter(_) => "ParameterError",
            Error::SingularResolvent(_) => "SingularResolventError",
            Error::SpectrumOnAxis(_) => "SpectrumOnAxisError",
            Error::NotHyperbolic(_) => "NotHyperbolicError",
            Error::Quadrature(_) => "QuadratureError",
            Error::PeriodTooShort(_) => "PeriodTooShortError",
            Error::SpectrumMismatch(_) => "SpectrumMismatchError",
            Error::SpectrumOnContour(_) => "SpectrumOnContourError",
            Error::Resolution(_) => "ResolutionError",
            Error::ContractionViolation(_) => "ContractionViolationError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
