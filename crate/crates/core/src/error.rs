use thiserror::Error;

/// Coarse classification used by drivers to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input data.
    Config,
    /// A point, line or parameter lies outside the domain where an operation is defined.
    Domain,
    /// An iteration or quadrature failed to reach its tolerance.
    Convergence,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("series must vanish at origin")]
    SeriesNotVanishing,
    #[error("M(0) is singular: smallest singular value {sigma:.3e} below floor {floor:.3e}")]
    SingularLeading { sigma: f64, floor: f64 },
    #[error("Fourier expansion requires ε ≠ 0")]
    FourierNeedsEps,
    #[error("point {0} is on cut")]
    OnCut(String),
    #[error("pole of the time coordinate inverse at t = {0}")]
    TimePole(String),
    #[error("χ pole at ξ = {0}")]
    ChiPole(String),
    #[error("Beta pole: {0}")]
    BetaPole(String),
    #[error("√ε = {0} is not in the admissible sector S")]
    NotInSector(String),
    #[error("admissible direction interval is empty")]
    EmptyAdmissible,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("point outside strip: {0}")]
    OutsideStrip(String),
    #[error("x outside Z(√ε)")]
    OutsideZ,
    #[error("Ω intersects spectrum: eigenvalue {0}")]
    OmegaIntersectsSpectrum(String),
    #[error("direction mismatch between line functions")]
    DirectionMismatch,
    #[error("grid mismatch between line functions: {0}")]
    GridMismatch(String),
    #[error("required offset line missing: {0}")]
    MissingOffset(String),
    #[error("extrapolation outside the offset hull: {0}")]
    Extrapolation(String),
    #[error("non-finite sample at u = {0}")]
    NonFinite(String),
    #[error("norm infinite: {0}")]
    NormInfinite(String),
    #[error("resonant ε: {0}")]
    ResonantEps(String),
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("not contractive at this (Λ, ρ): rate {rate:.3} ({hint})")]
    NotContractive { rate: f64, hint: String },
    #[error("fixed point iteration did not reach tolerance after {iterations} iterations (last difference {last_diff:.3e})")]
    NoConvergence { iterations: usize, last_diff: f64 },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidInput(_) | SeriesNotVanishing | SingularLeading { .. } | FourierNeedsEps
            | DirectionMismatch | GridMismatch(_) | MissingOffset(_) | Precondition(_) => {
                ErrorKind::Config
            }
            OnCut(_) | TimePole(_) | ChiPole(_) | BetaPole(_) | NotInSector(_) | EmptyAdmissible
            | OutsideStrip(_) | OutsideZ | OmegaIntersectsSpectrum(_) | Extrapolation(_)
            | NonFinite(_) | ResonantEps(_) | SingularMatrix(_) => ErrorKind::Domain,
            NormInfinite(_) | Quadrature(_) | NotContractive { .. } | NoConvergence { .. } => {
                ErrorKind::Convergence
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
