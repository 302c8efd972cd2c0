use thiserror::Error;

/// Errors produced by the numeric kernels and physics layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("grid half-width must be positive and finite, got {0}")]
    BadGridWidth(f64),
    #[error("grid too narrow: {0}")]
    GridTooNarrow(String),
    #[error("grid too coarse: {got} points, need at least {need}")]
    GridTooCoarse { got: usize, need: usize },
    #[error("point {x} lies outside the grid [{min}, {max}]")]
    OutOfGrid { x: f64, min: f64, max: f64 },
    #[error("domain [{a}, {b}] is not covered by the sampled range [{min}, {max}]")]
    DomainNotCovered { a: f64, b: f64, min: f64, max: f64 },
    #[error("sample count {got} does not match grid size {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("sampled amplitudes have zero norm")]
    ZeroNorm,
    #[error("sampled amplitudes break inversion symmetry: relative asymmetry {0:.3e} exceeds 1e-6")]
    AsymmetricPsf(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("measure weight is negative at a grid point ({0:.3e})")]
    NegativeWeight(f64),
    #[error("measure weight breaks inversion symmetry (residual {0:.3e})")]
    AsymmetricWeight(f64),
    #[error("measure mass {0} deviates from unity by more than 1e-9")]
    NonUnitMass(f64),
    #[error("requested degree {0} exceeds the stability cap of 60")]
    DegreeCap(usize),
    #[error("recurrence unstable at degree {degree}: {reason}")]
    Unstable { degree: usize, reason: String },
    #[error("mode set holds continuum modes; Gram matrix is undefined")]
    ContinuumModes,
    #[error("momentum grids of the PSF and the mode set do not match")]
    IncompatibleGrid,
    #[error("plane-wave channel Fisher information requires the sinc PSF")]
    NonSincPsf,
    #[error("negative probability {0:.3e} in detection channel")]
    NegativeProbability(f64),
    #[error("{percent:.1}% of trials ended at the estimator bracket boundary (limit 10%)")]
    BracketBoundary { percent: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("csv error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
