use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("operation only supports d = 2, got d = {0}")]
    DimensionUnsupported(usize),
    #[error("all points coincide; no positive pairwise distance")]
    AllCoincident,
    #[error("bandwidth must be positive and finite, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("invalid kernel spec: {0}")]
    InvalidKernel(String),
    #[error("row {0} of the kernel matrix sums to zero (bandwidth too small)")]
    ZeroDegreeRow(usize),
    #[error("shape mismatch: operator is {operator}x{operator}, cloud has {rows} rows")]
    ShapeMismatch { operator: usize, rows: usize },
    #[error("diameter is zero; the cloud is already condensed")]
    DegenerateDiameter,
    #[error("delta too large: {0}")]
    DeltaTooLarge(String),
    #[error("merge radius {zeta} is not below the initial diameter {diameter}")]
    ZetaNotBelowDiameter { zeta: f64, diameter: f64 },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },
    #[error(
        "kernel has a zero entry; the Diaconis-Stroock bound needs a strictly positive kernel"
    )]
    ZeroKernelEntry,
    #[error("inconsistent pairing: vertex {0} absorbed twice")]
    InconsistentPairing(usize),
    #[error("input too large: {0}")]
    TooLarge(String),
    #[error("essential point counts differ: {left} vs {right}")]
    EssentialMismatch { left: usize, right: usize },
    #[error("tie detected at merge level {level}: argmin is not unique")]
    TieDetected { level: usize },
    #[error("dendrograms have different leaf sets: {left} vs {right} leaves")]
    LeafMismatch { left: usize, right: usize },
    #[error("bad dataset parameters: {0}")]
    BadParams(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }

    /// Strips step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
