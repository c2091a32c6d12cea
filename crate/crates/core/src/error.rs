use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vertex set must be nonempty")]
    EmptySet,

    #[error("unknown energy-measure part `{0}` (expected a, b or d)")]
    UnknownPart(String),

    #[error("inadmissible anchors {first} and {second}: value gap {gap} exceeds distance {dist}")]
    InadmissibleAnchors {
        first: usize,
        second: usize,
        gap: f64,
        dist: f64,
    },

    #[error("vector must be nonzero")]
    ZeroVector,

    #[error("function must be strictly positive, found {value} at vertex {vertex}")]
    NonPositive { vertex: usize, value: f64 },

    #[error("test function support leaves the interior at vertex {0}")]
    SupportOutsideInterior(usize),

    #[error("operation requires a lattice model")]
    NotLattice,

    #[error("operation requires lattice coordinates on the graph")]
    MissingCoordinates,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("shells exhaust window after {0} shell(s); need at least 3")]
    ShellsExhausted(usize),

    #[error("no admissible shell index: every B_(2a+s)(E_n) leaves the interior")]
    NoAdmissibleShell,

    #[error("linear algebra failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
