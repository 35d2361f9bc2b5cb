use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The input describes an invalid object (bad set, bad grid, bad file contents).
    Validation,
    /// A well-formed input violates a precondition of the requested operation.
    Precondition,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window [{lo}, {hi}]: need finite lo < hi")]
    InvalidWindow { lo: f64, hi: f64 },

    #[error("component ({lo}, {hi}) is empty or not finite")]
    EmptyComponent { lo: f64, hi: f64 },

    #[error("component ({lo}, {hi}) lies outside the window [{w0}, {w1}]")]
    OutsideWindow { lo: f64, hi: f64, w0: f64, w1: f64 },

    #[error("components ({a0}, {b0}) and ({a1}, {b1}) overlap or are out of order")]
    Overlap { a0: f64, b0: f64, a1: f64, b1: f64 },

    #[error(
        "components ({a0}, {b0}) and ({a1}, {b1}) share the endpoint {b0}; \
         condition violated: distinct components of G never share an endpoint (F has no isolated points)"
    )]
    SharedEndpoint { a0: f64, b0: f64, a1: f64, b1: f64 },

    #[error("F would contain the isolated point {x}; condition violated: F has no isolated points")]
    IsolatedPoint { x: f64 },

    #[error("invalid tail declaration: {0}")]
    InvalidTails(String),

    #[error("invalid period {period}: {reason}")]
    InvalidPeriod { period: f64, reason: &'static str },

    #[error("depth {depth} exceeds the maximum {max}")]
    DepthTooLarge { depth: u32, max: u32 },

    #[error("the {side} tail is undeclared; cannot evaluate at {x} outside the window")]
    UndeclaredTail { side: &'static str, x: f64 },

    #[error("the boundary case needs both tails declared")]
    TailsRequired,

    #[error("{what} = {value} lies outside {lo}..{hi}")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("darning anchor {z} lies in G; condition violated: anchor must be a point of F \\ H")]
    AnchorInG { z: f64 },

    #[error("darning anchor {z} is a component endpoint; condition violated: anchor must be a point of F \\ H")]
    AnchorInH { z: f64 },

    #[error("no point of F \\ H lies in the window")]
    NoAnchor,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid is not adapted to the set: {0}")]
    NotAdapted(String),

    #[error("grids live on different domains [{a0}, {a1}] and [{b0}, {b1}]")]
    IncompatibleGrids { a0: f64, a1: f64, b0: f64, b1: f64 },

    #[error("function is not constant on the closed component [{lo}, {hi}]; condition violated: u' = 0 a.e. on G")]
    NotConstantOnComponent { lo: f64, hi: f64 },

    #[error("function is not in the regular subspace: slope {slope} on the F-cell [{lo}, {hi}]; condition violated: u' = 0 a.e. on F")]
    NotInSubspace { lo: f64, hi: f64, slope: f64 },

    #[error("function does not vanish on F (value {value} at {x}); condition violated: u = 0 on F")]
    NotVanishingOnF { x: f64, value: f64 },

    #[error("function is not in the orthogonal complement; condition violated: u' constant a.e. on G ({0})")]
    NotInComplement(String),

    #[error("function is not harmonic off F: slopes differ on the component ({lo}, {hi})")]
    NotHarmonic { lo: f64, hi: f64 },

    #[error("trace function is not in the trace subspace: local energy {local} on F")]
    NotInTraceSubspace { local: f64 },

    #[error("trace function is missing a value at the component endpoint {x}")]
    MissingEndpoint { x: f64 },

    #[error("trace node {x} lies in G")]
    TraceNodeInG { x: f64 },

    #[error("component index {index} refers to an unbounded component")]
    InfiniteComponent { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported source measure: {0}")]
    UnsupportedSource(String),

    #[error("invalid speed measure: {0}")]
    InvalidSpeed(String),

    #[error("atoms at {p0} and {p1} snap to the same grid node; decrease h")]
    AtomCollision { p0: f64, p1: f64 },

    #[error("the map collapses the whole window to a point; there is no carrier to walk on")]
    DegenerateCarrier,

    #[error("starting point {x} lies in F; condition violated: start inside a finite component of G")]
    StartInF { x: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io(_) => ErrorKind::Io,
            Csv(e) if e.is_io_error() => ErrorKind::Io,
            InvalidWindow { .. }
            | EmptyComponent { .. }
            | OutsideWindow { .. }
            | Overlap { .. }
            | SharedEndpoint { .. }
            | IsolatedPoint { .. }
            | InvalidTails(_)
            | InvalidPeriod { .. }
            | DepthTooLarge { .. }
            | InvalidGrid(_)
            | InvalidSpeed(_)
            | Csv(_)
            | Json(_) => ErrorKind::Validation,
            _ => ErrorKind::Precondition,
        }
    }
}
