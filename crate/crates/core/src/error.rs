use thiserror::Error;

/// Errors surfaced by the lattice, configuration, cluster and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} out of supported range 2..={max}", max = crate::lattice::MAX_DIM)]
    BadDimension(usize),

    #[error("point has {got} coordinates, ambient dimension is {want}")]
    DimensionMismatch { got: usize, want: usize },

    #[error("coordinate {0} outside the packable range |c| < 2^31")]
    CoordinateOverflow(i64),

    #[error("points {0:?} and {1:?} are not adjacent under the graph spec")]
    NotAdjacent(Vec<i64>, Vec<i64>),

    #[error("point {0:?} is not inside the requested region")]
    OutsideRegion(Vec<i64>),

    #[error("vertex budget must be >= 1 (got {0})")]
    BadBudget(u64),

    #[error("box of radius {radius} in dimension {dim} is too large to enumerate")]
    BoxTooLarge { radius: i64, dim: usize },

    #[error("scale parameter s must be >= 2 (got {0})")]
    BadScale(i64),

    #[error("s^d = {0} exceeds the coordinate bound")]
    ScaleOverflow(i64),

    #[error("cluster record region does not match the requested box")]
    RegionMismatch,

    #[error("cluster record is truncated; operation requires an untruncated exploration")]
    Truncated,

    #[error("empty support")]
    EmptySupport,

    #[error("invalid probability p = {0}")]
    BadProbability(f64),

    #[error("invalid tolerance {0}")]
    BadTolerance(f64),

    #[error("capacity solver did not converge: energy {energy}, duality gap {gap} after {iterations} iterations")]
    CapacityNoConvergence {
        energy: f64,
        gap: f64,
        iterations: usize,
    },

    #[error("exact enumeration limited to 24 edges (got {0})")]
    TooManyEdges(usize),

    #[error("log-log fit needs >= 3 points with positive values")]
    BadFitInput,

    #[error("no valid outward direction for segment at {0:?} (would exit the half-space)")]
    SegmentExitsHalfSpace(Vec<i64>),

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
