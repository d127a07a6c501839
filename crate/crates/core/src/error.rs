use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("polyline needs at least 2 distinct consecutive points, got {0}")]
    DegenerateLine(usize),
    #[error("distance {distance_m} m is outside the line (length {length_m} m)")]
    DistanceOutOfRange { distance_m: f64, length_m: f64 },
    #[error("invalid polygon ring: {0}")]
    InvalidRing(&'static str),
    #[error("polygon crosses the antimeridian")]
    AntimeridianCrossing,
    #[error("way {way_id} references missing node {node_id}")]
    MissingNode { way_id: i64, node_id: i64 },
    #[error("way {way_id} has {count} node references, at least 2 required")]
    TooFewNodes { way_id: i64, count: usize },
    #[error("way {way_id} is degenerate ({length_m:.3} m long, minimum 1 m)")]
    DegenerateWay { way_id: i64, length_m: f64 },
    #[error("target segment length must be positive and finite, got {0}")]
    InvalidTarget(f64),
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("design matrix is rank deficient: column `{column}` is collinear with earlier columns")]
    RankDeficient { column: String },
    #[error("factor `{factor}` has no value for row {row}")]
    MissingFactor { factor: String, row: usize },
    #[error("unseen level `{level}` for factor `{factor}`")]
    UnseenLevel { factor: String, level: String },
    #[error("need at least 5 distinct incomes for quintiles, got {0}")]
    TooFewDistinct(usize),
    #[error("value out of range: {0}")]
    OutOfRange(&'static str),
}
