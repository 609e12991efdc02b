use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension must be in 1..={max}, got {n}")]
    DimensionOutOfRange { n: u32, max: u32 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: u32, right: u32 },
    #[error("mask {mask:#x} has bits outside the {n} coordinates")]
    MaskOutOfRange { mask: u64, n: u32 },
    #[error("coordinate {coord} outside 1..={n}")]
    CoordinateOutOfRange { coord: u32, n: u32 },
    #[error("layer index {r} exceeds dimension {n}")]
    LayerOutOfRange { r: u32, n: u32 },
    #[error("expected a {expected}-subset, got one of size {actual}")]
    WrongSubsetSize { expected: u32, actual: u32 },
    #[error("subsets must have equal size: {left} vs {right}")]
    SizeMismatch { left: u32, right: u32 },
    #[error("rank {rank} out of range: the layer has {size} sets")]
    RankOutOfRange { rank: String, size: String },
    #[error("segment length {len} exceeds {max}")]
    SegmentTooLong { len: String, max: String },
    #[error("family size {m} lies outside band {i}")]
    BandMismatch { m: String, i: u32 },
    #[error("not a subset: some member lies outside the enclosing set")]
    NotASubset,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scale limit exceeded: {0}")]
    ScaleLimit(String),
    #[error("infeasible construction: {0}")]
    Infeasible(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
