use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised while parsing binary PGM (P5) images.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("unsupported image format (magic {0:?}, expected \"P5\")")]
    UnsupportedFormat(String),
    #[error("malformed PGM header: {0}")]
    MalformedHeader(&'static str),
    #[error("unsupported maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u32),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

/// Errors raised while decoding a GMAP float map.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GmapError {
    #[error("bad magic, expected \"GMAP\"")]
    BadMagic,
    #[error("unsupported GMAP version {0}")]
    UnsupportedVersion(u8),
    #[error("length mismatch: expected {expected} bytes, found {found}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error(transparent)]
    Gmap(#[from] GmapError),
    #[error("invalid dimensions {width}x{height}: {reason}")]
    Dimensions {
        width: usize,
        height: usize,
        reason: &'static str,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rank-deficient basis (column {column})")]
    RankDeficient { column: usize },
    #[error("array length mismatch: {0}")]
    LengthMismatch(&'static str),
    #[error("infeasible payload: {requested} bits requested, capacity {capacity} bits")]
    InfeasiblePayload { requested: f64, capacity: f64 },
    #[error("payload could not be bracketed: {0}")]
    Unbracketable(&'static str),
    #[error("oracle error: {0}")]
    Oracle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
