use thiserror::Error;

#[derive(Debug, Error)]
pub enum StfError {
    #[error("not found or unreadable: {0}: {1}")]
    Io(String, String),
    #[error("failed to parse {0}")]
    Parse(String),
    #[error("unknown texture format for {0}")]
    UnknownFormat(String),
    #[error("zero-sized image")]
    ZeroSizedImage,
    #[error("unsupported channel count {0} (must be 1..=4)")]
    UnsupportedChannels(usize),
    #[error("data length mismatch: expected {expected}, got {got}")]
    DataLengthMismatch { expected: usize, got: usize },
    #[error("non-finite texel value")]
    NonFiniteTexel,

    #[error("lane {lane} out of range for wave of {lanes} lanes")]
    LaneOutOfRange { lane: usize, lanes: usize },
    #[error("wave shape {cols}x{rows} does not match {lanes} lanes")]
    BadWaveShape { cols: usize, rows: usize, lanes: usize },
    #[error("quad footprints require even wave dimensions, got {cols}x{rows}")]
    OddWaveShape { cols: usize, rows: usize },
    #[error("square footprint size {size} too large for {cols}x{rows} wave")]
    FootprintTooLarge { size: usize, cols: usize, rows: usize },
    #[error("read from inactive lane {0}")]
    InactiveLane(usize),
    #[error("invalid footprint table: {0}")]
    InvalidFootprint(String),

    #[error("noise mask dims must be powers of two <= 128, got {0}x{1}x{2}")]
    BadMaskDims(usize, usize, usize),

    #[error("footprint table does not match wave config")]
    FootprintWaveMismatch,
    #[error("image dimension mismatch")]
    DimensionMismatch,
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}
