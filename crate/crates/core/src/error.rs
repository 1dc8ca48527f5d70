use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate geometry at slot {slot}: UAV co-located with the ground user")]
    DegenerateGeometry { slot: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no usable slots in the predicted horizon")]
    NoUsableSlots,

    #[error("infeasible codec profile: {0}")]
    Profile(String),

    #[error("malformed block manifest: {0}")]
    Manifest(String),

    #[error("block {block}: declared length {expected} but payload holds {actual} samples")]
    LengthMismatch {
        block: String,
        expected: usize,
        actual: usize,
    },

    #[error("grid cell ({row}, {col}) outside the {grid}x{grid} texture grid")]
    GridIndex { row: usize, col: usize, grid: usize },

    #[error("inconsistent reception: {0}")]
    Consistency(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
