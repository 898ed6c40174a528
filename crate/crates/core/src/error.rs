use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize, usize),
        right: (usize, usize, usize),
    },
    #[error("inverse DFT left an imaginary residue of {residue:e} (real norm {real_norm:e})")]
    ImaginaryResidueTooLarge { residue: f64, real_norm: f64 },
    #[error("bounding box has non-positive or non-finite extent")]
    EmptyBox,
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("color-name table not found at {0}")]
    MissingTable(PathBuf),
    #[error("malformed color-name table: {0}")]
    BadTable(String),
    #[error("color-name features need a 3-channel patch")]
    GrayInput,
    #[error("response map is all zero or non-finite")]
    DegenerateResponse,
    #[error("keyfilter pool is empty")]
    EmptyPool,
    #[error("non-finite ADMM iterate at frame {frame}, iteration {iteration}")]
    NonFiniteIterate { frame: usize, iteration: usize },
    #[error("degenerate box for scale estimation")]
    DegenerateBox,
    #[error("invalid initial box")]
    BadBox,
    #[error("tracking failed at frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("no ground-truth file in {0}")]
    MissingGroundTruth(PathBuf),
    #[error("{frames} frames but {boxes} ground-truth boxes")]
    CountMismatch { frames: usize, boxes: usize },
    #[error("cannot read image {path}: {reason}")]
    UnreadableImage { path: PathBuf, reason: String },
    #[error("bad ground-truth line {line}: {text:?}")]
    BadGroundTruth { line: usize, text: String },
    #[error("bad synthetic spec: {0}")]
    BadSpec(String),
    #[error("empty series")]
    EmptySeries,
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_frame(self, frame: usize) -> Error {
        match self {
            e @ Error::Frame { .. } => e,
            e => Error::Frame {
                frame,
                source: Box::new(e),
            },
        }
    }
}
