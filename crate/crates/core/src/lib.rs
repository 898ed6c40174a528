pub mod distractor;
pub mod error;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod image;
pub mod keyfilter;
pub mod numeric;
pub mod scale;
pub mod solver;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::{BoundingBox, SearchGrid};
pub use image::{Image, ImagePatch};
pub use numeric::{FeatureTensor, LabelMap, Map2D, ResponseMap, SpectrumTensor};
