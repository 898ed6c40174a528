//! Hand-crafted feature stack: gray, HOG and color names on a cell grid.

pub mod colornames;
pub mod hog;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{Image, ImagePatch};
use crate::numeric::{cosine_window, FeatureTensor};

pub use colornames::{extract_color_names, ColorNameTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub cell_size: usize,
    pub hog_orientations: usize,
    pub use_color_names: bool,
    pub window: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            cell_size: 4,
            hog_orientations: 9,
            use_color_names: true,
            window: true,
        }
    }
}

/// HOG features of a patch.
pub fn extract_hog(patch: &ImagePatch, cfg: &FeatureConfig) -> Result<FeatureTensor> {
    hog::extract_hog(&patch.pixels, cfg.cell_size, cfg.hog_orientations)
}

/// Zero-centred mean luminance per cell.
pub fn extract_gray(img: &Image, cell: usize) -> Result<FeatureTensor> {
    let (w, h) = (img.width(), img.height());
    if cell == 0 || w < cell || h < cell || w % cell != 0 || h % cell != 0 {
        return Err(Error::BadGeometry(format!("{w}x{h} patch with {cell}-pixel cells")));
    }
    let gray = img.to_gray();
    let (rows, cols) = (h / cell, w / cell);
    let mut out = FeatureTensor::zeros(rows, cols, 1).with_cell_size(cell);
    let norm = 1.0 / (cell * cell) as f64;
    for y in 0..h {
        for x in 0..w {
            let (r, c) = (y / cell, x / cell);
            let cur = out.get(r, c, 0);
            out.set(r, c, 0, cur + gray.get(x, y, 0) as f64 * norm);
        }
    }
    out.data_mut().iter_mut().for_each(|v| *v -= 0.5);
    Ok(out)
}

/// Builds windowed feature tensors from patches. Cheap to clone.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub config: FeatureConfig,
    table: Arc<ColorNameTable>,
}

impl FeatureExtractor {
    pub fn new(config: FeatureConfig) -> Self {
        FeatureExtractor {
            config,
            table: Arc::new(ColorNameTable::shipped().clone()),
        }
    }

    pub fn with_table_file(config: FeatureConfig, path: &Path) -> Result<Self> {
        Ok(FeatureExtractor {
            config,
            table: Arc::new(ColorNameTable::load(path)?),
        })
    }

    pub fn table(&self) -> &ColorNameTable {
        &self.table
    }

    /// Number of channels produced for a color or gray input.
    pub fn channels(&self, color: bool) -> usize {
        let cn = if color && self.config.use_color_names {
            colornames::TERMS
        } else {
            0
        };
        1 + hog::hog_channels(self.config.hog_orientations) + cn
    }

    /// Gray (1) + HOG (31) + color names (10, color input only), each
    /// multiplied by the shared cosine window when enabled.
    pub fn extract_stack(&self, patch: &ImagePatch) -> Result<FeatureTensor> {
        let cfg = &self.config;
        let img = &patch.pixels;
        let mut parts = vec![extract_gray(img, cfg.cell_size)?, extract_hog(patch, cfg)?];
        if cfg.use_color_names && img.is_color() {
            parts.push(extract_color_names(img, cfg.cell_size, &self.table)?);
        }
        let mut stack = FeatureTensor::concat(&parts)?.with_cell_size(cfg.cell_size);
        if cfg.window {
            stack.apply_window(&cosine_window(stack.rows(), stack.cols()));
        }
        Ok(stack)
    }
}
