//! Sparse correlation filter without context samples or a temporal term.
//! Kept apart from the full tracker as a reference for the baseline variant.

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::image::Image;
use crate::scale::ScaleFilterState;
use crate::solver::{solve_plain, FilterBank};

use super::{detect_with, Setup, TrackerConfig};

#[derive(Debug, Clone)]
pub struct PlainTracker {
    setup: Setup,
    model: FilterBank,
    scale: ScaleFilterState,
    bbox: BoundingBox,
    frame_index: usize,
}

impl PlainTracker {
    /// Context and reference settings in `cfg` are ignored.
    pub fn init(frame: &Image, bbox: BoundingBox, cfg: &TrackerConfig) -> Result<PlainTracker> {
        if !bbox.is_valid() {
            return Err(Error::BadBox);
        }
        let setup = Setup::new(cfg)?;
        let (x, _) = setup.sample(frame, &bbox)?;
        let model = solve_plain(&x, &setup.label, &setup.omega, &setup.admm(1), 1)?.filter;
        let scale = ScaleFilterState::init(frame, &bbox, cfg.scale())?;
        Ok(PlainTracker {
            setup,
            model,
            scale,
            bbox,
            frame_index: 1,
        })
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn model(&self) -> &FilterBank {
        &self.model
    }

    pub fn step(&mut self, frame: &Image) -> Result<BoundingBox> {
        let frame_index = self.frame_index + 1;
        let det = detect_with(&self.setup, &self.model, &self.scale, &self.bbox, frame)
            .map_err(|e| e.at_frame(frame_index))?;
        self.bbox = det.bbox;
        self.scale.apply(det.scale_factor);
        let (x, _) = self.setup.sample(frame, &self.bbox)?;
        let admm = self.setup.admm(frame_index);
        let filter = solve_plain(&x, &self.setup.label, &self.setup.omega, &admm, frame_index)
            .map_err(|e| e.at_frame(frame_index))?
            .filter;
        self.model = self.model.lerp(&filter, self.setup.cfg.alpha)?;
        self.scale.update(frame, &self.bbox)?;
        self.frame_index = frame_index;
        Ok(self.bbox)
    }
}
