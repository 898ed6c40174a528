use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in pixel coordinates.
///
/// Coordinates are 1-based: the centre of the top-left pixel is `(1, 1)`,
/// matching the ground-truth files of the common tracking benchmarks. A box
/// whose top-left pixel is `x` and width `w` has centre `x + (w - 1) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoundingBox { cx, cy, w, h };
        if b.is_valid() {
            Ok(b)
        } else {
            Err(Error::EmptyBox)
        }
    }

    /// From a `x, y, w, h` top-left rectangle.
    pub fn from_corner(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(x + (w - 1.0) / 2.0, y + (h - 1.0) / 2.0, w, h)
    }

    pub fn to_corner(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - (self.w - 1.0) / 2.0,
            self.cy - (self.h - 1.0) / 2.0,
            self.w,
            self.h,
        )
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0 && [self.cx, self.cy, self.w, self.h].iter().all(|v| v.is_finite())
    }

    /// Inclusive pixel-centre extent `[left, right]` along x.
    pub fn x_range(&self) -> (f64, f64) {
        let half = (self.w - 1.0) / 2.0;
        (self.cx - half, self.cx + half)
    }

    pub fn y_range(&self) -> (f64, f64) {
        let half = (self.h - 1.0) / 2.0;
        (self.cy - half, self.cy + half)
    }

    /// Whether a pixel centre lies inside the box.
    pub fn contains_pixel(&self, x: f64, y: f64) -> bool {
        const SLACK: f64 = 1e-9;
        let (x0, x1) = self.x_range();
        let (y0, y1) = self.y_range();
        x >= x0 - SLACK && x <= x1 + SLACK && y >= y0 - SLACK && y <= y1 + SLACK
    }

    /// Continuous-area containment: the box covers `[cx - w/2, cx + w/2)`.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        (x - self.cx).abs() <= self.w / 2.0 && (y - self.cy).abs() <= self.h / 2.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn with_center(&self, cx: f64, cy: f64) -> Self {
        BoundingBox { cx, cy, ..*self }
    }
}

/// Pixel geometry of a feature grid cropped around a box.
///
/// Cell `(m, n)` of an fftshifted response map lies `(m - rows/2, n - cols/2)`
/// cells away from the crop centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    pub cx: f64,
    pub cy: f64,
    /// Frame pixels per cell along x and y.
    pub cell_w: f64,
    pub cell_h: f64,
    pub rows: usize,
    pub cols: usize,
}

impl SearchGrid {
    /// Grid of a crop of `area_scale * (w, h)` pixels around `b`, resampled
    /// to `patch` pixels and pooled into `cell`-pixel cells.
    pub fn new(b: &BoundingBox, area_scale: f64, patch: (usize, usize), cell: usize) -> Self {
        SearchGrid {
            cx: b.cx,
            cy: b.cy,
            cell_w: area_scale * b.w / patch.0 as f64 * cell as f64,
            cell_h: area_scale * b.h / patch.1 as f64 * cell as f64,
            rows: patch.1 / cell,
            cols: patch.0 / cell,
        }
    }

    /// Frame position of (possibly fractional) shifted-grid coordinates.
    pub fn cell_to_pixel(&self, m: f64, n: f64) -> (f64, f64) {
        (
            self.cx + (n - (self.cols / 2) as f64) * self.cell_w,
            self.cy + (m - (self.rows / 2) as f64) * self.cell_h,
        )
    }

    /// Distance between two frame positions measured in cells.
    pub fn cell_distance(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        ((a.0 - b.0) / self.cell_w).hypot((a.1 - b.1) / self.cell_h)
    }
}
