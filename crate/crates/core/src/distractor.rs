//! Background distractors: strong secondary peaks of the response map,
//! turned into weighted context samples cropped from the target-masked frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureExtractor;
use crate::geometry::{BoundingBox, SearchGrid};
use crate::image::{crop_patch, mask_target, Image};
use crate::numeric::{FeatureTensor, ResponseMap};
use crate::solver::ContextSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistractorConfig {
    /// Peaks not above `eps` (after normalizing by the global max) stop the search.
    pub eps: f64,
    pub p_max: usize,
    /// Weight decay length, in grid cells.
    pub distance_scale: f64,
    /// Crop context patches from the frame with the target zeroed out.
    pub mask_target: bool,
}

impl Default for DistractorConfig {
    fn default() -> Self {
        DistractorConfig {
            eps: 0.1,
            p_max: 4,
            distance_scale: 16.0,
            mask_target: true,
        }
    }
}

/// An accepted peak, before any features are extracted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Shifted-grid cell.
    pub cell: (usize, usize),
    /// Normalized response value.
    pub value: f64,
    pub bbox: BoundingBox,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distractor {
    pub bbox: BoundingBox,
    pub weight: f64,
    pub features: FeatureTensor,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistractorSet {
    pub items: Vec<Distractor>,
}

impl DistractorSet {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn context_samples(&self) -> Vec<ContextSample> {
        self.items
            .iter()
            .map(|d| ContextSample {
                features: d.features.clone(),
                weight: d.weight,
            })
            .collect()
    }
}

/// Cells that are `>=` all of their (up to eight) in-bounds neighbours,
/// sorted by descending value; equal values keep row-major order.
pub fn local_maxima(resp: &ResponseMap) -> Vec<((usize, usize), f64)> {
    let (rows, cols) = (resp.rows, resp.cols);
    let mut out = Vec::new();
    for m in 0..rows {
        for n in 0..cols {
            let v = resp.get(m, n);
            let mut is_max = true;
            'scan: for dm in -1isize..=1 {
                for dn in -1isize..=1 {
                    let (mm, nn) = (m as isize + dm, n as isize + dn);
                    if (dm, dn) == (0, 0) || mm < 0 || nn < 0 || mm >= rows as isize || nn >= cols as isize {
                        continue;
                    }
                    if resp.get(mm as usize, nn as usize) > v {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if is_max {
                out.push(((m, n), v));
            }
        }
    }
    // Stable sort keeps the row-major order among ties.
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

/// Peak selection on an fftshifted response map.
///
/// The map is normalized by its maximum, then the highest remaining local
/// maximum is taken repeatedly. A candidate whose centre falls inside
/// `b_obj` or an accepted box is rejected. Either way a target-sized block
/// of cells around it is zeroed before the next round. Accepted peaks get a
/// target-sized box and the weight `R · exp(−dist / distance_scale)` with
/// `dist` the centre distance to `b_obj` in cells.
///
/// An all-zero map yields no peaks; a non-finite map is
/// [`Error::DegenerateResponse`].
pub fn find_peaks(
    resp: &ResponseMap,
    grid: &SearchGrid,
    b_obj: &BoundingBox,
    cfg: &DistractorConfig,
) -> Result<Vec<Peak>> {
    if resp.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateResponse);
    }
    if (resp.rows, resp.cols) != (grid.rows, grid.cols) {
        return Err(Error::ShapeMismatch {
            left: (resp.rows, resp.cols, 1),
            right: (grid.rows, grid.cols, 1),
        });
    }
    let top = resp.max();
    let mut peaks: Vec<Peak> = Vec::new();
    if !(top > 0.0) || cfg.p_max == 0 {
        return Ok(peaks);
    }
    let mut map = resp.clone();
    map.data.iter_mut().for_each(|v| *v /= top);
    let half_m = ((b_obj.h / grid.cell_h) / 2.0).floor().max(0.0) as usize;
    let half_n = ((b_obj.w / grid.cell_w) / 2.0).floor().max(0.0) as usize;
    while peaks.len() < cfg.p_max {
        let Some(&((m, n), value)) = local_maxima(&map).first() else {
            break;
        };
        if value <= cfg.eps {
            break;
        }
        let centre = grid.cell_to_pixel(m as f64, n as f64);
        let rejected = b_obj.contains_point(centre.0, centre.1)
            || peaks.iter().any(|p| p.bbox.contains_point(centre.0, centre.1));
        if !rejected {
            let dist = grid.cell_distance(centre, (b_obj.cx, b_obj.cy));
            peaks.push(Peak {
                cell: (m, n),
                value,
                bbox: b_obj.with_center(centre.0, centre.1),
                weight: value * (-dist / cfg.distance_scale).exp(),
            });
        }
        for mm in m.saturating_sub(half_m)..=(m + half_m).min(map.rows - 1) {
            for nn in n.saturating_sub(half_n)..=(n + half_n).min(map.cols - 1) {
                map.set(mm, nn, 0.0);
            }
        }
    }
    Ok(peaks)
}

/// How context patches are cropped: the same geometry as the training sample.
#[derive(Debug, Clone, Copy)]
pub struct ContextCrop<'a> {
    pub extractor: &'a FeatureExtractor,
    pub area_scale: f64,
    pub patch: (usize, usize),
}

/// Peaks of [`find_peaks`] with features cropped around each one.
pub fn detect_distractors(
    resp: &ResponseMap,
    grid: &SearchGrid,
    b_obj: &BoundingBox,
    frame: &Image,
    cfg: &DistractorConfig,
    crop: &ContextCrop,
) -> Result<DistractorSet> {
    let peaks = find_peaks(resp, grid, b_obj, cfg)?;
    if peaks.is_empty() {
        return Ok(DistractorSet::default());
    }
    let masked;
    let source = if cfg.mask_target {
        masked = mask_target(frame, b_obj);
        &masked
    } else {
        frame
    };
    let items = peaks
        .into_iter()
        .map(|p| {
            let patch = crop_patch(source, &p.bbox, crop.area_scale, crop.patch)?;
            Ok(Distractor {
                bbox: p.bbox,
                weight: p.weight,
                features: crop.extractor.extract_stack(&patch)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DistractorSet { items })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureConfig;
    use crate::numeric::Map2D;

    fn grid() -> (SearchGrid, BoundingBox) {
        let b = BoundingBox::new(100.0, 100.0, 48.0, 48.0).unwrap();
        (SearchGrid::new(&b, 4.0, (200, 200), 4), b)
    }

    fn blobs(peaks: &[((f64, f64), f64)]) -> Map2D {
        Map2D::from_fn(50, 50, |m, n| {
            peaks
                .iter()
                .map(|((pm, pn), h)| h * (-((m as f64 - pm).powi(2) + (n as f64 - pn).powi(2)) / 2.0).exp())
                .fold(0.0, f64::max)
        })
    }

    #[test]
    fn ramp_has_one_maximum() {
        let ramp = Map2D::from_fn(5, 6, |m, n| (m * 6 + n) as f64);
        assert_eq!(local_maxima(&ramp), vec![((4, 5), 29.0)]);
    }

    #[test]
    fn constant_map_ties_in_row_major_order() {
        let flat = Map2D::from_fn(3, 3, |_, _| 2.0);
        let maxima = local_maxima(&flat);
        assert_eq!(maxima.len(), 9);
        assert_eq!(maxima[0].0, (0, 0));
        assert_eq!(maxima[8].0, (2, 2));
    }

    #[test]
    fn lone_target_peak_gives_nothing() {
        let (g, b) = grid();
        let resp = blobs(&[((25.0, 25.0), 3.0)]);
        assert!(find_peaks(&resp, &g, &b, &DistractorConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn one_distractor_sixteen_cells_away() {
        let (g, b) = grid();
        let mut resp = Map2D::from_fn(50, 50, |_, _| 0.05);
        resp.set(25, 25, 1.0);
        resp.set(25, 41, 0.5);
        let peaks = find_peaks(&resp, &g, &b, &DistractorConfig::default()).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].cell, (25, 41));
        assert!((peaks[0].weight - 0.5 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((peaks[0].weight - 0.18394).abs() < 1e-5);
        // 16 cells of 4 * 48 / 50 = 3.84 px.
        assert!((peaks[0].bbox.cx - 161.44).abs() < 1e-9 && peaks[0].bbox.cy == 100.0);
    }

    #[test]
    fn at_most_p_max_highest_peaks() {
        let (g, b) = grid();
        let spots = [
            ((25.0, 25.0), 1.0),
            ((5.0, 5.0), 0.9),
            ((5.0, 44.0), 0.8),
            ((44.0, 5.0), 0.7),
            ((44.0, 44.0), 0.6),
            ((5.0, 25.0), 0.5),
            ((44.0, 25.0), 0.4),
        ];
        let peaks = find_peaks(&blobs(&spots), &g, &b, &DistractorConfig::default()).unwrap();
        let cells: Vec<_> = peaks.iter().map(|p| p.cell).collect();
        assert_eq!(cells, vec![(5, 5), (5, 44), (44, 5), (44, 44)]);
    }

    #[test]
    fn degenerate_maps() {
        let (g, b) = grid();
        let cfg = DistractorConfig::default();
        assert!(find_peaks(&Map2D::zeros(50, 50), &g, &b, &cfg).unwrap().is_empty());
        let mut bad = Map2D::zeros(50, 50);
        bad.set(3, 3, f64::NAN);
        assert!(matches!(find_peaks(&bad, &g, &b, &cfg), Err(Error::DegenerateResponse)));
    }

    #[test]
    fn context_patches_come_from_the_masked_frame() {
        let b = BoundingBox::new(50.5, 50.5, 16.0, 16.0).unwrap();
        let g = SearchGrid::new(&b, 4.0, (64, 64), 4);
        let frame = Image::from_fn(100, 100, 3, |x, y, c| ((x + 2 * y + c) % 7) as f32 / 7.0);
        let fx = FeatureExtractor::new(FeatureConfig::default());
        let crop = ContextCrop {
            extractor: &fx,
            area_scale: 4.0,
            patch: (64, 64),
        };
        let mut resp = Map2D::zeros(16, 16);
        resp.set(8, 8, 1.0);
        resp.set(8, 13, 0.6);
        let set = detect_distractors(&resp, &g, &b, &frame, &DistractorConfig::default(), &crop).unwrap();
        assert_eq!(set.len(), 1);
        let masked = mask_target(&frame, &b);
        let expect = fx
            .extract_stack(&crop_patch(&masked, &set.items[0].bbox, 4.0, (64, 64)).unwrap())
            .unwrap();
        assert_eq!(set.items[0].features, expect);
        let plain = DistractorConfig {
            mask_target: false,
            ..DistractorConfig::default()
        };
        let unmasked = detect_distractors(&resp, &g, &b, &frame, &plain, &crop).unwrap();
        assert_ne!(unmasked.items[0].features, expect);
    }
}
