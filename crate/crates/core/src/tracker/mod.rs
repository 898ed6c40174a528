//! Per-frame loop: detect, pick context samples and a reference filter,
//! retrain, blend into the model.

mod config;
pub mod plain;
pub mod subpixel;

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use config::{FirstFrameDistractors, ReferenceMode, TrackerConfig, VARIANTS};

use crate::distractor::{detect_distractors, ContextCrop, DistractorSet};
use crate::error::{Error, Result};
use crate::features::FeatureExtractor;
use crate::geometry::{BoundingBox, SearchGrid};
use crate::image::{crop_patch, Image};
use crate::keyfilter::KeyfilterPool;
use crate::numeric::{forward_dft, gaussian_label, ifft2_real, signed_offset, FeatureTensor, LabelMap, Map2D, ResponseMap};
use crate::scale::ScaleFilterState;
use crate::solver::{solve, AdmmConfig, ContextSample, FilterBank, SpatialWeightMap, TrainingProblem};

/// Quantities fixed for a whole sequence.
#[derive(Debug, Clone)]
pub(crate) struct Setup {
    pub cfg: TrackerConfig,
    pub extractor: FeatureExtractor,
    pub label: LabelMap,
    pub omega: SpatialWeightMap,
    /// Cells per side of the search grid.
    pub cells: usize,
}

impl Setup {
    pub fn new(cfg: &TrackerConfig) -> Result<Setup> {
        cfg.validate()?;
        let cells = cfg.grid_cells();
        let sigma = ((cells * cells) as f64).sqrt() * cfg.label_sigma_factor;
        let support = cells as f64 / cfg.area_scale;
        Ok(Setup {
            cfg: cfg.clone(),
            extractor: FeatureExtractor::new(cfg.features()),
            label: gaussian_label(cells, cells, sigma),
            omega: SpatialWeightMap::two_level(cells, cells, (support, support), cfg.omega_inside, cfg.omega_outside),
            cells,
        })
    }

    fn patch(&self) -> (usize, usize) {
        (self.cfg.patch_size, self.cfg.patch_size)
    }

    /// Windowed features of the search region around `b`.
    pub fn sample(&self, frame: &Image, b: &BoundingBox) -> Result<(FeatureTensor, SearchGrid)> {
        let patch = crop_patch(frame, b, self.cfg.area_scale, self.patch())?;
        let grid = SearchGrid::new(b, self.cfg.area_scale, self.patch(), self.cfg.cell_size);
        Ok((self.extractor.extract_stack(&patch)?, grid))
    }

    /// Windowed features of the target itself.
    pub fn template(&self, frame: &Image, b: &BoundingBox) -> Result<FeatureTensor> {
        let side = self.cfg.template_size;
        let patch = crop_patch(frame, b, 1.0, (side, side))?;
        self.extractor.extract_stack(&patch)
    }

    pub fn context_crop(&self) -> ContextCrop<'_> {
        ContextCrop {
            extractor: &self.extractor,
            area_scale: self.cfg.area_scale,
            patch: self.patch(),
        }
    }

    /// Response of `model` on `z`, as its spectrum (unshifted) and map.
    pub fn respond(&self, z: &FeatureTensor, model: &FilterBank) -> Result<(Vec<Complex64>, Map2D)> {
        z.check_same_shape(model.spatial())?;
        let (rows, cols, channels) = z.shape();
        let zf = forward_dft(z);
        let mut acc = vec![Complex64::new(0.0, 0.0); rows * cols];
        for d in 0..channels {
            for ((a, x), w) in acc.iter_mut().zip(zf.channel(d)).zip(model.spectrum().channel(d)) {
                *a += x * w;
            }
        }
        let map = Map2D {
            rows,
            cols,
            data: ifft2_real(&acc, rows, cols),
        };
        Ok((acc, map))
    }

    /// Subpixel displacement `(rows, cols)` of the response peak, in cells.
    pub fn locate(&self, spectrum: &[Complex64], map: &Map2D) -> (f64, f64) {
        let peak = map.argmax();
        let (u, v) = subpixel::refine_peak(
            spectrum,
            map.rows,
            map.cols,
            peak,
            self.cfg.subpixel_steps,
            self.cfg.subpixel_tolerance,
        );
        let wrap = |x: f64, len: usize| {
            let base = signed_offset(peak_index(x, len), len);
            base + (x - x.round())
        };
        (wrap(u, map.rows), wrap(v, map.cols))
    }

    /// Solver constants for training at `frame_index`. Frame 1 has no
    /// reference filter, so λ is zero there.
    pub fn admm(&self, frame_index: usize) -> AdmmConfig {
        let mut cfg = self.cfg.admm();
        if self.cfg.per_cell_penalties {
            // The unnormalized DFT sums squared residuals over all M*N cells.
            let cells = (self.cells * self.cells) as f64;
            cfg.lambda *= cells;
            cfg.mu0 *= cells;
            cfg.mu_max *= cells;
        }
        if frame_index <= 1 {
            cfg.lambda = 0.0;
        }
        cfg
    }
}

fn peak_index(x: f64, len: usize) -> usize {
    (x.round() as i64).rem_euclid(len as i64) as usize
}

/// Moves the centre back inside the frame padded by one box size.
pub fn clamp_box(b: BoundingBox, frame: &Image) -> BoundingBox {
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    BoundingBox {
        cx: b.cx.clamp(1.0 - b.w, w + b.w),
        cy: b.cy.clamp(1.0 - b.h, h + b.h),
        ..b
    }
}

/// Result of the detection half of a frame.
#[derive(Debug, Clone)]
pub struct Detection {
    /// fftshifted response over the search grid.
    pub response: ResponseMap,
    pub grid: SearchGrid,
    pub bbox: BoundingBox,
    pub scale_factor: f64,
    pub peak: f64,
}

/// Per-frame record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub frame: usize,
    pub bbox: BoundingBox,
    pub seconds: f64,
    pub peak: f64,
    pub distractors: usize,
    /// Frame whose filter served as reference, if any.
    pub reference_frame: Option<usize>,
}

/// Locates the target in `frame` starting from `prev`; shared by both trackers.
pub(crate) fn detect_with(
    setup: &Setup,
    model: &FilterBank,
    scale: &ScaleFilterState,
    prev: &BoundingBox,
    frame: &Image,
) -> Result<Detection> {
    let (z, grid) = setup.sample(frame, prev)?;
    let (spectrum, map) = setup.respond(&z, model)?;
    if map.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateResponse);
    }
    let (dm, dn) = setup.locate(&spectrum, &map);
    let moved = clamp_box(
        prev.with_center(prev.cx + dn * grid.cell_w, prev.cy + dm * grid.cell_h),
        frame,
    );
    let scale_factor = scale.estimate_scale(frame, &moved)?;
    let bbox = BoundingBox {
        w: moved.w * scale_factor,
        h: moved.h * scale_factor,
        ..moved
    };
    Ok(Detection {
        peak: map.max(),
        response: map.fftshift(),
        grid,
        bbox,
        scale_factor,
    })
}

/// Tracker with context learning and reference-filter selection.
#[derive(Debug, Clone)]
pub struct Tracker {
    setup: Setup,
    model: FilterBank,
    pool: Option<KeyfilterPool>,
    scale: ScaleFilterState,
    bbox: BoundingBox,
    frame_index: usize,
    last: FrameReport,
}

impl Tracker {
    pub fn init(frame: &Image, bbox: BoundingBox, cfg: &TrackerConfig) -> Result<Tracker> {
        let started = Instant::now();
        if !bbox.is_valid() {
            return Err(Error::BadBox);
        }
        let setup = Setup::new(cfg)?;
        let (x, grid) = setup.sample(frame, &bbox)?;
        let admm = setup.admm(1);
        let train = |contexts: &[ContextSample]| -> Result<FilterBank> {
            let p = TrainingProblem {
                x: &x,
                y: &setup.label,
                contexts,
                keyfilter: None,
                omega: &setup.omega,
                cfg: &admm,
                frame: 1,
            };
            Ok(solve(&p)?.filter)
        };
        let mut filter = train(&[])?;
        let mut distractors = 0;
        if cfg.acl && cfg.first_frame_distractors == FirstFrameDistractors::SelfResponse {
            let (_, map) = setup.respond(&x, &filter)?;
            let set = distractors_or_empty(detect_distractors(
                &map.fftshift(),
                &grid,
                &bbox,
                frame,
                &cfg.distractors(),
                &setup.context_crop(),
            ))?;
            if !set.is_empty() {
                distractors = set.len();
                filter = train(&set.context_samples())?;
            }
        }
        let pool = if cfg.selection().uses_pool() {
            let mut pool = KeyfilterPool::new(cfg.pool_capacity);
            pool.update(filter.clone(), setup.template(frame, &bbox)?, 1);
            Some(pool)
        } else {
            None
        };
        let scale = ScaleFilterState::init(frame, &bbox, cfg.scale())?;
        Ok(Tracker {
            model: filter,
            pool,
            scale,
            bbox,
            frame_index: 1,
            last: FrameReport {
                frame: 1,
                bbox,
                seconds: started.elapsed().as_secs_f64(),
                peak: 0.0,
                distractors,
                reference_frame: None,
            },
            setup,
        })
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn model(&self) -> &FilterBank {
        &self.model
    }

    pub fn pool(&self) -> Option<&KeyfilterPool> {
        self.pool.as_ref()
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.setup.cfg
    }

    pub fn last_report(&self) -> &FrameReport {
        &self.last
    }

    /// Response of the current model on a search region around `b`.
    pub fn response_at(&self, frame: &Image, b: &BoundingBox) -> Result<ResponseMap> {
        let (z, _) = self.setup.sample(frame, b)?;
        Ok(self.setup.respond(&z, &self.model)?.1.fftshift())
    }

    /// Locates the target without changing any state.
    pub fn detect(&self, frame: &Image) -> Result<Detection> {
        detect_with(&self.setup, &self.model, &self.scale, &self.bbox, frame)
    }

    /// Accepts `det` and learns from the frame.
    pub fn train_and_update(&mut self, frame: &Image, det: &Detection) -> Result<()> {
        let started = Instant::now();
        let frame_index = self.frame_index + 1;
        self.bbox = det.bbox;
        self.scale.apply(det.scale_factor);
        let cfg = &self.setup.cfg;
        let set = if cfg.acl {
            distractors_or_empty(detect_distractors(
                &det.response,
                &det.grid,
                &det.bbox,
                frame,
                &cfg.distractors(),
                &self.setup.context_crop(),
            ))?
        } else {
            DistractorSet::default()
        };
        let contexts = set.context_samples();
        let template = match self.pool {
            Some(_) => Some(self.setup.template(frame, &self.bbox)?),
            None => None,
        };
        let reference = match (&self.pool, &template) {
            (Some(pool), Some(t)) => cfg.selection().select(t, pool)?,
            _ => None,
        };
        let (x, _) = self.setup.sample(frame, &self.bbox)?;
        let admm = self.setup.admm(frame_index);
        let p = TrainingProblem {
            x: &x,
            y: &self.setup.label,
            contexts: &contexts,
            keyfilter: reference.map(|e| &e.filter),
            omega: &self.setup.omega,
            cfg: &admm,
            frame: frame_index,
        };
        let filter = solve(&p)?.filter;
        let reference_frame = reference.map(|e| e.frame_index);
        self.model = self.model.lerp(&filter, cfg.alpha)?;
        if let (Some(pool), Some(t)) = (self.pool.as_mut(), template) {
            pool.update(filter, t, frame_index);
        }
        self.scale.update(frame, &self.bbox)?;
        self.frame_index = frame_index;
        self.last = FrameReport {
            frame: frame_index,
            bbox: self.bbox,
            seconds: started.elapsed().as_secs_f64(),
            peak: det.peak,
            distractors: set.len(),
            reference_frame,
        };
        Ok(())
    }

    /// Detection followed by learning; returns the new box.
    pub fn step(&mut self, frame: &Image) -> Result<BoundingBox> {
        let started = Instant::now();
        let det = self.detect(frame).map_err(|e| e.at_frame(self.frame_index + 1))?;
        self.train_and_update(frame, &det)
            .map_err(|e| e.at_frame(self.frame_index + 1))?;
        self.last.seconds = started.elapsed().as_secs_f64();
        Ok(self.bbox)
    }
}

/// A degenerate response map yields no distractors rather than an error.
fn distractors_or_empty(r: Result<DistractorSet>) -> Result<DistractorSet> {
    match r {
        Err(Error::DegenerateResponse) => Ok(DistractorSet::default()),
        other => other,
    }
}

/// Output of [`track_sequence`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackResult {
    pub boxes: Vec<BoundingBox>,
    pub reports: Vec<FrameReport>,
}

impl TrackResult {
    /// Frames per second over the whole run, initialization included.
    pub fn fps(&self) -> f64 {
        let total: f64 = self.reports.iter().map(|r| r.seconds).sum();
        if total > 0.0 {
            self.reports.len() as f64 / total
        } else {
            0.0
        }
    }
}

/// One-pass tracking: initialize on the first frame, never re-initialize.
pub fn track_sequence<I>(frames: I, init_box: BoundingBox, cfg: &TrackerConfig) -> Result<TrackResult>
where
    I: IntoIterator<Item = Result<Image>>,
{
    let mut frames = frames.into_iter();
    let first = frames.next().ok_or(Error::EmptySeries)?.map_err(|e| e.at_frame(1))?;
    let mut tracker = Tracker::init(&first, init_box, cfg).map_err(|e| e.at_frame(1))?;
    drop(first);
    let mut out = TrackResult {
        boxes: vec![init_box],
        reports: vec![tracker.last_report().clone()],
    };
    for (i, frame) in frames.enumerate() {
        let frame = frame.map_err(|e| e.at_frame(i + 2))?;
        out.boxes.push(tracker.step(&frame)?);
        out.reports.push(tracker.last_report().clone());
    }
    Ok(out)
}
