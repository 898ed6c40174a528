//! One-dimensional scale filter over a pyramid of resized target crops,
//! in the style of discriminative scale-space tracking.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::hog;
use crate::geometry::BoundingBox;
use crate::image::{crop_patch, Image};
use crate::numeric::hann;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleConfig {
    pub num_scales: usize,
    pub scale_step: f64,
    pub learning_rate: f64,
    /// Side of the square crop every scale sample is resized to, in pixels.
    pub model_size: usize,
    pub cell_size: usize,
    pub regularization: f64,
    /// Bounds on the accumulated scale relative to the first frame.
    pub min_scale: f64,
    pub max_scale: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        ScaleConfig {
            num_scales: 33,
            scale_step: 1.02,
            learning_rate: 0.025,
            model_size: 32,
            cell_size: 4,
            regularization: 0.01,
            min_scale: 0.2,
            max_scale: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFilterState {
    pub cfg: ScaleConfig,
    /// Per feature dimension, `num_scales` complex values.
    pub numerator: Vec<Complex64>,
    pub denominator: Vec<f64>,
    /// Accumulated scale relative to the first frame.
    pub current_scale: f64,
    label: Vec<Complex64>,
    window: Vec<f64>,
    dims: usize,
}

/// In-place DFT of every consecutive `len`-sample row of `buf`.
fn fft(buf: &mut [Complex64], len: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    plan.process(buf);
    if inverse {
        let k = 1.0 / len as f64;
        buf.iter_mut().for_each(|v| *v *= k);
    }
}

impl ScaleFilterState {
    /// Scale exponents `k` of the pyramid, from `-(S-1)/2` to `(S-1)/2`.
    pub fn exponents(&self) -> impl Iterator<Item = i64> {
        let half = (self.cfg.num_scales as i64 - 1) / 2;
        -half..=half
    }

    /// Feature matrix, `dims x num_scales`, dimension-major.
    fn samples(&self, frame: &Image, b: &BoundingBox) -> Result<Vec<f64>> {
        let s = self.cfg.num_scales;
        let side = self.cfg.model_size;
        let mut out = vec![0.0; self.dims * s];
        for (i, k) in self.exponents().enumerate() {
            let f = self.cfg.scale_step.powi(k as i32);
            let scaled = BoundingBox::new(b.cx, b.cy, b.w * f, b.h * f).map_err(|_| Error::DegenerateBox)?;
            let patch = crop_patch(frame, &scaled, 1.0, (side, side))?;
            let feat = hog::extract_hog(&patch.pixels, self.cfg.cell_size, 9)?;
            for (d, v) in feat.data().iter().enumerate() {
                out[d * s + i] = v * self.window[i];
            }
        }
        Ok(out)
    }

    fn spectra(&self, samples: &[f64]) -> Vec<Complex64> {
        let s = self.cfg.num_scales;
        let mut out: Vec<Complex64> = samples.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft(&mut out, s, false);
        out
    }

    /// Fresh single-frame model.
    fn fresh(&self, frame: &Image, b: &BoundingBox) -> Result<(Vec<Complex64>, Vec<f64>)> {
        let s = self.cfg.num_scales;
        let xf = self.spectra(&self.samples(frame, b)?);
        let mut num = vec![Complex64::new(0.0, 0.0); xf.len()];
        let mut den = vec![0.0; s];
        for (row, nrow) in xf.chunks_exact(s).zip(num.chunks_exact_mut(s)) {
            for i in 0..s {
                nrow[i] = self.label[i] * row[i].conj();
                den[i] += row[i].norm_sqr();
            }
        }
        Ok((num, den))
    }

    pub fn init(frame: &Image, b: &BoundingBox, cfg: ScaleConfig) -> Result<Self> {
        if cfg.num_scales == 0 || cfg.num_scales.is_multiple_of(2) || !cfg.model_size.is_multiple_of(cfg.cell_size) {
            return Err(Error::BadGeometry(format!(
                "{} scales with {}-pixel model and {}-pixel cells",
                cfg.num_scales, cfg.model_size, cfg.cell_size
            )));
        }
        if !b.is_valid() {
            return Err(Error::DegenerateBox);
        }
        let s = cfg.num_scales;
        let sigma = (s as f64).sqrt() * 0.25;
        let half = (s as i64 - 1) / 2;
        let mut label: Vec<Complex64> = (0..s as i64)
            .map(|i| Complex64::new((-((i - half) as f64).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0))
            .collect();
        fft(&mut label, s, false);
        let cells = cfg.model_size / cfg.cell_size;
        let mut state = ScaleFilterState {
            cfg,
            numerator: Vec::new(),
            denominator: Vec::new(),
            current_scale: 1.0,
            label,
            window: hann(s),
            dims: cells * cells * hog::hog_channels(9),
        };
        if s == 1 {
            state.window = vec![1.0];
        }
        let (num, den) = state.fresh(frame, b)?;
        state.numerator = num;
        state.denominator = den;
        Ok(state)
    }

    /// Scale factor of the best pyramid level around `b`.
    pub fn estimate_scale(&self, frame: &Image, b: &BoundingBox) -> Result<f64> {
        if !b.is_valid() {
            return Err(Error::DegenerateBox);
        }
        let s = self.cfg.num_scales;
        if s == 1 {
            return Ok(1.0);
        }
        let zf = self.spectra(&self.samples(frame, b)?);
        let mut acc = vec![Complex64::new(0.0, 0.0); s];
        for (zrow, arow) in zf.chunks_exact(s).zip(self.numerator.chunks_exact(s)) {
            for i in 0..s {
                acc[i] += arow[i] * zrow[i];
            }
        }
        for (a, d) in acc.iter_mut().zip(&self.denominator) {
            *a /= d + self.cfg.regularization;
        }
        fft(&mut acc, s, true);
        let mut best = 0;
        for i in 1..s {
            if acc[i].re > acc[best].re {
                best = i;
            }
        }
        let k = best as i64 - (s as i64 - 1) / 2;
        let factor = self.cfg.scale_step.powi(k as i32);
        let total = (self.current_scale * factor).clamp(self.cfg.min_scale, self.cfg.max_scale);
        Ok(total / self.current_scale)
    }

    /// Records an accepted factor from [`estimate_scale`](Self::estimate_scale).
    pub fn apply(&mut self, factor: f64) {
        self.current_scale *= factor;
    }

    /// Exponential update of numerator and denominator toward the model of `b`.
    pub fn update(&mut self, frame: &Image, b: &BoundingBox) -> Result<()> {
        let rate = self.cfg.learning_rate;
        if rate == 0.0 {
            return Ok(());
        }
        let (num, den) = self.fresh(frame, b)?;
        for (a, n) in self.numerator.iter_mut().zip(num) {
            *a = *a * (1.0 - rate) + n * rate;
        }
        for (a, n) in self.denominator.iter_mut().zip(den) {
            *a = *a * (1.0 - rate) + n * rate;
        }
        Ok(())
    }
}
