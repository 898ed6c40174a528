//! Multi-channel 2-D arrays and the DFT contract the rest of the crate
//! relies on.
//!
//! Tensors are stored channel-major (`data[(d * rows + m) * cols + n]`) so
//! every channel is one contiguous image and per-channel transforms need no
//! gathering. The forward DFT is unnormalized and the inverse carries the
//! `1 / (rows * cols)` factor.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative bound on the imaginary part left over by an inverse transform
/// of a spectrum that should be conjugate symmetric.
pub const IMAGINARY_RESIDUE_TOLERANCE: f64 = 1e-8;

/// Real `rows x cols x channels` array of feature-cell values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    rows: usize,
    cols: usize,
    channels: usize,
    cell_size: usize,
    data: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        assert!(rows >= 1 && cols >= 1 && channels >= 1, "empty tensor");
        FeatureTensor {
            rows,
            cols,
            channels,
            cell_size: 1,
            data: vec![0.0; rows * cols * channels],
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut t = Self::zeros(rows, cols, channels);
        for d in 0..channels {
            for m in 0..rows {
                for n in 0..cols {
                    t.data[(d * rows + m) * cols + n] = f(m, n, d);
                }
            }
        }
        t
    }

    /// Builds a tensor from channel-major data.
    pub fn from_vec(rows: usize, cols: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || channels == 0 || data.len() != rows * cols * channels {
            return Err(Error::BadGeometry(format!(
                "{} values for a {rows}x{cols}x{channels} tensor",
                data.len()
            )));
        }
        Ok(FeatureTensor {
            rows,
            cols,
            channels,
            cell_size: 1,
            data,
        })
    }

    pub fn with_cell_size(mut self, cell_size: usize) -> Self {
        assert!(cell_size >= 1);
        self.cell_size = cell_size;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn cell_size(&self) -> usize {
        self.cell_size
    }
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.channels)
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, d: usize) -> f64 {
        self.data[(d * self.rows + m) * self.cols + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, d: usize, v: f64) {
        self.data[(d * self.rows + m) * self.cols + n] = v;
    }

    pub fn channel(&self, d: usize) -> &[f64] {
        let len = self.rows * self.cols;
        &self.data[d * len..(d + 1) * len]
    }

    pub fn channel_mut(&mut self, d: usize) -> &mut [f64] {
        let len = self.rows * self.cols;
        &mut self.data[d * len..(d + 1) * len]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn check_same_shape(&self, other: &FeatureTensor) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    pub fn hadamard(&self, other: &FeatureTensor) -> Result<FeatureTensor> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a *= b);
        Ok(out)
    }

    /// `(1 - rate) * self + rate * other`, element-wise.
    pub fn lerp(&self, other: &FeatureTensor, rate: f64) -> Result<FeatureTensor> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a = (1.0 - rate) * *a + rate * b);
        Ok(out)
    }

    pub fn scaled(&self, k: f64) -> FeatureTensor {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= k);
        out
    }

    /// Multiplies every channel by the same `rows x cols` map.
    pub fn apply_window(&mut self, window: &Map2D) {
        assert_eq!((window.rows, window.cols), (self.rows, self.cols));
        let len = self.rows * self.cols;
        for chunk in self.data.chunks_mut(len) {
            chunk
                .iter_mut()
                .zip(&window.data)
                .for_each(|(v, w)| *v *= w);
        }
    }

    /// Concatenates tensors along the channel axis.
    pub fn concat(parts: &[FeatureTensor]) -> Result<FeatureTensor> {
        let first = parts
            .first()
            .ok_or_else(|| Error::BadGeometry("nothing to concatenate".into()))?;
        let mut data = Vec::new();
        let mut channels = 0;
        for p in parts {
            if (p.rows, p.cols) != (first.rows, first.cols) {
                return Err(Error::ShapeMismatch {
                    left: first.shape(),
                    right: p.shape(),
                });
            }
            data.extend_from_slice(&p.data);
            channels += p.channels;
        }
        Ok(FeatureTensor {
            rows: first.rows,
            cols: first.cols,
            channels,
            cell_size: first.cell_size,
            data,
        })
    }
}

/// Complex `rows x cols x channels` array: the DFT of a [`FeatureTensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTensor {
    rows: usize,
    cols: usize,
    channels: usize,
    data: Vec<Complex64>,
}

impl SpectrumTensor {
    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        SpectrumTensor {
            rows,
            cols,
            channels,
            data: vec![Complex64::new(0.0, 0.0); rows * cols * channels],
        }
    }

    pub fn from_vec(
        rows: usize,
        cols: usize,
        channels: usize,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.len() != rows * cols * channels {
            return Err(Error::BadGeometry(format!(
                "{} values for a {rows}x{cols}x{channels} spectrum",
                data.len()
            )));
        }
        Ok(SpectrumTensor {
            rows,
            cols,
            channels,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.channels)
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize, d: usize) -> Complex64 {
        self.data[(d * self.rows + m) * self.cols + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, d: usize, v: Complex64) {
        self.data[(d * self.rows + m) * self.cols + n] = v;
    }

    pub fn channel(&self, d: usize) -> &[Complex64] {
        let len = self.rows * self.cols;
        &self.data[d * len..(d + 1) * len]
    }

    pub fn channel_mut(&mut self, d: usize) -> &mut [Complex64] {
        let len = self.rows * self.cols;
        &mut self.data[d * len..(d + 1) * len]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    fn check_same_shape(&self, other: &SpectrumTensor) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &SpectrumTensor,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<SpectrumTensor> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(SpectrumTensor {
            rows: self.rows,
            cols: self.cols,
            channels: self.channels,
            data,
        })
    }

    /// Sums the channels into a single `rows x cols` spectrum.
    pub fn sum_channels(&self) -> Vec<Complex64> {
        let len = self.rows * self.cols;
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for chunk in self.data.chunks(len) {
            out.iter_mut().zip(chunk).for_each(|(o, v)| *o += v);
        }
        out
    }
}

/// Element-wise product `a ∘ b`.
pub fn hadamard(a: &SpectrumTensor, b: &SpectrumTensor) -> Result<SpectrumTensor> {
    a.zip_with(b, |x, y| x * y)
}

/// Element-wise conjugate product `conj(a) ∘ b`.
pub fn conj_hadamard(a: &SpectrumTensor, b: &SpectrumTensor) -> Result<SpectrumTensor> {
    a.zip_with(b, |x, y| x.conj() * y)
}

/// Element-wise quotient `a / (b + floor)`.
pub fn elementwise_div(a: &SpectrumTensor, b: &SpectrumTensor, floor: f64) -> Result<SpectrumTensor> {
    a.zip_with(b, |x, y| x / (y + floor))
}

/// Real `rows x cols` map: labels, windows, responses, spatial weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Map2D {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Correlation response on the feature grid.
pub type ResponseMap = Map2D;

impl Map2D {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Map2D {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for m in 0..rows {
            for n in 0..cols {
                data.push(f(m, n));
            }
        }
        Map2D { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.data[m * self.cols + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: f64) {
        self.data[m * self.cols + n] = v;
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Row-major index of the first maximum.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.data.iter().enumerate() {
            if *v > self.data[best] {
                best = i;
            }
        }
        (best / self.cols, best % self.cols)
    }

    /// Moves the zero-displacement cell from `(0, 0)` to `(rows / 2, cols / 2)`.
    pub fn fftshift(&self) -> Map2D {
        let (r2, c2) = (self.rows / 2, self.cols / 2);
        Map2D::from_fn(self.rows, self.cols, |m, n| {
            self.get((m + self.rows - r2) % self.rows, (n + self.cols - c2) % self.cols)
        })
    }

    pub fn as_tensor(&self) -> FeatureTensor {
        FeatureTensor::from_vec(self.rows, self.cols, 1, self.data.clone())
            .expect("map dimensions are consistent")
    }
}

/// Gaussian regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub map: Map2D,
    pub sigma: f64,
}

/// Gaussian label with its peak circularly shifted to `(0, 0)`.
pub fn gaussian_label(rows: usize, cols: usize, sigma: f64) -> LabelMap {
    assert!(rows >= 1 && cols >= 1 && sigma > 0.0);
    let offset = |i: usize, len: usize| i.min(len - i) as f64;
    let map = Map2D::from_fn(rows, cols, |m, n| {
        let (dm, dn) = (offset(m, rows), offset(n, cols));
        (-(dm * dm + dn * dn) / (2.0 * sigma * sigma)).exp()
    });
    LabelMap { map, sigma }
}

/// Symmetric Hann vector `0.5 - 0.5 cos(2πk / (K - 1))`; a single sample is 1.
pub fn hann(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Separable 2-D Hann window.
pub fn cosine_window(rows: usize, cols: usize) -> Map2D {
    let (hr, hc) = (hann(rows), hann(cols));
    Map2D::from_fn(rows, cols, |m, n| hr[m] * hc[n])
}

struct Plan2 {
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, usize), Rc<Plan2>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(rows: usize, cols: usize) -> Rc<Plan2> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        if let Some(p) = cache.get(&(rows, cols)) {
            return p.clone();
        }
        let p = Rc::new(Plan2 {
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        });
        cache.insert((rows, cols), p.clone());
        p
    })
}

thread_local! {
    static SCRATCH: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

/// In-place unnormalized 2-D transform of one row-major `rows x cols` image.
pub fn fft2_in_place(buf: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), rows * cols);
    let p = plan(rows, cols);
    let (row_fft, col_fft) = if inverse {
        (&p.row_inv, &p.col_inv)
    } else {
        (&p.row_fwd, &p.col_fwd)
    };
    SCRATCH.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (t, scratch) = &mut *guard;
        let need = row_fft
            .get_inplace_scratch_len()
            .max(col_fft.get_inplace_scratch_len());
        if scratch.len() < need {
            scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        row_fft.process_with_scratch(buf, &mut scratch[..row_fft.get_inplace_scratch_len()]);
        if rows > 1 {
            t.resize(rows * cols, Complex64::new(0.0, 0.0));
            for m in 0..rows {
                for n in 0..cols {
                    t[n * rows + m] = buf[m * cols + n];
                }
            }
            col_fft.process_with_scratch(t, &mut scratch[..col_fft.get_inplace_scratch_len()]);
            for m in 0..rows {
                for n in 0..cols {
                    buf[m * cols + n] = t[n * rows + m];
                }
            }
        }
    });
}

/// Forward transform of one real channel.
pub fn fft2_real(src: &[f64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = src.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(&mut buf, rows, cols, false);
    buf
}

/// Normalized inverse of one channel, real part only (no residue check).
pub fn ifft2_real(src: &[Complex64], rows: usize, cols: usize) -> Vec<f64> {
    let mut buf = src.to_vec();
    fft2_in_place(&mut buf, rows, cols, true);
    let scale = 1.0 / (rows * cols) as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Index of the frequency `-k` for row-major index `i`.
#[inline]
fn mirror(i: usize, rows: usize, cols: usize) -> usize {
    let (m, n) = (i / cols, i % cols);
    ((rows - m) % rows) * cols + (cols - n) % cols
}

/// Per-channel unnormalized forward 2-D DFT. Channels are transformed two at
/// a time as the real and imaginary parts of one complex image.
pub fn forward_dft(t: &FeatureTensor) -> SpectrumTensor {
    let (rows, cols, channels) = t.shape();
    let len = rows * cols;
    let mut data = vec![Complex64::new(0.0, 0.0); len * channels];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut d = 0;
    while d + 1 < channels {
        for ((b, &a), &c) in buf.iter_mut().zip(t.channel(d)).zip(t.channel(d + 1)) {
            *b = Complex64::new(a, c);
        }
        fft2_in_place(&mut buf, rows, cols, false);
        let (lo, hi) = data[d * len..(d + 2) * len].split_at_mut(len);
        for i in 0..len {
            let z = buf[i];
            let zm = buf[mirror(i, rows, cols)].conj();
            lo[i] = (z + zm) * 0.5;
            let diff = z - zm;
            hi[i] = Complex64::new(diff.im * 0.5, -diff.re * 0.5);
        }
        d += 2;
    }
    if d < channels {
        data[d * len..].copy_from_slice(&fft2_real(t.channel(d), rows, cols));
    }
    SpectrumTensor {
        rows,
        cols,
        channels,
        data,
    }
}

/// Per-channel normalized inverse DFT, discarding the imaginary part after
/// checking that it is negligible. The imaginary part comes from the
/// anti-Hermitian half of each channel, so its norm is measured in the
/// frequency domain and the Hermitian halves of two channels share one
/// complex transform.
pub fn inverse_dft(s: &SpectrumTensor) -> Result<FeatureTensor> {
    let (rows, cols, channels) = s.shape();
    let len = rows * cols;
    let scale = 1.0 / len as f64;
    let mut data = vec![0.0; len * channels];
    let (mut re_sq, mut im_sq) = (0.0, 0.0);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut d = 0;
    while d < channels {
        let pair = d + 1 < channels;
        let a = s.channel(d);
        let b = if pair { s.channel(d + 1) } else { a };
        for i in 0..len {
            let j = mirror(i, rows, cols);
            let ah = (a[i] + a[j].conj()) * 0.5;
            let aa = a[i] - ah;
            re_sq += ah.norm_sqr();
            im_sq += aa.norm_sqr();
            buf[i] = if pair {
                let bh = (b[i] + b[j].conj()) * 0.5;
                let ba = b[i] - bh;
                re_sq += bh.norm_sqr();
                im_sq += ba.norm_sqr();
                ah + Complex64::new(-bh.im, bh.re)
            } else {
                ah
            };
        }
        fft2_in_place(&mut buf, rows, cols, true);
        for (o, c) in data[d * len..(d + 1) * len].iter_mut().zip(&buf) {
            *o = c.re * scale;
        }
        if pair {
            for (o, c) in data[(d + 1) * len..(d + 2) * len].iter_mut().zip(&buf) {
                *o = c.im * scale;
            }
        }
        d += if pair { 2 } else { 1 };
    }
    // Parseval: sum |ifft(x)|^2 = sum |x|^2 / len.
    let (real_norm, residue) = ((re_sq * scale).sqrt(), (im_sq * scale).sqrt());
    if !(residue <= IMAGINARY_RESIDUE_TOLERANCE * real_norm) && residue > f64::MIN_POSITIVE {
        return Err(Error::ImaginaryResidueTooLarge { residue, real_norm });
    }
    FeatureTensor::from_vec(rows, cols, channels, data)
}

/// Signed circular offset of index `i` on an axis of length `len`.
#[inline]
pub fn signed_offset(i: usize, len: usize) -> f64 {
    if i < len.div_ceil(2) {
        i as f64
    } else {
        i as f64 - len as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, m: usize, n: usize, d: usize) -> FeatureTensor {
        FeatureTensor::from_fn(m, n, d, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    fn naive_dft(t: &FeatureTensor) -> Vec<Complex64> {
        let (rows, cols, channels) = t.shape();
        let mut out = Vec::new();
        for d in 0..channels {
            for k in 0..rows {
                for l in 0..cols {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for m in 0..rows {
                        for n in 0..cols {
                            let phase = -2.0
                                * PI
                                * ((k * m) as f64 / rows as f64 + (l * n) as f64 / cols as f64);
                            acc += t.get(m, n, d) * Complex64::from_polar(1.0, phase);
                        }
                    }
                    out.push(acc);
                }
            }
        }
        out
    }

    fn naive_circular_correlation(a: &[f64], b: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        let mut out = vec![0.0; rows * cols];
        for tm in 0..rows {
            for tn in 0..cols {
                let mut acc = 0.0;
                for m in 0..rows {
                    for n in 0..cols {
                        acc += a[m * cols + n] * b[((m + tm) % rows) * cols + (n + tn) % cols];
                    }
                }
                out[tm * cols + tn] = acc;
            }
        }
        out
    }

    #[test]
    fn dc_only_signal() {
        let t = FeatureTensor::from_fn(2, 2, 1, |_, _, _| 1.0);
        let s = forward_dft(&t);
        assert_eq!(s.get(0, 0, 0), Complex64::new(4.0, 0.0));
        for (m, n) in [(0, 1), (1, 0), (1, 1)] {
            assert!(s.get(m, n, 0).norm() < 1e-15);
        }
    }

    #[test]
    fn impulse_gives_flat_spectrum() {
        let mut t = FeatureTensor::zeros(3, 5, 2);
        t.set(0, 0, 0, 1.0);
        t.set(0, 0, 1, 1.0);
        let s = forward_dft(&t);
        assert!(s.data().iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (m, n, d) in [(4, 4, 1), (4, 4, 3), (3, 5, 2), (1, 6, 1)] {
            let t = random_tensor(&mut rng, m, n, d);
            let fast = forward_dft(&t);
            let slow = naive_dft(&t);
            for (a, b) in fast.data().iter().zip(&slow) {
                assert!((a - b).norm() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn round_trip_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_tensor(&mut rng, 6, 10, 3);
        let back = inverse_dft(&forward_dft(&t)).unwrap();
        let err = back
            .data()
            .iter()
            .zip(t.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9 * t.norm_sq().sqrt());

        let zero = inverse_dft(&SpectrumTensor::zeros(4, 4, 2)).unwrap();
        assert!(zero.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn corrupted_spectrum_is_rejected() {
        let mut s = SpectrumTensor::zeros(4, 4, 1);
        s.set(1, 0, 0, Complex64::new(1.0, 0.0));
        assert!(matches!(
            inverse_dft(&s),
            Err(Error::ImaginaryResidueTooLarge { .. })
        ));
    }

    #[test]
    fn correlation_theorem() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (m, n) in [(8, 8), (5, 7), (2, 3)] {
            let a = random_tensor(&mut rng, m, n, 1);
            let b = random_tensor(&mut rng, m, n, 1);
            let prod = conj_hadamard(&forward_dft(&a), &forward_dft(&b)).unwrap();
            let fast = inverse_dft(&prod).unwrap();
            let slow = naive_circular_correlation(a.data(), b.data(), m, n);
            for (x, y) in fast.data().iter().zip(&slow) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gaussian_label_values() {
        let y = gaussian_label(50, 50, (50.0f64 * 50.0).sqrt() / 16.0);
        assert_eq!(y.map.get(0, 0), 1.0);
        // exp(-1 / (2 * 3.125²))
        assert!((y.map.get(0, 1) - 0.950_088_634).abs() < 1e-9);
        assert!((y.map.get(49, 0) - y.map.get(1, 0)).abs() < 1e-15);
        assert!(y.map.data.iter().all(|v| *v > 0.0 && *v <= 1.0));
        let flat = gaussian_label(6, 6, 1e9);
        assert!(flat.map.data.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn hann_window_conventions() {
        assert_eq!(cosine_window(1, 1).data, vec![1.0]);
        let h = hann(4);
        let golden = [0.0, 0.75, 0.75, 0.0];
        for (a, b) in h.iter().zip(golden) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = cosine_window(7, 9);
        assert_eq!(w.argmax(), (3, 4));
        assert!((w.get(3, 4) - 1.0).abs() < 1e-15);
        for n in 0..9 {
            assert_eq!(w.get(0, n), 0.0);
            assert_eq!(w.get(6, n), 0.0);
        }
        assert!(w.data.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn elementwise_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = forward_dft(&random_tensor(&mut rng, 3, 4, 2));
        let b = forward_dft(&random_tensor(&mut rng, 3, 4, 2));
        let mut ones = SpectrumTensor::zeros(3, 4, 2);
        ones.data_mut().iter_mut().for_each(|c| *c = Complex64::new(1.0, 0.0));
        assert_eq!(hadamard(&a, &ones).unwrap(), a);
        let p = hadamard(&a, &b).unwrap();
        for i in 0..a.data().len() {
            assert_eq!(p.data()[i], a.data()[i] * b.data()[i]);
        }
        let q = elementwise_div(&a, &SpectrumTensor::zeros(3, 4, 2), 1e-4).unwrap();
        for i in 0..a.data().len() {
            assert!((q.data()[i] - a.data()[i] / 1e-4).norm() < 1e-6);
            assert!(q.data()[i].re.is_finite());
        }
        let c = SpectrumTensor::zeros(2, 4, 2);
        assert!(matches!(hadamard(&a, &c), Err(Error::ShapeMismatch { .. })));
    }

    proptest::proptest! {
        #[test]
        fn parseval(m in 1usize..=16, n in 1usize..=16, d in 1usize..=3, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(&mut rng, m, n, d);
            let lhs = t.norm_sq() * (m * n) as f64;
            let rhs = forward_dft(&t).norm_sq();
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-6 * lhs.max(1e-300));
        }

        #[test]
        fn dft_is_linear(seed in 0u64..1000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_tensor(&mut rng, 5, 6, 2);
            let b = random_tensor(&mut rng, 5, 6, 2);
            let combo = FeatureTensor::from_fn(5, 6, 2, |m, n, d| alpha * a.get(m, n, d) + beta * b.get(m, n, d));
            let (fa, fb, fc) = (forward_dft(&a), forward_dft(&b), forward_dft(&combo));
            for i in 0..fc.data().len() {
                let expect = fa.data()[i] * alpha + fb.data()[i] * beta;
                proptest::prop_assert!((fc.data()[i] - expect).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn signed_offsets() {
        assert_eq!(signed_offset(0, 50), 0.0);
        assert_eq!(signed_offset(24, 50), 24.0);
        assert_eq!(signed_offset(25, 50), -25.0);
        assert_eq!(signed_offset(49, 50), -1.0);
        assert_eq!(signed_offset(2, 5), 2.0);
        assert_eq!(signed_offset(3, 5), -2.0);
    }
}
