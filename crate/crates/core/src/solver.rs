//! ADMM training of the sparse correlation filter.
//!
//! The learned filter minimizes, channel by channel,
//!
//! ```text
//! ½‖x_d ∗ w_d − y‖² + ½ Σ_p ϖ_p ‖c_{p,d} ∗ w_d‖² + (λ/2)‖w_d − k_d‖² + Σ_{m,n} ω(m,n)|w_d(m,n)|
//! ```
//!
//! summed over channels `d` (`∗` is circular convolution, `k` the reference
//! filter). Splitting `w = u` gives the usual three-block iteration: a
//! per-frequency closed-form `w` solve, a soft-threshold `u` solve and a
//! multiplier update, with the penalty `μ` grown geometrically.
//!
//! `v` is the unscaled Lagrange multiplier: the `w`/`u` steps see it as
//! `v / μ`, and it is updated by `v += μ (w − u)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{
    fft2_real, forward_dft, inverse_dft, FeatureTensor, LabelMap, Map2D, SpectrumTensor,
};

/// Spatial filter with its cached spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    spatial: FeatureTensor,
    spectrum: SpectrumTensor,
}

impl FilterBank {
    pub fn from_spatial(spatial: FeatureTensor) -> Self {
        let spectrum = forward_dft(&spatial);
        FilterBank { spatial, spectrum }
    }

    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        Self::from_spatial(FeatureTensor::zeros(rows, cols, channels))
    }

    pub fn spatial(&self) -> &FeatureTensor {
        &self.spatial
    }

    pub fn spectrum(&self) -> &SpectrumTensor {
        &self.spectrum
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.spatial.shape()
    }

    /// `(1 − rate)·self + rate·other`, in both domains.
    pub fn lerp(&self, other: &FilterBank, rate: f64) -> Result<FilterBank> {
        let spatial = self.spatial.lerp(&other.spatial, rate)?;
        let mut spectrum = self.spectrum.clone();
        spectrum
            .data_mut()
            .iter_mut()
            .zip(other.spectrum.data())
            .for_each(|(a, b)| *a = *a * (1.0 - rate) + b * rate);
        Ok(FilterBank { spatial, spectrum })
    }
}

/// Per-cell weights of the ℓ1 penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeightMap {
    pub omega: Map2D,
}

impl SpatialWeightMap {
    pub fn constant(rows: usize, cols: usize, value: f64) -> Self {
        SpatialWeightMap {
            omega: Map2D::from_fn(rows, cols, |_, _| value),
        }
    }

    /// `inside` on a `support` (rows, cols) rectangle centred on cell
    /// `(rows / 2, cols / 2)`, `outside` elsewhere, joined by a one-cell
    /// linear ramp. The filter's support sits there because the label
    /// peaks at `(0, 0)` while the target sits in the middle of the patch.
    pub fn two_level(
        rows: usize,
        cols: usize,
        support: (f64, f64),
        inside: f64,
        outside: f64,
    ) -> Self {
        let (cr, cc) = ((rows / 2) as f64, (cols / 2) as f64);
        let (hr, hc) = (support.0 / 2.0, support.1 / 2.0);
        let omega = Map2D::from_fn(rows, cols, |m, n| {
            let excess = ((m as f64 - cr).abs() - hr)
                .max((n as f64 - cc).abs() - hc)
                .clamp(0.0, 1.0);
            inside + (outside - inside) * excess
        });
        SpatialWeightMap { omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    /// Weight of the reference-filter (temporal) term.
    pub lambda: f64,
    pub mu0: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub iterations: usize,
    pub use_sherman_morrison: bool,
    /// Added to every per-frequency denominator.
    pub denominator_floor: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            lambda: 0.01,
            mu0: 0.01,
            rho: 1.1,
            mu_max: 10.0,
            iterations: 3,
            use_sherman_morrison: false,
            denominator_floor: 1e-4,
        }
    }
}

/// A context (negative) sample with its suppression weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextSample {
    pub features: FeatureTensor,
    pub weight: f64,
}

/// Everything one filter solve needs.
#[derive(Debug, Clone, Copy)]
pub struct TrainingProblem<'a> {
    pub x: &'a FeatureTensor,
    pub y: &'a LabelMap,
    pub contexts: &'a [ContextSample],
    /// Reference filter of the temporal term; `None` disables the term.
    pub keyfilter: Option<&'a FilterBank>,
    pub omega: &'a SpatialWeightMap,
    pub cfg: &'a AdmmConfig,
    /// Reported in errors only.
    pub frame: usize,
}

impl TrainingProblem<'_> {
    /// Effective temporal weight.
    pub fn lambda(&self) -> f64 {
        if self.keyfilter.is_some() {
            self.cfg.lambda
        } else {
            0.0
        }
    }

    fn validate(&self) -> Result<()> {
        let (rows, cols, channels) = self.x.shape();
        let mismatch = |right: (usize, usize, usize)| Error::ShapeMismatch {
            left: (rows, cols, channels),
            right,
        };
        if (self.y.map.rows, self.y.map.cols) != (rows, cols) {
            return Err(mismatch((self.y.map.rows, self.y.map.cols, 1)));
        }
        if (self.omega.omega.rows, self.omega.omega.cols) != (rows, cols) {
            return Err(mismatch((self.omega.omega.rows, self.omega.omega.cols, 1)));
        }
        for c in self.contexts {
            self.x.check_same_shape(&c.features)?;
        }
        if let Some(k) = self.keyfilter {
            self.x.check_same_shape(k.spatial())?;
        }
        Ok(())
    }
}

/// Frequency-domain quantities that stay fixed across ADMM iterations.
pub struct Prepared {
    rows: usize,
    cols: usize,
    channels: usize,
    /// `conj(X̂)∘Ŷ + λ Ŵ_k`
    numerator: Vec<Complex64>,
    /// Dense: `|X̂|² + Σ ϖ |Ĉ|²`; Sherman–Morrison: `|Q̂|²`.
    energy: Vec<f64>,
    lambda: f64,
    floor: f64,
    sherman_morrison: bool,
}

impl Prepared {
    pub fn new(p: &TrainingProblem) -> Result<Self> {
        p.validate()?;
        let (rows, cols, channels) = p.x.shape();
        let len = rows * cols;
        let lambda = p.lambda();
        let xf = forward_dft(p.x);
        let yf = fft2_real(&p.y.map.data, rows, cols);
        let cfs: Vec<(SpectrumTensor, f64)> = p
            .contexts
            .iter()
            .map(|c| (forward_dft(&c.features), c.weight))
            .collect();
        let mut numerator = Vec::with_capacity(len * channels);
        let mut energy = Vec::with_capacity(len * channels);
        for d in 0..channels {
            let x = xf.channel(d);
            for i in 0..len {
                let mut num = x[i].conj() * yf[i];
                if let Some(k) = p.keyfilter {
                    num += k.spectrum().channel(d)[i] * lambda;
                }
                numerator.push(num);
                let e = if p.cfg.use_sherman_morrison {
                    let q = cfs
                        .iter()
                        .fold(x[i], |acc, (c, w)| acc + c.channel(d)[i] * w.sqrt());
                    q.norm_sqr()
                } else {
                    cfs.iter()
                        .fold(x[i].norm_sqr(), |acc, (c, w)| acc + w * c.channel(d)[i].norm_sqr())
                };
                energy.push(e);
            }
        }
        Ok(Prepared {
            rows,
            cols,
            channels,
            numerator,
            energy,
            lambda,
            floor: p.cfg.denominator_floor,
            sherman_morrison: p.cfg.use_sherman_morrison,
        })
    }
}

/// Closed-form `w` update given the current `u`, multiplier `v` and `μ`.
pub fn w_step(
    prep: &Prepared,
    u: &FeatureTensor,
    v: &FeatureTensor,
    mu: f64,
) -> SpectrumTensor {
    let (rows, cols, channels) = (prep.rows, prep.cols, prep.channels);
    let len = rows * cols;
    let mut out = Vec::with_capacity(len * channels);
    let cf = forward_dft(&consensus(u, v, mu));
    for d in 0..channels {
        let cf = cf.channel(d);
        for i in 0..len {
            let k = d * len + i;
            let psi = prep.numerator[k] + cf[i];
            let e = prep.energy[k];
            let w = if prep.sherman_morrison {
                // (aI + q qᴴ)⁻¹ ψ with a = λ + μ, per frequency.
                let a = prep.lambda + mu + prep.floor;
                psi * ((1.0 - e / (a + e)) / a)
            } else {
                psi / (e + prep.lambda + mu + prep.floor)
            };
            out.push(w);
        }
    }
    SpectrumTensor::from_vec(rows, cols, channels, out).expect("consistent shape")
}

/// `μ u − v`.
fn consensus(u: &FeatureTensor, v: &FeatureTensor, mu: f64) -> FeatureTensor {
    let (rows, cols, channels) = u.shape();
    let data = u.data().iter().zip(v.data()).map(|(&a, &b)| mu * a - b).collect();
    FeatureTensor::from_vec(rows, cols, channels, data).expect("consistent shape")
}

/// Soft threshold `sign(x)·max(|x| − β, 0)`.
#[inline]
pub fn shrink(x: f64, beta: f64) -> f64 {
    x.signum() * (x.abs() - beta).max(0.0)
}

/// `u = S(w + v/μ, ω/μ)` element-wise.
pub fn u_step(w: &FeatureTensor, v: &FeatureTensor, omega: &Map2D, mu: f64) -> FeatureTensor {
    let (rows, cols, channels) = w.shape();
    let len = rows * cols;
    let mut out = Vec::with_capacity(len * channels);
    for d in 0..channels {
        let (wc, vc) = (w.channel(d), v.channel(d));
        for i in 0..len {
            out.push(shrink(wc[i] + vc[i] / mu, omega.data[i] / mu));
        }
    }
    FeatureTensor::from_vec(rows, cols, channels, out).expect("consistent shape")
}

/// `v + μ (w − u)`.
pub fn v_step(v: &FeatureTensor, w: &FeatureTensor, u: &FeatureTensor, mu: f64) -> FeatureTensor {
    let mut out = v.clone();
    out.data_mut()
        .iter_mut()
        .zip(w.data().iter().zip(u.data()))
        .for_each(|(o, (a, b))| *o += mu * (a - b));
    out
}

/// `min(μ_max, ρ μ)`.
pub fn mu_step(mu: f64, cfg: &AdmmConfig) -> f64 {
    cfg.mu_max.min(cfg.rho * mu)
}

/// Penalty after `k` steps in closed form, `min(μ_max, μ0 ρ^k)`. The solver
/// uses this rather than iterating [`mu_step`], which drifts by a few ulps.
pub fn mu_at(cfg: &AdmmConfig, k: usize) -> f64 {
    cfg.mu_max.min(cfg.mu0 * cfg.rho.powi(k as i32))
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    /// The sparse iterate `u`, used as the learned filter.
    pub filter: FilterBank,
    /// Last `w` iterate, for diagnostics.
    pub w_iterate: FeatureTensor,
    pub final_mu: f64,
}

pub fn solve(p: &TrainingProblem) -> Result<SolveOutput> {
    let prep = Prepared::new(p)?;
    let (rows, cols, channels) = p.x.shape();
    let mut u = FeatureTensor::zeros(rows, cols, channels);
    let mut v = FeatureTensor::zeros(rows, cols, channels);
    let mut w = FeatureTensor::zeros(rows, cols, channels);
    for iteration in 0..p.cfg.iterations {
        let mu = mu_at(p.cfg, iteration);
        w = inverse_dft(&w_step(&prep, &u, &v, mu))?;
        u = u_step(&w, &v, &p.omega.omega, mu);
        v = v_step(&v, &w, &u, mu);
        if !(u.is_finite() && v.is_finite() && w.is_finite()) {
            return Err(Error::NonFiniteIterate {
                frame: p.frame,
                iteration,
            });
        }
    }
    Ok(SolveOutput {
        filter: FilterBank::from_spatial(u),
        w_iterate: w,
        final_mu: mu_at(p.cfg, p.cfg.iterations),
    })
}

/// Sparse filter without context samples or a reference filter. Kept
/// separate from [`solve`] so the plain tracker never touches them.
pub fn solve_plain(
    x: &FeatureTensor,
    y: &LabelMap,
    omega: &SpatialWeightMap,
    cfg: &AdmmConfig,
    frame: usize,
) -> Result<SolveOutput> {
    let (rows, cols, channels) = x.shape();
    if (y.map.rows, y.map.cols) != (rows, cols) || (omega.omega.rows, omega.omega.cols) != (rows, cols) {
        return Err(Error::ShapeMismatch {
            left: (rows, cols, channels),
            right: (y.map.rows, y.map.cols, 1),
        });
    }
    let xf = forward_dft(x);
    let yf = fft2_real(&y.map.data, rows, cols);
    let mut u = FeatureTensor::zeros(rows, cols, channels);
    let mut v = FeatureTensor::zeros(rows, cols, channels);
    let mut w = FeatureTensor::zeros(rows, cols, channels);
    for iteration in 0..cfg.iterations {
        let mu = mu_at(cfg, iteration);
        let mut wf = SpectrumTensor::zeros(rows, cols, channels);
        let cf_all = forward_dft(&consensus(&u, &v, mu));
        for d in 0..channels {
            let cf = cf_all.channel(d);
            let xd = xf.channel(d);
            for (i, out) in wf.channel_mut(d).iter_mut().enumerate() {
                let psi = xd[i].conj() * yf[i] + cf[i];
                *out = psi / (xd[i].norm_sqr() + mu + cfg.denominator_floor);
            }
        }
        w = inverse_dft(&wf)?;
        u = u_step(&w, &v, &omega.omega, mu);
        v = v_step(&v, &w, &u, mu);
        if !(u.is_finite() && v.is_finite() && w.is_finite()) {
            return Err(Error::NonFiniteIterate { frame, iteration });
        }
    }
    Ok(SolveOutput {
        filter: FilterBank::from_spatial(u),
        w_iterate: w,
        final_mu: mu_at(cfg, cfg.iterations),
    })
}

/// Naive circular convolution of two `rows x cols` images.
fn circular_convolution(a: &[f64], b: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for tm in 0..rows {
        for tn in 0..cols {
            let mut acc = 0.0;
            for m in 0..rows {
                let bm = (tm + rows - m) % rows;
                for n in 0..cols {
                    acc += a[m * cols + n] * b[bm * cols + (tn + cols - n) % cols];
                }
            }
            out[tm * cols + tn] = acc;
        }
    }
    out
}

/// Objective value of `w`, evaluated in the spatial domain with naive
/// circular convolutions. `O((MN)²D)`: meant for small problems and tests.
pub fn objective_value(p: &TrainingProblem, w: &FeatureTensor) -> Result<f64> {
    p.validate()?;
    p.x.check_same_shape(w)?;
    let (rows, cols, channels) = p.x.shape();
    let lambda = p.lambda();
    let y = &p.y.map.data;
    let mut total = 0.0;
    for d in 0..channels {
        let wd = w.channel(d);
        let fit = circular_convolution(p.x.channel(d), wd, rows, cols);
        total += 0.5 * fit.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        for c in p.contexts {
            let r = circular_convolution(c.features.channel(d), wd, rows, cols);
            total += 0.5 * c.weight * r.iter().map(|v| v * v).sum::<f64>();
        }
        if let Some(k) = p.keyfilter {
            let kd = k.spatial().channel(d);
            total += 0.5 * lambda * wd.iter().zip(kd).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
        total += wd
            .iter()
            .zip(&p.omega.omega.data)
            .map(|(v, o)| o * v.abs())
            .sum::<f64>();
    }
    Ok(total)
}
