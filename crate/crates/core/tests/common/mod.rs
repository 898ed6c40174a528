#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsecf_core::numeric::gaussian_label;
use sparsecf_core::solver::{AdmmConfig, ContextSample, FilterBank, SpatialWeightMap, TrainingProblem};
use sparsecf_core::{FeatureTensor, LabelMap};

/// Matrix of `w ↦ a ∗ w` (circular convolution) on row-major `rows x cols` images.
pub fn convolution_matrix(a: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    let n = rows * cols;
    DMatrix::from_fn(n, n, |t, s| {
        let (tm, tn) = (t / cols, t % cols);
        let (sm, sn) = (s / cols, s % cols);
        a[((tm + rows - sm) % rows) * cols + (tn + cols - sn) % cols]
    })
}

/// Owned random training instance.
pub struct Instance {
    pub x: FeatureTensor,
    pub y: LabelMap,
    pub contexts: Vec<ContextSample>,
    pub keyfilter: Option<FilterBank>,
    pub omega: SpatialWeightMap,
    pub cfg: AdmmConfig,
}

impl Instance {
    pub fn problem(&self) -> TrainingProblem<'_> {
        TrainingProblem {
            x: &self.x,
            y: &self.y,
            contexts: &self.contexts,
            keyfilter: self.keyfilter.as_ref(),
            omega: &self.omega,
            cfg: &self.cfg,
            frame: 0,
        }
    }
}

pub fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, channels: usize, std: f64) -> FeatureTensor {
    // Uniform with the requested standard deviation.
    let half = std * 3f64.sqrt();
    FeatureTensor::from_fn(rows, cols, channels, |_, _, _| rng.gen_range(-half..half))
}

/// Random instance: at most 8x8, at most 2 channels, 0 to 2 context samples.
pub fn random_instance(seed: u64, iterations: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.gen_range(3..=8);
    let cols = rng.gen_range(3..=8);
    let channels = rng.gen_range(1..=2);
    // Magnitude of a windowed feature stack.
    let std = 0.25;
    let x = random_tensor(&mut rng, rows, cols, channels, std);
    let y = gaussian_label(rows, cols, rng.gen_range(0.5..1.5));
    let contexts = (0..rng.gen_range(0..=2))
        .map(|_| ContextSample {
            features: random_tensor(&mut rng, rows, cols, channels, std),
            weight: rng.gen_range(0.05..1.0),
        })
        .collect();
    let keyfilter = rng
        .gen_bool(0.7)
        .then(|| FilterBank::from_spatial(random_tensor(&mut rng, rows, cols, channels, 0.1)));
    let omega = SpatialWeightMap {
        omega: sparsecf_core::Map2D::from_fn(rows, cols, |_, _| rng.gen_range(0.001..0.1)),
    };
    let cfg = AdmmConfig {
        lambda: rng.gen_range(0.01..0.5),
        iterations,
        denominator_floor: 0.0,
        ..AdmmConfig::default()
    };
    Instance {
        x,
        y,
        contexts,
        keyfilter,
        omega,
        cfg,
    }
}

/// The objective restricted to one channel, as `½ wᵀHw − bᵀw + c + Σ ω|w|`.
pub struct ChannelQuadratic {
    pub h: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
    pub omega: DVector<f64>,
}

pub fn channel_quadratics(p: &TrainingProblem) -> Vec<ChannelQuadratic> {
    let (rows, cols, channels) = p.x.shape();
    let n = rows * cols;
    let lambda = if p.keyfilter.is_some() { p.cfg.lambda } else { 0.0 };
    let y = DVector::from_column_slice(&p.y.map.data);
    (0..channels)
        .map(|d| {
            let a = convolution_matrix(p.x.channel(d), rows, cols);
            let mut h = a.transpose() * &a + DMatrix::identity(n, n) * lambda;
            let mut b = a.transpose() * &y;
            let mut c = 0.5 * y.norm_squared();
            for ctx in p.contexts {
                let cm = convolution_matrix(ctx.features.channel(d), rows, cols);
                h += cm.transpose() * &cm * ctx.weight;
            }
            if let Some(k) = p.keyfilter {
                let kd = DVector::from_column_slice(k.spatial().channel(d));
                b += &kd * lambda;
                c += 0.5 * lambda * kd.norm_squared();
            }
            ChannelQuadratic {
                h,
                b,
                c,
                omega: DVector::from_column_slice(&p.omega.omega.data),
            }
        })
        .collect()
}

impl ChannelQuadratic {
    pub fn value(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.h * w)) - self.b.dot(w) + self.c + self.omega.dot(&w.abs())
    }

    /// FISTA with gradient-based restart, run to stagnation.
    pub fn minimize(&self) -> DVector<f64> {
        let n = self.b.len();
        let lipschitz = self.h.clone().symmetric_eigenvalues().max().max(1e-12);
        let step = 1.0 / lipschitz;
        let prox = |z: DVector<f64>| {
            DVector::from_fn(n, |i, _| {
                let t = step * self.omega[i];
                z[i].signum() * (z[i].abs() - t).max(0.0)
            })
        };
        let mut x = DVector::zeros(n);
        let mut yk = x.clone();
        let mut t = 1.0f64;
        for _ in 0..200_000 {
            let grad = &self.h * &yk - &self.b;
            let next = prox(&yk - grad * step);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let diff = &next - &x;
            // Restart momentum when it points uphill.
            let restart = (&yk - &next).dot(&diff) > 0.0;
            if restart {
                yk = next.clone();
                t = 1.0;
            } else {
                yk = &next + diff.clone() * ((t - 1.0) / t_next);
                t = t_next;
            }
            let moved = diff.amax();
            x = next;
            if moved < 1e-14 {
                break;
            }
        }
        x
    }
}

/// Reference optimum of the full objective (sum over channels).
pub fn reference_minimum(p: &TrainingProblem) -> (f64, FeatureTensor) {
    let (rows, cols, channels) = p.x.shape();
    let mut total = 0.0;
    let mut w = FeatureTensor::zeros(rows, cols, channels);
    for (d, q) in channel_quadratics(p).iter().enumerate() {
        let wd = q.minimize();
        total += q.value(&wd);
        w.channel_mut(d).copy_from_slice(wd.as_slice());
    }
    (total, w)
}
