//! Inputs shared by the benchmarks, at the sizes the tracker runs with.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsecf_core::eval::synth::{MovingBox, SynthSpec};
use sparsecf_core::eval::SynthSequence;
use sparsecf_core::solver::{AdmmConfig, ContextSample, FilterBank, SpatialWeightMap};
use sparsecf_core::numeric::gaussian_label;
use sparsecf_core::{FeatureTensor, LabelMap};

/// Grid cells per side for a 200 px patch with 4 px cells.
pub const CELLS: usize = 50;
/// 31 HOG channels, 10 colour names and one gray channel.
pub const CHANNELS: usize = 42;

pub fn random_tensor(seed: u64, rows: usize, cols: usize, channels: usize) -> FeatureTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureTensor::from_fn(rows, cols, channels, |_, _, _| rng.gen_range(-0.5..0.5))
}

/// A 480x360 colour sequence with a 50 px target, so search regions are 200 px.
pub fn sequence(frames: usize) -> SynthSequence {
    SynthSpec {
        frames,
        width: 480,
        height: 360,
        target_w: 50.0,
        target_h: 50.0,
        target: MovingBox {
            x: 200.0,
            y: 180.0,
            vx: 1.5,
            vy: 0.5,
        },
        ..SynthSpec::default()
    }
    .render()
    .expect("fixed spec renders")
}

/// Owned inputs of one full-size filter solve.
pub struct Problem {
    pub x: FeatureTensor,
    pub y: LabelMap,
    pub contexts: Vec<ContextSample>,
    pub keyfilter: FilterBank,
    pub omega: SpatialWeightMap,
    pub cfg: AdmmConfig,
}

/// Full-size problem with `distractors` context samples and a reference filter.
pub fn problem(distractors: usize) -> Problem {
    let cells = (CELLS * CELLS) as f64;
    Problem {
        x: random_tensor(1, CELLS, CELLS, CHANNELS),
        y: gaussian_label(CELLS, CELLS, CELLS as f64 / 16.0),
        contexts: (0..distractors)
            .map(|i| ContextSample {
                features: random_tensor(10 + i as u64, CELLS, CELLS, CHANNELS),
                weight: 0.2,
            })
            .collect(),
        keyfilter: FilterBank::from_spatial(random_tensor(2, CELLS, CELLS, CHANNELS)),
        omega: SpatialWeightMap::two_level(CELLS, CELLS, (12.5, 12.5), 1e-3, 0.1),
        cfg: AdmmConfig {
            lambda: 0.01 * cells,
            mu0: 0.01 * cells,
            mu_max: 10.0 * cells,
            ..AdmmConfig::default()
        },
    }
}
