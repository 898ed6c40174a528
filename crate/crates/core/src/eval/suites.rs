//! Named synthetic suites used by the acceptance checks and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::synth::{MovingBox, Occluder, SynthSpec};

/// Sequences per seeded suite.
pub const SUITE_SEEDS: u64 = 10;

pub const SUITES: [&str; 3] = ["constant_velocity", "twin_distractor", "occlusion"];

fn tagged(mut spec: SynthSpec, name: &str, seed: u64, tags: &[&str]) -> SynthSpec {
    spec.name = format!("{name}_{seed:02}");
    spec.seed = seed;
    spec.attributes = tags.iter().map(|t| t.to_string()).collect();
    spec
}

/// One textured target moving 2 px right and 1 px down per frame for 30 frames.
pub fn constant_velocity(seed: u64) -> SynthSpec {
    let spec = SynthSpec {
        frames: 30,
        target: MovingBox {
            x: 100.0,
            y: 120.0,
            vx: 2.0,
            vy: 1.0,
        },
        ..SynthSpec::default()
    };
    tagged(spec, "constant_velocity", seed, &["FM"])
}

/// A look-alike drifts across the target's path while the target is
/// briefly hidden.
pub fn twin_distractor(seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(77));
    let offset = rng.gen_range(30.0..40.0);
    let spec = SynthSpec {
        frames: 60,
        target: MovingBox {
            x: 140.0,
            y: 120.0,
            vx: 0.5,
            vy: 0.0,
        },
        twins: vec![MovingBox {
            x: 140.0 + offset,
            y: 124.0,
            vx: -1.0,
            vy: 0.0,
        }],
        twin_similarity: 0.7,
        occluders: vec![Occluder {
            from: 16,
            to: 20,
            margin: 2.0,
        }],
        ..SynthSpec::default()
    };
    tagged(spec, "twin_distractor", seed, &["SOB", "POC"])
}

/// The target is fully hidden in frames 15 to 20 and then reappears.
pub fn occlusion(seed: u64) -> SynthSpec {
    let spec = SynthSpec {
        frames: 40,
        target: MovingBox {
            x: 140.0,
            y: 120.0,
            vx: 1.0,
            vy: 0.5,
        },
        occluders: vec![Occluder {
            from: 15,
            to: 20,
            margin: 4.0,
        }],
        ..SynthSpec::default()
    };
    tagged(spec, "occlusion", seed, &["FOC"])
}

/// Suite member by name.
pub fn suite(name: &str, seed: u64) -> Option<SynthSpec> {
    match name {
        "constant_velocity" => Some(constant_velocity(seed)),
        "twin_distractor" => Some(twin_distractor(seed)),
        "occlusion" => Some(occlusion(seed)),
        _ => None,
    }
}
