use sparsecf_core::eval::synth::{MovingBox, SynthSpec};
use sparsecf_core::eval::{cle, run_ope, SynthSequence};
use sparsecf_core::tracker::{track_sequence, Tracker, TrackerConfig};
use sparsecf_core::Image;

/// A 50 px target, so the 4x search region maps 1:1 onto the 200 px patch.
fn square(frames: usize, vx: f64, vy: f64) -> SynthSequence {
    SynthSpec {
        frames,
        target_w: 50.0,
        target_h: 50.0,
        target: MovingBox {
            x: 140.0,
            y: 120.0,
            vx,
            vy,
        },
        ..SynthSpec::default()
    }
    .render()
    .unwrap()
}

fn frames(seq: &SynthSequence) -> impl Iterator<Item = sparsecf_core::Result<Image>> + '_ {
    seq.frames.iter().cloned().map(Ok)
}

fn mean_cle(seq: &SynthSequence, cfg: &TrackerConfig) -> f64 {
    let out = track_sequence(frames(seq), seq.ground_truth[0], cfg).unwrap();
    let total: f64 = out.boxes.iter().zip(&seq.ground_truth).map(|(p, g)| cle(p, g)).sum();
    total / out.boxes.len() as f64
}

#[test]
fn self_detection_peaks_at_the_label_centre() {
    let seq = square(1, 0.0, 0.0);
    let t = Tracker::init(&seq.frames[0], seq.ground_truth[0], &TrackerConfig::default()).unwrap();
    let det = t.detect(&seq.frames[0]).unwrap();
    let (m, n) = det.response.argmax();
    assert!(m.abs_diff(25) <= 1 && n.abs_diff(25) <= 1, "peak at {m},{n}");
    let pool = t.pool().unwrap();
    assert_eq!(pool.len(), 1);
    assert_eq!(pool.entries()[0].frame_index, 1);
}

#[test]
fn static_target_stays_put() {
    let seq = square(2, 0.0, 0.0);
    let t = Tracker::init(&seq.frames[0], seq.ground_truth[0], &TrackerConfig::default()).unwrap();
    let det = t.detect(&seq.frames[1]).unwrap();
    let cell = det.grid.cell_w;
    assert!((det.bbox.cx - seq.ground_truth[0].cx).abs() <= 0.25 * cell);
    assert!((det.bbox.cy - seq.ground_truth[0].cy).abs() <= 0.25 * cell);
}

#[test]
fn eight_pixel_shift_moves_the_peak_two_cells() {
    // Frame 2 is frame 1 moved right by exactly 8 px, noise included.
    let seq = square(1, 0.0, 0.0);
    let f = &seq.frames[0];
    let moved = Image::from_fn(f.width(), f.height(), f.channels(), |x, y, c| f.get(x.saturating_sub(8), y, c));
    let t = Tracker::init(f, seq.ground_truth[0], &TrackerConfig::default()).unwrap();
    let det = t.detect(&moved).unwrap();
    assert_eq!(det.grid.cell_w, 4.0);
    let still = t.detect(f).unwrap().response.argmax();
    assert_eq!(det.response.argmax(), (still.0, still.1 + 2));
}

#[test]
fn one_frame_gives_the_initial_box() {
    let seq = square(1, 0.0, 0.0);
    let out = track_sequence(frames(&seq), seq.ground_truth[0], &TrackerConfig::default()).unwrap();
    assert_eq!(out.boxes, vec![seq.ground_truth[0]]);
    assert_eq!(out.reports.len(), 1);
}

#[test]
fn strong_outside_weight_gives_exact_zeros() {
    let seq = square(1, 0.0, 0.0);
    let zeros = |omega_outside: f64| {
        let cfg = TrackerConfig {
            omega_outside,
            ..TrackerConfig::default()
        };
        let t = Tracker::init(&seq.frames[0], seq.ground_truth[0], &cfg).unwrap();
        t.model().spatial().data().iter().filter(|v| **v == 0.0).count()
    };
    let (weak, strong) = (zeros(1e-6), zeros(10.0));
    assert!(strong >= 1);
    assert!(strong >= weak);
}

#[test]
fn same_trajectory_across_runs_and_thread_counts() {
    let seqs = vec![square(12, 1.5, -0.5), square(12, -2.0, 1.0)];
    let configs = vec![
        ("full".to_string(), TrackerConfig::variant("full").unwrap()),
        ("baseline".to_string(), TrackerConfig::variant("baseline").unwrap()),
    ];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_ope(&seqs, &configs).unwrap())
            .into_iter()
            .map(|o| o.track.boxes)
            .collect::<Vec<_>>()
    };
    let one = run(1);
    assert_eq!(one, run(1));
    assert_eq!(one, run(3));
}

#[test]
fn boxes_stay_sane() {
    // Fast motion toward the corner drives the tracker off the target.
    for (vx, vy) in [(6.0, 5.0), (-7.0, -6.0), (0.0, 9.0)] {
        let seq = square(20, vx, vy);
        let out = track_sequence(frames(&seq), seq.ground_truth[0], &TrackerConfig::default()).unwrap();
        let (w, h) = (seq.frames[0].width() as f64, seq.frames[0].height() as f64);
        for b in &out.boxes {
            assert!(b.w > 0.0 && b.h > 0.0);
            assert!(b.cx >= 1.0 - b.w && b.cx <= w + b.w, "{b:?}");
            assert!(b.cy >= 1.0 - b.h && b.cy <= h + b.h, "{b:?}");
        }
    }
}

#[test]
fn context_learning_helps_next_to_a_twin() {
    let seq = SynthSpec {
        frames: 40,
        target: MovingBox {
            x: 120.0,
            y: 120.0,
            vx: 1.5,
            vy: 0.5,
        },
        twins: vec![MovingBox {
            x: 160.0,
            y: 120.0,
            vx: 1.5,
            vy: 0.5,
        }],
        ..SynthSpec::default()
    }
    .render()
    .unwrap();
    let on = mean_cle(&seq, &TrackerConfig::variant("acl").unwrap());
    let off = mean_cle(&seq, &TrackerConfig::variant("baseline").unwrap());
    assert!(on < off, "acl {on:.3} px, baseline {off:.3} px");
}
