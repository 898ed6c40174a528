//! Sequence loading, synthetic data, one-pass evaluation and reports.

pub mod dataset;
pub mod metrics;
pub mod report;
pub mod suites;
pub mod synth;

use std::collections::BTreeSet;

use rayon::prelude::*;

pub use dataset::{load_root, load_sequence, SequenceRecord};
pub use metrics::{cle, iou, mean_scores, summarize, EvalSummary, MeanScores, Series};
pub use report::{emit_report, RunSummary};
pub use synth::{SynthSequence, SynthSpec};

use crate::error::Result;
use crate::geometry::BoundingBox;
use crate::image::Image;
use crate::tracker::{track_sequence, TrackResult, TrackerConfig};

/// Anything that yields frames with ground truth.
pub trait Sequence: Sync {
    fn name(&self) -> &str;
    fn ground_truth(&self) -> &[BoundingBox];
    fn attributes(&self) -> &BTreeSet<String>;
    fn frames(&self) -> Box<dyn Iterator<Item = Result<Image>> + '_>;
}

impl Sequence for SequenceRecord {
    fn name(&self) -> &str {
        &self.name
    }
    fn ground_truth(&self) -> &[BoundingBox] {
        &self.ground_truth
    }
    fn attributes(&self) -> &BTreeSet<String> {
        &self.attributes
    }
    fn frames(&self) -> Box<dyn Iterator<Item = Result<Image>> + '_> {
        Box::new(SequenceRecord::frames(self))
    }
}

impl Sequence for SynthSequence {
    fn name(&self) -> &str {
        &self.name
    }
    fn ground_truth(&self) -> &[BoundingBox] {
        &self.ground_truth
    }
    fn attributes(&self) -> &BTreeSet<String> {
        &self.attributes
    }
    fn frames(&self) -> Box<dyn Iterator<Item = Result<Image>> + '_> {
        Box::new(SynthSequence::frames(self))
    }
}

/// One tracker run with its scores.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub track: TrackResult,
}

/// Tracks `seq` from its first ground-truth box and scores the result.
pub fn evaluate<S: Sequence + ?Sized>(seq: &S, config_name: &str, cfg: &TrackerConfig) -> Result<RunOutcome> {
    let gt = seq.ground_truth();
    let init = *gt.first().ok_or(crate::error::Error::EmptySeries)?;
    let track = track_sequence(seq.frames(), init, cfg)?;
    let series = Series::from_boxes(&track.boxes, gt, track.fps())?;
    Ok(RunOutcome {
        summary: RunSummary {
            sequence: seq.name().to_string(),
            config: config_name.to_string(),
            summary: summarize(&series)?,
        },
        track,
    })
}

/// One-pass evaluation of every configuration on every sequence, in
/// parallel. Results are ordered by configuration, then sequence.
pub fn run_ope<S: Sequence>(sequences: &[S], configs: &[(String, TrackerConfig)]) -> Result<Vec<RunOutcome>> {
    let jobs: Vec<(&(String, TrackerConfig), &S)> = configs
        .iter()
        .flat_map(|c| sequences.iter().map(move |s| (c, s)))
        .collect();
    jobs.par_iter()
        .map(|((name, cfg), seq)| evaluate(*seq, name, cfg))
        .collect()
}
