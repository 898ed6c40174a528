use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Precision thresholds 0..=50 px.
pub const PRECISION_POINTS: usize = 51;
/// Success thresholds 0, 0.05, ..., 1.
pub const SUCCESS_POINTS: usize = 21;
pub const DP_THRESHOLD: f64 = 20.0;
pub const OP_THRESHOLD: f64 = 0.5;

/// Centre location error in pixels.
pub fn cle(a: &BoundingBox, b: &BoundingBox) -> f64 {
    (a.cx - b.cx).hypot(a.cy - b.cy)
}

/// Intersection over union of the continuous rectangles `[c - s/2, c + s/2]`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let overlap = |ca: f64, sa: f64, cb: f64, sb: f64| {
        let lo = (ca - sa / 2.0).max(cb - sb / 2.0);
        let hi = (ca + sa / 2.0).min(cb + sb / 2.0);
        (hi - lo).max(0.0)
    };
    let inter = overlap(a.cx, a.w, b.cx, b.w) * overlap(a.cy, a.h, b.cy, b.h);
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        (inter / union).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

pub fn success_threshold(i: usize) -> f64 {
    i as f64 / (SUCCESS_POINTS - 1) as f64
}

/// Per-frame errors of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub cle: Vec<f64>,
    pub iou: Vec<f64>,
    pub fps: f64,
}

impl Series {
    pub fn from_boxes(pred: &[BoundingBox], gt: &[BoundingBox], fps: f64) -> Result<Series> {
        if pred.len() != gt.len() {
            return Err(Error::CountMismatch {
                frames: pred.len(),
                boxes: gt.len(),
            });
        }
        Ok(Series {
            cle: pred.iter().zip(gt).map(|(p, g)| cle(p, g)).collect(),
            iou: pred.iter().zip(gt).map(|(p, g)| iou(p, g)).collect(),
            fps,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub series: Series,
    /// Fraction of frames with CLE <= 20 px.
    pub dp_at_20: f64,
    /// Fraction of frames with IoU > 0.5.
    pub op_at_50: f64,
    /// Mean of the success curve samples.
    pub auc: f64,
    pub precision_curve: Vec<f64>,
    pub success_curve: Vec<f64>,
    pub fps: f64,
}

fn fraction(values: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    values.iter().filter(|&&v| pred(v)).count() as f64 / values.len() as f64
}

pub fn summarize(series: &Series) -> Result<EvalSummary> {
    if series.cle.is_empty() || series.iou.is_empty() {
        return Err(Error::EmptySeries);
    }
    if series.cle.len() != series.iou.len() {
        return Err(Error::CountMismatch {
            frames: series.cle.len(),
            boxes: series.iou.len(),
        });
    }
    let precision_curve: Vec<f64> = (0..PRECISION_POINTS)
        .map(|t| fraction(&series.cle, |c| c <= t as f64))
        .collect();
    let success_curve: Vec<f64> = (0..SUCCESS_POINTS)
        .map(|i| fraction(&series.iou, |o| o > success_threshold(i)))
        .collect();
    Ok(EvalSummary {
        dp_at_20: fraction(&series.cle, |c| c <= DP_THRESHOLD),
        op_at_50: fraction(&series.iou, |o| o > OP_THRESHOLD),
        auc: success_curve.iter().sum::<f64>() / SUCCESS_POINTS as f64,
        precision_curve,
        success_curve,
        fps: series.fps,
        series: series.clone(),
    })
}

/// Scores averaged over sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub sequences: usize,
    pub dp_at_20: f64,
    pub op_at_50: f64,
    pub auc: f64,
    pub fps: f64,
    pub precision_curve: Vec<f64>,
    pub success_curve: Vec<f64>,
}

pub fn mean_scores<'a>(summaries: impl IntoIterator<Item = &'a EvalSummary>) -> Result<MeanScores> {
    let list: Vec<&EvalSummary> = summaries.into_iter().collect();
    if list.is_empty() {
        return Err(Error::EmptySeries);
    }
    let n = list.len() as f64;
    let mean = |f: &dyn Fn(&EvalSummary) -> f64| list.iter().map(|s| f(s)).sum::<f64>() / n;
    let mean_curve = |f: &dyn Fn(&EvalSummary) -> &Vec<f64>, len: usize| {
        (0..len)
            .map(|i| list.iter().map(|s| f(s)[i]).sum::<f64>() / n)
            .collect::<Vec<f64>>()
    };
    Ok(MeanScores {
        sequences: list.len(),
        dp_at_20: mean(&|s| s.dp_at_20),
        op_at_50: mean(&|s| s.op_at_50),
        auc: mean(&|s| s.auc),
        fps: mean(&|s| s.fps),
        precision_curve: mean_curve(&|s| &s.precision_curve, PRECISION_POINTS),
        success_curve: mean_curve(&|s| &s.success_curve, SUCCESS_POINTS),
    })
}

/// Mean scores over the sequences carrying each attribute tag.
pub fn per_attribute<'a>(
    runs: impl IntoIterator<Item = (&'a BTreeSet<String>, &'a EvalSummary)>,
) -> BTreeMap<String, MeanScores> {
    let mut groups: BTreeMap<String, Vec<&EvalSummary>> = BTreeMap::new();
    for (tags, s) in runs {
        for t in tags {
            groups.entry(t.clone()).or_default().push(s);
        }
    }
    groups
        .into_iter()
        .filter_map(|(t, list)| mean_scores(list).ok().map(|m| (t, m)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(cx: f64, cy: f64) -> BoundingBox {
        BoundingBox::new(cx, cy, 1.0, 1.0).unwrap()
    }

    #[test]
    fn iou_worked_examples() {
        let a = unit(5.0, 5.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(cle(&a, &a), 0.0);
        assert_eq!(iou(&a, &unit(7.0, 5.0)), 0.0);
        assert!((iou(&a, &unit(5.5, 5.5)) - 0.25 / 1.75).abs() < 1e-12);
        assert!((iou(&a, &unit(5.5, 5.0)) - 0.5 / 1.5).abs() < 1e-12);
        assert!((cle(&a, &unit(8.0, 9.0)) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn dp_count() {
        let s = Series {
            cle: vec![5.0, 25.0, 10.0, 30.0],
            iou: vec![0.6, 0.1, 0.5, 0.0],
            fps: 10.0,
        };
        let sum = summarize(&s).unwrap();
        assert_eq!(sum.dp_at_20, 0.5);
        assert_eq!(sum.op_at_50, 0.25);
        assert_eq!(sum.precision_curve.len(), 51);
        assert_eq!(sum.success_curve.len(), 21);
        assert_eq!(sum.precision_curve[5], 0.25);
        assert_eq!(sum.precision_curve[50], 1.0);
    }

    #[test]
    fn perfect_and_lost_runs() {
        let perfect = summarize(&Series {
            cle: vec![0.0; 7],
            iou: vec![1.0; 7],
            fps: 0.0,
        })
        .unwrap();
        assert_eq!(perfect.dp_at_20, 1.0);
        assert!((perfect.auc - 20.0 / 21.0).abs() < 1e-12);
        let lost = summarize(&Series {
            cle: vec![100.0; 3],
            iou: vec![0.0; 3],
            fps: 0.0,
        })
        .unwrap();
        assert_eq!(lost.op_at_50, 0.0);
        assert_eq!(lost.auc, 0.0);
        assert!(matches!(summarize(&Series::default()), Err(Error::EmptySeries)));
    }

    #[test]
    fn attribute_groups() {
        let s = |dp: f64| {
            let mut e = summarize(&Series {
                cle: vec![0.0],
                iou: vec![1.0],
                fps: 1.0,
            })
            .unwrap();
            e.dp_at_20 = dp;
            e
        };
        let (a, b) = (s(1.0), s(0.0));
        let ta: BTreeSet<String> = ["OV".into(), "SOB".into()].into();
        let tb: BTreeSet<String> = ["SOB".into()].into();
        let groups = per_attribute([(&ta, &a), (&tb, &b)]);
        assert_eq!(groups["OV"].dp_at_20, 1.0);
        assert_eq!(groups["SOB"].dp_at_20, 0.5);
        assert_eq!(groups["SOB"].sequences, 2);
    }
}
