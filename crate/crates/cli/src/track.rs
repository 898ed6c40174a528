use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sparsecf_core::eval::dataset::{format_boxes, load_sequence};
use sparsecf_core::eval::report::write_atomic;
use sparsecf_core::tracker::{FrameReport, Tracker};
use sparsecf_core::{BoundingBox, Error};

use crate::exit::{input, Classify, Outcome};
use crate::overlay;

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Sequence directory with img/ and groundtruth_rect.txt; the first box initializes the tracker.
    #[arg(long)]
    seq: PathBuf,
    /// Predicted boxes, one x,y,w,h line per frame.
    #[arg(long)]
    out: PathBuf,
    /// Per-frame milliseconds, one per line [default: <out>.ms]
    #[arg(long)]
    times: Option<PathBuf>,
    /// JSON tracker config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write every frame with the predicted (red) and true (green) boxes drawn.
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Per-frame JSON lines with peak, distractor count, reference frame and a model digest.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    #[serde(flatten)]
    report: &'a FrameReport,
    model_norm: f64,
    /// Hash of the model's bit pattern; equal digests mean an unchanged model.
    model_digest: String,
}

fn diagnostic(t: &Tracker) -> String {
    let data = t.model().spatial().data();
    let mut h = DefaultHasher::new();
    // Adding +0 folds -0 into +0 so equal values hash alike.
    data.iter().for_each(|v| (v + 0.0).to_bits().hash(&mut h));
    let d = Diagnostic {
        report: t.last_report(),
        model_norm: data.iter().map(|v| v * v).sum::<f64>().sqrt(),
        model_digest: format!("{:016x}", h.finish()),
    };
    serde_json::to_string(&d).expect("plain record")
}

pub fn run(args: TrackArgs) -> Outcome {
    let cfg = crate::config::load_or_default(args.config.as_deref())?;
    let seq = load_sequence(&args.seq).or_input(&format!("loading {}", args.seq.display()))?;
    let init = seq.ground_truth[0];

    let mut boxes: Vec<BoundingBox> = Vec::with_capacity(seq.len());
    let mut ms: Vec<f64> = Vec::with_capacity(seq.len());
    let mut diag = String::new();
    let mut tracker: Option<Tracker> = None;
    for (i, frame) in seq.frames().enumerate() {
        let frame = frame.map_err(|e| e.at_frame(i + 1)).or_input("reading frames")?;
        let t = match tracker.as_mut() {
            None => tracker.insert(Tracker::init(&frame, init, &cfg).map_err(|e| e.at_frame(1)).or_tracking()?),
            Some(t) => {
                t.step(&frame).or_tracking()?;
                t
            }
        };
        boxes.push(t.bbox());
        ms.push(t.last_report().seconds * 1e3);
        if args.diagnostics.is_some() {
            diag.push_str(&diagnostic(t));
            diag.push('\n');
        }
        if let Some(dir) = &args.overlay {
            overlay::write_frame(dir, i + 1, &frame, &t.bbox(), seq.ground_truth.get(i))
                .or_output(&format!("overlay in {}", dir.display()))?;
        }
    }
    if boxes.is_empty() {
        return Err(input(Error::EmptySeries));
    }

    write_atomic(&args.out, format_boxes(&boxes).as_bytes()).or_output(&format!("writing {}", args.out.display()))?;
    let times = args.times.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".ms");
        p.into()
    });
    let text: String = ms.iter().map(|m| format!("{m}\n")).collect();
    write_atomic(&times, text.as_bytes()).or_output(&format!("writing {}", times.display()))?;
    if let Some(path) = &args.diagnostics {
        write_atomic(path, diag.as_bytes()).or_output(&format!("writing {}", path.display()))?;
    }

    let mean = ms.iter().sum::<f64>() / ms.len() as f64;
    eprintln!("{} frames, mean {mean:.6} ms per frame, {:.6} FPS", ms.len(), 1e3 / mean);
    Ok(())
}
