use std::path::{Path, PathBuf};

use clap::Args;
use sparsecf_core::eval::dataset::read_boxes;
use sparsecf_core::eval::report::by_config;
use sparsecf_core::eval::{emit_report, load_root, run_ope, summarize, RunSummary, Series};

use crate::exit::{input, Classify, Outcome};

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["pred", "root"]))]
pub struct EvalArgs {
    /// Predicted boxes, one x,y,w,h line per frame.
    #[arg(long, requires = "gt")]
    pred: Option<PathBuf>,
    /// Ground-truth boxes in the same format.
    #[arg(long, requires = "pred")]
    gt: Option<PathBuf>,
    /// Dataset root: every subdirectory with a ground-truth file is tracked and scored.
    #[arg(long, conflicts_with_all = ["pred", "gt"])]
    root: Option<PathBuf>,
    /// JSON tracker config for --root runs.
    #[arg(long, requires = "root")]
    config: Option<PathBuf>,
    /// Label for this configuration in the report.
    #[arg(long, default_value = "sparsecf")]
    name: String,
    /// Directory for results.csv, curves.csv and the plots.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn print_means(runs: &[RunSummary]) -> Outcome {
    for (config, m) in by_config(runs).or_input("scoring")? {
        println!(
            "{config}: {} sequences, dp20 {:.4}, op50 {:.4}, auc {:.4}, fps {:.2}",
            m.sequences, m.dp_at_20, m.op_at_50, m.auc, m.fps
        );
    }
    Ok(())
}

pub fn run(args: EvalArgs) -> Outcome {
    let runs = if let Some(root) = &args.root {
        let cfg = crate::config::load_or_default(args.config.as_deref())?;
        let seqs = load_root(root).or_input(&format!("loading {}", root.display()))?;
        if seqs.is_empty() {
            return Err(input(format!("no sequences under {}", root.display())));
        }
        let outcomes = run_ope(&seqs, &[(args.name.clone(), cfg)]).or_tracking()?;
        outcomes.into_iter().map(|o| o.summary).collect::<Vec<_>>()
    } else {
        let (pred_path, gt_path) = (args.pred.as_ref().unwrap(), args.gt.as_ref().unwrap());
        let pred = read_boxes(pred_path).or_input(&format!("reading {}", pred_path.display()))?;
        let gt = read_boxes(gt_path).or_input(&format!("reading {}", gt_path.display()))?;
        if pred.is_empty() || gt.is_empty() {
            return Err(input("empty box file"));
        }
        let series = Series::from_boxes(&pred, &gt, 0.0).or_input("comparing boxes")?;
        let summary = summarize(&series).or_input("scoring")?;
        println!("frames {}", pred.len());
        println!("dp20 {}", summary.dp_at_20);
        println!("op50 {}", summary.op_at_50);
        println!("auc {}", summary.auc);
        vec![RunSummary {
            sequence: stem(gt_path),
            config: args.name.clone(),
            summary,
        }]
    };
    if args.root.is_some() {
        print_means(&runs)?;
    }
    if let Some(dir) = &args.out {
        emit_report(&runs, dir).or_output(&format!("writing report to {}", dir.display()))?;
    }
    Ok(())
}
