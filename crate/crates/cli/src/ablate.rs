use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use sparsecf_core::eval::report::{by_config, to_csv, write_atomic};
use sparsecf_core::eval::suites::{self, SUITES, SUITE_SEEDS};
use sparsecf_core::eval::{emit_report, load_root, run_ope, RunSummary, Sequence, SynthSequence};
use sparsecf_core::tracker::{TrackerConfig, VARIANTS};

use crate::exit::{input, Classify, Failure, Outcome};

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["root", "suite"]))]
pub struct AblateArgs {
    /// Dataset root with one sequence per subdirectory.
    #[arg(long)]
    root: Option<PathBuf>,
    /// Synthetic suite rendered in memory instead of a dataset.
    #[arg(long)]
    suite: Option<String>,
    /// Seeds 0..N of the synthetic suite.
    #[arg(long, default_value_t = SUITE_SEEDS, requires = "suite")]
    seeds: u64,
    /// Comma-separated variant names.
    #[arg(long, value_delimiter = ',', required = true)]
    variants: Vec<String>,
    /// Shared settings; each variant only switches modules on or off.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comparison table: variant, dp, auc.
    #[arg(long)]
    out: PathBuf,
    /// Also write the full per-sequence report into this directory.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Serialize)]
struct Row<'a> {
    variant: &'a str,
    dp: f64,
    auc: f64,
}

fn run_all<S: Sequence>(seqs: &[S], configs: &[(String, TrackerConfig)]) -> Result<Vec<RunSummary>, Failure> {
    if seqs.is_empty() {
        return Err(input("no sequences to run"));
    }
    Ok(run_ope(seqs, configs).or_tracking()?.into_iter().map(|o| o.summary).collect())
}

pub fn run(args: AblateArgs) -> Outcome {
    let base = crate::config::load_or_default(args.config.as_deref())?;
    let configs = args
        .variants
        .iter()
        .map(|name| {
            crate::config::with_variant(&base, name)
                .map(|cfg| (name.clone(), cfg))
                .ok_or_else(|| input(format!("unknown variant {name:?}; expected one of {}", VARIANTS.join(", "))))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let runs = if let Some(root) = &args.root {
        let seqs = load_root(root).or_input(&format!("loading {}", root.display()))?;
        run_all(&seqs, &configs)?
    } else {
        let name = args.suite.as_deref().unwrap();
        if !SUITES.contains(&name) {
            return Err(input(format!("unknown suite {name:?}; expected one of {}", SUITES.join(", "))));
        }
        let seqs = (0..args.seeds)
            .map(|seed| suites::suite(name, seed).unwrap().render())
            .collect::<Result<Vec<SynthSequence>, _>>()
            .or_input("rendering suite")?;
        run_all(&seqs, &configs)?
    };

    let means = by_config(&runs).or_input("scoring")?;
    let rows: Vec<Row> = means
        .iter()
        .map(|(variant, m)| Row {
            variant,
            dp: m.dp_at_20,
            auc: m.auc,
        })
        .collect();
    for r in &rows {
        println!("{:<10} dp {:.4} auc {:.4}", r.variant, r.dp, r.auc);
    }
    let bytes = to_csv(&rows).or_output("formatting table")?;
    write_atomic(&args.out, &bytes).or_output(&format!("writing {}", args.out.display()))?;
    if let Some(dir) = &args.report {
        emit_report(&runs, dir).or_output(&format!("writing report to {}", dir.display()))?;
    }
    Ok(())
}
