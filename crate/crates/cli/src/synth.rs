use std::fs;
use std::path::PathBuf;

use clap::Args;
use sparsecf_core::eval::suites::{self, SUITES};
use sparsecf_core::eval::SynthSpec;

use crate::exit::{input, Classify, Outcome};

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["spec", "suite"]))]
pub struct SynthArgs {
    /// JSON scene description; missing fields take defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Named suite member instead of a spec file.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long, default_value_t = 0, requires = "suite")]
    seed: u64,
    /// Sequence directory to create; must not exist or be empty.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: SynthArgs) -> Outcome {
    let spec = match (&args.spec, &args.suite) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).or_input(&format!("reading {}", path.display()))?;
            SynthSpec::from_json(&text).or_input(&format!("spec {}", path.display()))?
        }
        (None, Some(name)) => suites::suite(name, args.seed)
            .ok_or_else(|| input(format!("unknown suite {name:?}; expected one of {}", SUITES.join(", "))))?,
        (None, None) => unreachable!("clap requires a source"),
    };
    let seq = spec.render().or_input("rendering")?;

    let out = &args.out;
    if out.exists() {
        let empty = fs::read_dir(out).map(|mut d| d.next().is_none()).unwrap_or(false);
        if !empty {
            return Err(input(format!("{} exists and is not an empty directory", out.display())));
        }
        fs::remove_dir(out).or_output(&format!("replacing {}", out.display()))?;
    }
    // Build the directory beside its final location, then move it into place.
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = out.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).or_output("clearing a stale temporary directory")?;
    }
    seq.write(&tmp).or_output(&format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, out).or_output(&format!("moving into {}", out.display()))?;
    eprintln!("{}: {} frames in {}", seq.name, seq.frames.len(), out.display());
    Ok(())
}
