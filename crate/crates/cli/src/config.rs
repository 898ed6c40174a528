use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use sparsecf_core::tracker::{TrackerConfig, VARIANTS};

use crate::exit::{input, Classify, Outcome};

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Start from a named variant instead of the defaults.
    #[arg(long)]
    variant: Option<String>,
    /// Validate a config file and print it with every field filled in.
    #[arg(long, conflicts_with = "variant")]
    check: Option<PathBuf>,
}

/// Flat JSON with any subset of the fields; missing ones take defaults.
pub fn load(path: &Path) -> anyhow::Result<TrackerConfig> {
    let text = fs::read_to_string(path)?;
    let cfg: TrackerConfig = if text.trim().is_empty() {
        TrackerConfig::default()
    } else {
        serde_json::from_str(&text)?
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_or_default(path: Option<&Path>) -> Result<TrackerConfig, crate::exit::Failure> {
    match path {
        Some(p) => load(p).or_input(&format!("config {}", p.display())),
        None => Ok(TrackerConfig::default()),
    }
}

/// `base` with the modules of variant `name` switched on or off.
pub fn with_variant(base: &TrackerConfig, name: &str) -> Option<TrackerConfig> {
    let v = TrackerConfig::variant(name)?;
    Some(TrackerConfig {
        acl: v.acl,
        reference: v.reference,
        mask_target: v.mask_target,
        ..base.clone()
    })
}

pub fn run(args: ConfigArgs) -> Outcome {
    let cfg = match (&args.variant, &args.check) {
        (Some(name), _) => TrackerConfig::variant(name)
            .ok_or_else(|| input(format!("unknown variant {name:?}; expected one of {}", VARIANTS.join(", "))))?,
        (None, Some(path)) => load_or_default(Some(path))?,
        (None, None) => TrackerConfig::default(),
    };
    let text = serde_json::to_string_pretty(&cfg).or_output("serializing config")?;
    println!("{text}");
    Ok(())
}
