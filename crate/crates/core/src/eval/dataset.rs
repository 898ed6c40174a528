use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::image::Image;

/// Name of the ground-truth file inside a sequence directory.
pub const GROUND_TRUTH: &str = "groundtruth_rect.txt";
/// Optional file of comma-separated attribute tags.
pub const ATTRIBUTES: &str = "attributes.txt";
const IMAGE_DIR: &str = "img";
const EXTENSIONS: [&str; 5] = ["jpg", "jpeg", "png", "bmp", "pgm"];

/// A benchmark sequence on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub name: String,
    pub frame_paths: Vec<PathBuf>,
    pub ground_truth: Vec<BoundingBox>,
    pub attributes: BTreeSet<String>,
}

impl SequenceRecord {
    pub fn len(&self) -> usize {
        self.frame_paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame_paths.is_empty()
    }

    /// Frames decoded lazily, in order.
    pub fn frames(&self) -> impl Iterator<Item = Result<Image>> + '_ {
        self.frame_paths.iter().map(|p| Image::load(p))
    }
}

/// Parses one `x,y,w,h` line (1-based top-left corner). Tabs and spaces also
/// separate fields.
pub fn parse_box_line(line: &str, number: usize) -> Result<BoundingBox> {
    let bad = || Error::BadGroundTruth {
        line: number,
        text: line.to_string(),
    };
    let fields: Vec<f64> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match fields[..] {
        [x, y, w, h] => BoundingBox::from_corner(x, y, w, h).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

pub fn parse_boxes(text: &str) -> Result<Vec<BoundingBox>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_box_line(l.trim(), i + 1))
        .collect()
}

pub fn read_boxes(path: &Path) -> Result<Vec<BoundingBox>> {
    parse_boxes(&fs::read_to_string(path)?)
}

/// One `x,y,w,h` line per box, shortest round-trip float formatting.
pub fn format_boxes(boxes: &[BoundingBox]) -> String {
    boxes
        .iter()
        .map(|b| {
            let (x, y, w, h) = b.to_corner();
            format!("{x},{y},{w},{h}\n")
        })
        .collect()
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Loads `<dir>/img/*` and `<dir>/groundtruth_rect.txt`.
pub fn load_sequence(dir: &Path) -> Result<SequenceRecord> {
    let gt_path = dir.join(GROUND_TRUTH);
    if !gt_path.is_file() {
        return Err(Error::MissingGroundTruth(gt_path));
    }
    let ground_truth = read_boxes(&gt_path)?;
    let img_dir = dir.join(IMAGE_DIR);
    let frame_paths = if img_dir.is_dir() {
        image_files(&img_dir)?
    } else {
        Vec::new()
    };
    if frame_paths.len() != ground_truth.len() || frame_paths.is_empty() {
        return Err(Error::CountMismatch {
            frames: frame_paths.len(),
            boxes: ground_truth.len(),
        });
    }
    // Decode the first frame up front so unreadable data fails at load time.
    Image::load(&frame_paths[0])?;
    let attributes = match fs::read_to_string(dir.join(ATTRIBUTES)) {
        Ok(text) => text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        Err(_) => BTreeSet::new(),
    };
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(SequenceRecord {
        name,
        frame_paths,
        ground_truth,
        attributes,
    })
}

/// Every subdirectory of `root` that holds a ground-truth file, by name.
pub fn load_root(root: &Path) -> Result<Vec<SequenceRecord>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(GROUND_TRUTH).is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| load_sequence(d)).collect()
}

/// Writes frames and boxes in the layout [`load_sequence`] reads.
pub fn write_sequence(dir: &Path, frames: &[Image], boxes: &[BoundingBox], attributes: &BTreeSet<String>) -> Result<SequenceRecord> {
    if frames.len() != boxes.len() {
        return Err(Error::CountMismatch {
            frames: frames.len(),
            boxes: boxes.len(),
        });
    }
    let img_dir = dir.join(IMAGE_DIR);
    fs::create_dir_all(&img_dir)?;
    let mut frame_paths = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let path = img_dir.join(format!("{:04}.png", i + 1));
        f.save_png(&path)?;
        frame_paths.push(path);
    }
    fs::write(dir.join(GROUND_TRUTH), format_boxes(boxes))?;
    if !attributes.is_empty() {
        let tags: Vec<&str> = attributes.iter().map(String::as_str).collect();
        fs::write(dir.join(ATTRIBUTES), tags.join(",") + "\n")?;
    }
    Ok(SequenceRecord {
        name: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        frame_paths,
        ground_truth: boxes.to_vec(),
        attributes: attributes.clone(),
    })
}
