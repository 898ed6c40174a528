use std::fs;
use std::path::Path;

use sparsecf_core::{BoundingBox, Image};

const RED: [f32; 3] = [1.0, 0.0, 0.0];
const GREEN: [f32; 3] = [0.0, 1.0, 0.0];

/// Frame `index` as `<dir>/NNNN.png`, written through a temporary file.
pub fn write_frame(dir: &Path, index: usize, frame: &Image, pred: &BoundingBox, gt: Option<&BoundingBox>) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let gray = frame.channels() == 1;
    let mut img = Image::from_fn(frame.width(), frame.height(), 3, |x, y, c| frame.get(x, y, if gray { 0 } else { c }));
    if let Some(g) = gt {
        img.draw_box(g, GREEN);
    }
    img.draw_box(pred, RED);
    let path = dir.join(format!("{index:04}.png"));
    let tmp = dir.join(format!(".{index:04}.png.tmp"));
    img.save_png(&tmp)?;
    fs::rename(&tmp, &path)?;
    Ok(())
}
