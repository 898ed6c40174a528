//! Color-name features: a 32×32×32 RGB lookup into probabilities over
//! ten color terms, averaged per cell.
//!
//! Channel order: black, blue, brown, green, orange, pink, purple, red,
//! white, yellow. The eleven-term basic color vocabulary is reduced to ten
//! by splitting the "grey" mass equally between black and white.
//!
//! Table file layout: the 8-byte magic `CNTBL10\0` followed by
//! 32768 × 10 little-endian `f32` values, entry-major; the entry for an RGB
//! pixel is `(r >> 3) + 32 * (g >> 3) + 1024 * (b >> 3)` on 8-bit values.

use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::numeric::FeatureTensor;

pub const MAGIC: &[u8; 8] = b"CNTBL10\0";
pub const ENTRIES: usize = 32 * 32 * 32;
pub const TERMS: usize = 10;
pub const TERM_NAMES: [&str; TERMS] = [
    "black", "blue", "brown", "green", "orange", "pink", "purple", "red", "white", "yellow",
];
pub const RED: usize = 7;

static SHIPPED: &[u8] = include_bytes!("../../data/color_names_cn10.bin");

#[derive(Debug, Clone, PartialEq)]
pub struct ColorNameTable {
    values: Vec<f32>,
}

impl ColorNameTable {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != MAGIC.len() + ENTRIES * TERMS * 4 || &bytes[..8] != MAGIC {
            return Err(Error::BadTable(format!("{} bytes or wrong magic", bytes.len())));
        }
        let values = bytes[8..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(ColorNameTable { values })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.values.len() * 4);
        out.extend_from_slice(MAGIC);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingTable(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_bytes(&bytes)
    }

    /// The table bundled with the crate, parsed once.
    pub fn shipped() -> &'static ColorNameTable {
        static TABLE: OnceLock<ColorNameTable> = OnceLock::new();
        TABLE.get_or_init(|| Self::from_bytes(SHIPPED).expect("bundled table is well formed"))
    }

    pub fn entry(&self, index: usize) -> &[f32] {
        &self.values[index * TERMS..(index + 1) * TERMS]
    }

    pub fn lookup(&self, r: f32, g: f32, b: f32) -> &[f32] {
        self.entry(index_of(r, g, b))
    }

    /// Regenerates the bundled table: soft assignment of every RGB bin
    /// centre to focal colors by CIELAB distance.
    pub fn synthesize() -> Self {
        // Eleven focal colors (sRGB); grey is folded into black and white.
        const FOCAL: [(&str, [f64; 3]); 11] = [
            ("black", [0.0, 0.0, 0.0]),
            ("blue", [30.0, 60.0, 200.0]),
            ("brown", [120.0, 70.0, 30.0]),
            ("grey", [128.0, 128.0, 128.0]),
            ("green", [40.0, 160.0, 50.0]),
            ("orange", [255.0, 140.0, 0.0]),
            ("pink", [255.0, 150.0, 200.0]),
            ("purple", [130.0, 40.0, 160.0]),
            ("red", [220.0, 20.0, 30.0]),
            ("white", [255.0, 255.0, 255.0]),
            ("yellow", [255.0, 230.0, 30.0]),
        ];
        const BANDWIDTH: f64 = 20.0;
        let focal_lab: Vec<[f64; 3]> = FOCAL.iter().map(|(_, c)| srgb_to_lab(*c)).collect();
        let mut values = Vec::with_capacity(ENTRIES * TERMS);
        for index in 0..ENTRIES {
            let (r, g, b) = (index % 32, (index / 32) % 32, index / 1024);
            let centre = [(r * 8 + 4) as f64, (g * 8 + 4) as f64, (b * 8 + 4) as f64];
            let lab = srgb_to_lab(centre);
            let d2: Vec<f64> = focal_lab
                .iter()
                .map(|f| (0..3).map(|k| (f[k] - lab[k]).powi(2)).sum())
                .collect();
            let dmin = d2.iter().cloned().fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = d2
                .iter()
                .map(|d| (-(d - dmin) / (2.0 * BANDWIDTH * BANDWIDTH)).exp())
                .collect();
            let total: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|v| v / total).collect();
            let grey = p[3];
            let folded = [
                p[0] + grey / 2.0,
                p[1],
                p[2],
                p[4],
                p[5],
                p[6],
                p[7],
                p[8],
                p[9] + grey / 2.0,
                p[10],
            ];
            values.extend(folded.iter().map(|&v| v as f32));
        }
        ColorNameTable { values }
    }
}

pub fn index_of(r: f32, g: f32, b: f32) -> usize {
    let q = |v: f32| ((v.clamp(0.0, 1.0) * 255.0).round() as usize) >> 3;
    q(r) + 32 * q(g) + 1024 * q(b)
}

fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = |c: f64| {
        let c = c / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    };
    let (r, g, b) = (lin(rgb[0]), lin(rgb[1]), lin(rgb[2]));
    let x = (0.4124 * r + 0.3576 * g + 0.1805 * b) / 0.95047;
    let y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
    let z = (0.0193 * r + 0.1192 * g + 0.9505 * b) / 1.08883;
    let f = |t: f64| {
        if t > 0.008856 {
            t.cbrt()
        } else {
            7.787 * t + 16.0 / 116.0
        }
    };
    let (fx, fy, fz) = (f(x), f(y), f(z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Cell-averaged color-name probabilities, `(h / cell) x (w / cell) x 10`.
pub fn extract_color_names(img: &Image, cell: usize, table: &ColorNameTable) -> Result<FeatureTensor> {
    if !img.is_color() {
        return Err(Error::GrayInput);
    }
    let (w, h) = (img.width(), img.height());
    if cell == 0 || w < cell || h < cell || w % cell != 0 || h % cell != 0 {
        return Err(Error::BadGeometry(format!("{w}x{h} patch with {cell}-pixel cells")));
    }
    let (cols, rows) = (w / cell, h / cell);
    let mut out = FeatureTensor::zeros(rows, cols, TERMS).with_cell_size(cell);
    let norm = 1.0 / (cell * cell) as f64;
    let plane = rows * cols;
    // One row of cells, term-minor, accumulated in pixel order.
    let mut acc = vec![0.0; cols * TERMS];
    let data = out.data_mut();
    for r in 0..rows {
        acc.iter_mut().for_each(|v| *v = 0.0);
        for y in r * cell..(r + 1) * cell {
            for (x, p) in img.data()[y * w * 3..(y + 1) * w * 3].chunks_exact(3).enumerate() {
                let probs = table.lookup(p[0], p[1], p[2]);
                let cell_acc = &mut acc[(x / cell) * TERMS..(x / cell + 1) * TERMS];
                for (a, &v) in cell_acc.iter_mut().zip(probs) {
                    *a += v as f64 * norm;
                }
            }
        }
        for c in 0..cols {
            for k in 0..TERMS {
                data[k * plane + r * cols + c] = acc[c * TERMS + k];
            }
        }
    }
    Ok(out)
}
