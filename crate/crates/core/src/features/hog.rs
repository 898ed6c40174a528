//! Felzenszwalb-style HOG: 2·O contrast-sensitive orientation channels,
//! O contrast-insensitive channels and 4 texture (normalization energy)
//! channels per cell; 31 channels for the usual O = 9.
//!
//! Gradient orientations are soft-binned between the two nearest bins and
//! spatially interpolated into the four nearest cells.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::numeric::FeatureTensor;

const NORM_EPS: f64 = 1e-4;
const TRUNCATION: f64 = 0.2;
const TEXTURE_SCALE: f64 = 0.2357;

pub fn hog_channels(orientations: usize) -> usize {
    3 * orientations + 4
}

/// Per-pixel gradient of the channel with the largest magnitude.
fn gradients(img: &Image) -> (Vec<f64>, Vec<f64>) {
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let data = img.data();
    let at = |x: usize, y: usize, c: usize| data[(y * w + x) * ch + c] as f64;
    let mut mag = vec![0.0; w * h];
    let mut ang = vec![0.0; w * h];
    for y in 0..h {
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let mut best = (0.0, 0.0, -1.0);
            for c in 0..ch {
                let dx = at(xr, y, c) - at(xl, y, c);
                let dy = at(x, yd, c) - at(x, yu, c);
                let m2 = dx * dx + dy * dy;
                if m2 > best.2 {
                    best = (dx, dy, m2);
                }
            }
            let (dx, dy, m2) = best;
            mag[y * w + x] = m2.sqrt();
            if m2 > 0.0 {
                let mut theta = dy.atan2(dx);
                if theta < 0.0 {
                    theta += 2.0 * PI;
                }
                ang[y * w + x] = theta;
            }
        }
    }
    (mag, ang)
}

/// Cell histograms over `2 * orientations` signed bins, row-major cells.
pub fn cell_histograms(img: &Image, cell: usize, orientations: usize) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let (cols, rows) = (w / cell, h / cell);
    let bins = 2 * orientations;
    let mut hist = vec![0.0; rows * cols * bins];
    let (mag, ang) = gradients(img);
    let bin_width = 2.0 * PI / bins as f64;
    // Bilinear cell taps per row and per column: (first cell, weight of the
    // first cell, weight of the second).
    let taps = |n: usize| -> Vec<(isize, f64, f64)> {
        (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / cell as f64 - 0.5;
                let f = p.floor();
                let w1 = p - f;
                (f as isize, 1.0 - w1, w1)
            })
            .collect()
    };
    let xt = taps(w);
    let yt = taps(h);
    for y in 0..h {
        let (iy, wy0, wy1) = yt[y];
        for x in 0..w {
            let m = mag[y * w + x];
            if m == 0.0 {
                continue;
            }
            let b = ang[y * w + x] / bin_width;
            let bf = b.floor();
            let frac = b - bf;
            let b0 = (bf as usize) % bins;
            let b1 = (b0 + 1) % bins;
            let (ix, wx0, wx1) = xt[x];
            for (cy, wy) in [(iy, wy0), (iy + 1, wy1)] {
                if cy < 0 || cy >= rows as isize || wy == 0.0 {
                    continue;
                }
                for (cx, wx) in [(ix, wx0), (ix + 1, wx1)] {
                    if cx < 0 || cx >= cols as isize || wx == 0.0 {
                        continue;
                    }
                    let base = ((cy as usize) * cols + cx as usize) * bins;
                    let v = m * wy * wx;
                    hist[base + b0] += v * (1.0 - frac);
                    hist[base + b1] += v * frac;
                }
            }
        }
    }
    hist
}

/// HOG features, `(h / cell) x (w / cell) x (3·O + 4)`.
pub fn extract_hog(img: &Image, cell: usize, orientations: usize) -> Result<FeatureTensor> {
    let (w, h) = (img.width(), img.height());
    if cell == 0 || orientations == 0 || w < cell || h < cell || w % cell != 0 || h % cell != 0 {
        return Err(Error::BadGeometry(format!(
            "{w}x{h} patch is not a whole number of {cell}-pixel cells"
        )));
    }
    let (cols, rows) = (w / cell, h / cell);
    let bins = 2 * orientations;
    let hist = cell_histograms(img, cell, orientations);

    let mut energy = vec![0.0; rows * cols];
    for (i, e) in energy.iter_mut().enumerate() {
        let hcell = &hist[i * bins..(i + 1) * bins];
        *e = (0..orientations)
            .map(|o| {
                let v = hcell[o] + hcell[o + orientations];
                v * v
            })
            .sum();
    }
    let e_at = |r: isize, c: isize| {
        let r = r.clamp(0, rows as isize - 1) as usize;
        let c = c.clamp(0, cols as isize - 1) as usize;
        energy[r * cols + c]
    };

    let channels = hog_channels(orientations);
    let mut out = FeatureTensor::zeros(rows, cols, channels).with_cell_size(cell);
    let mut insensitive = vec![0.0; orientations];
    for r in 0..rows {
        for c in 0..cols {
            let (ri, ci) = (r as isize, c as isize);
            let mut norms = [0.0; 4];
            for (k, (dr, dc)) in [(0, 0), (-1, 0), (0, -1), (-1, -1)].into_iter().enumerate() {
                let (r0, c0) = (ri + dr, ci + dc);
                let block = e_at(r0, c0) + e_at(r0 + 1, c0) + e_at(r0, c0 + 1) + e_at(r0 + 1, c0 + 1);
                norms[k] = 1.0 / (block + NORM_EPS).sqrt();
            }
            let hcell = &hist[(r * cols + c) * bins..(r * cols + c + 1) * bins];
            let mut texture = [0.0; 4];
            for (o, &v) in hcell.iter().enumerate() {
                let mut acc = 0.0;
                for k in 0..4 {
                    let t = (v * norms[k]).min(TRUNCATION);
                    acc += t;
                    texture[k] += t;
                }
                out.set(r, c, o, 0.5 * acc);
            }
            for o in 0..orientations {
                insensitive[o] = hcell[o] + hcell[o + orientations];
            }
            for (o, &v) in insensitive.iter().enumerate() {
                let acc: f64 = norms.iter().map(|n| (v * n).min(TRUNCATION)).sum();
                out.set(r, c, bins + o, 0.5 * acc);
            }
            for (k, t) in texture.iter().enumerate() {
                out.set(r, c, bins + orientations + k, TEXTURE_SCALE * t);
            }
        }
    }
    Ok(out)
}
