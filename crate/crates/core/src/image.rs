//! Float images in `[0, 1]`, patch cropping and target masking.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Row-major, channel-interleaved image with 1 or 3 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        assert!(channels == 1 || channels == 3, "1 or 3 channels");
        Image {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if !(channels == 1 || channels == 3) || data.len() != width * height * channels {
            return Err(Error::BadGeometry(format!(
                "{} samples for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut img = Image::new(width, height, channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    img.data[(y * width + x) * channels + c] = f(x, y, c);
                }
            }
        }
        img
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn is_color(&self) -> bool {
        self.channels == 3
    }
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Sample at 0-based array indices.
    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    /// Bilinear sample at a 0-based continuous position, replicating border pixels.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64, c: usize) -> f64 {
        let xmax = (self.width - 1) as f64;
        let ymax = (self.height - 1) as f64;
        let x = x.clamp(0.0, xmax);
        let y = y.clamp(0.0, ymax);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let top = self.get(x0, y0, c) as f64 * (1.0 - fx) + self.get(x1, y0, c) as f64 * fx;
        let bottom = self.get(x0, y1, c) as f64 * (1.0 - fx) + self.get(x1, y1, c) as f64 * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Luminance version of a color image (identity on gray images).
    pub fn to_gray(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    pub fn load(path: &Path) -> Result<Image> {
        let unreadable = |reason: String| Error::UnreadableImage {
            path: path.to_path_buf(),
            reason,
        };
        let img = image::open(path).map_err(|e| unreadable(e.to_string()))?;
        let gray = matches!(
            img.color(),
            image::ColorType::L8 | image::ColorType::L16 | image::ColorType::La8 | image::ColorType::La16
        );
        if gray {
            let buf = img.to_luma8();
            let data = buf.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
            Image::from_vec(buf.width() as usize, buf.height() as usize, 1, data)
        } else {
            let buf = img.to_rgb8();
            let data = buf.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
            Image::from_vec(buf.width() as usize, buf.height() as usize, 3, data)
        }
    }

    /// Writes a lossless 8-bit PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let color = if self.channels == 3 {
            image::ExtendedColorType::Rgb8
        } else {
            image::ExtendedColorType::L8
        };
        image::save_buffer_with_format(
            path,
            &bytes,
            self.width as u32,
            self.height as u32,
            color,
            image::ImageFormat::Png,
        )
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }

    /// Draws a one-pixel rectangle outline (for overlays).
    pub fn draw_box(&mut self, b: &BoundingBox, color: [f32; 3]) {
        let (x0, x1) = b.x_range();
        let (y0, y1) = b.y_range();
        let to_idx = |v: f64, len: usize| ((v - 1.0).round().max(0.0) as usize).min(len - 1);
        let (xa, xb) = (to_idx(x0, self.width), to_idx(x1, self.width));
        let (ya, yb) = (to_idx(y0, self.height), to_idx(y1, self.height));
        let mut put = |x: usize, y: usize| {
            for c in 0..self.channels {
                let v = if self.channels == 3 { color[c] } else { color[0] };
                self.set(x, y, c, v);
            }
        };
        for x in xa..=xb {
            put(x, ya);
            put(x, yb);
        }
        for y in ya..=yb {
            put(xa, y);
            put(xb, y);
        }
    }
}

/// Pixels cropped around a box and resampled to a fixed size.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePatch {
    pub pixels: Image,
    pub origin_box: BoundingBox,
}

/// Crops a window centred on `b` with extents `area_scale * (w, h)`,
/// replicate-padding outside the frame, bilinearly resampled to `out` pixels.
pub fn crop_patch(
    frame: &Image,
    b: &BoundingBox,
    area_scale: f64,
    out: (usize, usize),
) -> Result<ImagePatch> {
    if !b.is_valid() || !(area_scale > 0.0) {
        return Err(Error::EmptyBox);
    }
    let (out_w, out_h) = out;
    if out_w == 0 || out_h == 0 {
        return Err(Error::BadGeometry("zero-sized output patch".into()));
    }
    let src_w = b.w * area_scale;
    let src_h = b.h * area_scale;
    let step_x = src_w / out_w as f64;
    let step_y = src_h / out_h as f64;
    // Left edge of the window in the 1-based continuous frame, converted to 0-based.
    let left = b.cx - src_w / 2.0 - 1.0;
    let top = b.cy - src_h / 2.0 - 1.0;
    // Same arithmetic as `sample_bilinear`, with the per-axis work hoisted.
    let taps = |start: f64, step: f64, n: usize, len: usize| -> Vec<(usize, usize, f64)> {
        (0..n)
            .map(|j| {
                let v = (start + (j as f64 + 0.5) * step).clamp(0.0, (len - 1) as f64);
                let i0 = v.floor() as usize;
                (i0, (i0 + 1).min(len - 1), v - i0 as f64)
            })
            .collect()
    };
    let xs = taps(left, step_x, out_w, frame.width);
    let ys = taps(top, step_y, out_h, frame.height);
    let channels = frame.channels();
    let stride = frame.width * channels;
    let mut data = Vec::with_capacity(out_w * out_h * channels);
    for &(y0, y1, fy) in &ys {
        let (r0, r1) = (&frame.data[y0 * stride..], &frame.data[y1 * stride..]);
        for &(x0, x1, fx) in &xs {
            for c in 0..channels {
                let (a, b) = (x0 * channels + c, x1 * channels + c);
                let top = r0[a] as f64 * (1.0 - fx) + r0[b] as f64 * fx;
                let bottom = r1[a] as f64 * (1.0 - fx) + r1[b] as f64 * fx;
                data.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0) as f32);
            }
        }
    }
    Ok(ImagePatch {
        pixels: Image::from_vec(out_w, out_h, channels, data)?,
        origin_box: BoundingBox {
            w: src_w,
            h: src_h,
            ..*b
        },
    })
}

/// Zeroes every pixel whose centre lies inside `b`.
pub fn mask_target(frame: &Image, b: &BoundingBox) -> Image {
    let mut out = frame.clone();
    let (x0, x1) = b.x_range();
    let (y0, y1) = b.y_range();
    // 1-based pixel k is inside when x0 <= k <= x1.
    let first = |lo: f64| (lo - 1e-9).ceil().max(1.0) as usize;
    let last = |hi: f64, len: usize| ((hi + 1e-9).floor().min(len as f64)) as isize;
    let (xa, xb) = (first(x0), last(x1, frame.width()));
    let (ya, yb) = (first(y0), last(y1, frame.height()));
    if xb < xa as isize || yb < ya as isize {
        return out;
    }
    for y in ya..=(yb as usize) {
        for x in xa..=(xb as usize) {
            for c in 0..frame.channels() {
                out.set(x - 1, y - 1, c, 0.0);
            }
        }
    }
    out
}
