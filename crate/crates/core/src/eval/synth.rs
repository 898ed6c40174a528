//! Seeded synthetic sequences with exact ground truth.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{write_sequence, SequenceRecord};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::image::Image;

/// A textured rectangle moving at constant velocity. Positions are box
/// centres at frame 1 in 1-based pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovingBox {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
}

impl MovingBox {
    /// Centre at 1-based frame `t`.
    pub fn at(&self, t: usize) -> (f64, f64) {
        let k = t as f64 - 1.0;
        (self.x + self.vx * k, self.y + self.vy * k)
    }
}

/// Flat occluder pasted over the target box in frames `from..=to`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Occluder {
    pub from: usize,
    pub to: usize,
    /// Extra pixels around the target on every side.
    #[serde(default)]
    pub margin: f64,
}

/// Global gain ramp applied in frames `from..=to`, held afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Illumination {
    pub from: usize,
    pub to: usize,
    pub start: f64,
    pub end: f64,
}

impl Illumination {
    fn gain(&self, t: usize) -> f64 {
        if t < self.from {
            1.0
        } else if t >= self.to || self.to == self.from {
            self.end
        } else {
            let s = (t - self.from) as f64 / (self.to - self.from) as f64;
            self.start + (self.end - self.start) * s
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub name: String,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub color: bool,
    pub background_level: f64,
    /// Amplitude of the static background texture.
    pub background_texture: f64,
    /// Amplitude of per-frame uniform noise.
    pub noise: f64,
    pub target_w: f64,
    pub target_h: f64,
    /// Side of the square blocks the target texture is made of, in pixels.
    pub texture_block: usize,
    pub target: MovingBox,
    /// Objects with the target's exact appearance.
    pub twins: Vec<MovingBox>,
    /// Paint twins over the target instead of under it.
    pub twins_in_front: bool,
    /// Fraction of texture blocks twins share with the target; the rest
    /// are redrawn.
    pub twin_similarity: f64,
    pub occluders: Vec<Occluder>,
    pub illumination: Option<Illumination>,
    pub attributes: BTreeSet<String>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            name: "synthetic".to_string(),
            seed: 0,
            width: 320,
            height: 240,
            frames: 30,
            color: true,
            background_level: 0.4,
            background_texture: 0.05,
            noise: 0.02,
            target_w: 32.0,
            target_h: 32.0,
            texture_block: 4,
            target: MovingBox {
                x: 100.0,
                y: 120.0,
                vx: 0.0,
                vy: 0.0,
            },
            twins: Vec::new(),
            twins_in_front: false,
            twin_similarity: 1.0,
            occluders: Vec::new(),
            illumination: None,
            attributes: BTreeSet::new(),
        }
    }
}

/// Rendered frames plus ground truth, in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSequence {
    pub name: String,
    pub frames: Vec<Image>,
    pub ground_truth: Vec<BoundingBox>,
    pub attributes: BTreeSet<String>,
}

impl SynthSequence {
    pub fn write(&self, dir: &Path) -> Result<SequenceRecord> {
        write_sequence(dir, &self.frames, &self.ground_truth, &self.attributes)
    }

    pub fn frames(&self) -> impl Iterator<Item = Result<Image>> + '_ {
        self.frames.iter().cloned().map(Ok)
    }
}

/// Channel values of a block-texture image, row-major.
#[derive(Clone)]
struct Texture {
    w: usize,
    h: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Texture {
    fn blocks(w: usize, h: usize, channels: usize, block: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Texture {
        let (bw, bh) = (w.div_ceil(block), h.div_ceil(block));
        let colors: Vec<f64> = (0..bw * bh * channels).map(|_| rng.gen_range(lo..hi)).collect();
        let mut data = vec![0.0; w * h * channels];
        for y in 0..h {
            for x in 0..w {
                let b = (y / block) * bw + x / block;
                for c in 0..channels {
                    data[(y * w + x) * channels + c] = colors[b * channels + c];
                }
            }
        }
        Texture { w, h, channels, data }
    }

    /// Keeps each `block`-sized block with probability `keep`, else takes it from `other`.
    fn mix(&self, other: &Texture, block: usize, keep: f64, rng: &mut ChaCha8Rng) -> Texture {
        let (bw, bh) = (self.w.div_ceil(block), self.h.div_ceil(block));
        let kept: Vec<bool> = (0..bw * bh).map(|_| rng.gen_bool(keep)).collect();
        let mut out = self.clone();
        for y in 0..self.h {
            for x in 0..self.w {
                if !kept[(y / block) * bw + x / block] {
                    for c in 0..self.channels {
                        out.data[(y * self.w + x) * self.channels + c] = other.get(x, y, c);
                    }
                }
            }
        }
        out
    }

    fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.w + x) * self.channels + c]
    }

    /// Bilinear sample with edge clamping, at texel coordinates.
    fn sample(&self, u: f64, v: f64, c: usize) -> f64 {
        let u = u.clamp(0.0, (self.w - 1) as f64);
        let v = v.clamp(0.0, (self.h - 1) as f64);
        let (x0, y0) = (u.floor() as usize, v.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.w - 1), (y0 + 1).min(self.h - 1));
        let (fx, fy) = (u - x0 as f64, v - y0 as f64);
        let top = self.get(x0, y0, c) * (1.0 - fx) + self.get(x1, y0, c) * fx;
        let bottom = self.get(x0, y1, c) * (1.0 - fx) + self.get(x1, y1, c) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::BadSpec(what.to_string()));
        if self.width == 0 || self.height == 0 || self.frames == 0 {
            return bad("width, height and frames must be positive");
        }
        if !(self.target_w >= 1.0 && self.target_h >= 1.0) || self.texture_block == 0 {
            return bad("target must be at least one pixel and texture_block positive");
        }
        if !(0.0..=1.0).contains(&self.twin_similarity) {
            return bad("twin_similarity must lie in [0, 1]");
        }
        if !(self.noise >= 0.0 && self.background_texture >= 0.0) {
            return bad("noise amplitudes must be non-negative");
        }
        for o in &self.occluders {
            if o.from == 0 || o.to < o.from {
                return bad("occluder frames must satisfy 1 <= from <= to");
            }
        }
        if let Some(i) = self.illumination {
            if i.from == 0 || i.to < i.from {
                return bad("illumination frames must satisfy 1 <= from <= to");
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<SynthSpec> {
        let spec: SynthSpec = serde_json::from_str(text).map_err(|e| Error::BadSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Ground-truth box at 1-based frame `t`.
    pub fn box_at(&self, t: usize) -> BoundingBox {
        let (cx, cy) = self.target.at(t);
        BoundingBox {
            cx,
            cy,
            w: self.target_w,
            h: self.target_h,
        }
    }

    pub fn render(&self) -> Result<SynthSequence> {
        self.validate()?;
        let channels = if self.color { 3 } else { 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let background = Texture::blocks(
            self.width,
            self.height,
            channels,
            16,
            self.background_level - self.background_texture,
            self.background_level + self.background_texture + f64::EPSILON,
            &mut rng,
        );
        let (tw, th) = (self.target_w.ceil() as usize, self.target_h.ceil() as usize);
        let target = Texture::blocks(tw, th, channels, self.texture_block, 0.05, 0.95, &mut rng);
        let occluder = Texture::blocks(tw.max(1) * 2, th.max(1) * 2, channels, 8, 0.3, 0.5, &mut rng);
        let twin = if self.twin_similarity < 1.0 {
            let other = Texture::blocks(tw, th, channels, self.texture_block, 0.05, 0.95, &mut rng);
            target.mix(&other, self.texture_block, self.twin_similarity, &mut rng)
        } else {
            target.clone()
        };

        let mut frames = Vec::with_capacity(self.frames);
        let mut ground_truth = Vec::with_capacity(self.frames);
        for t in 1..=self.frames {
            let mut noise = ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9e37_79b9).wrapping_add(t as u64));
            let mut buf = background.data.clone();
            let gt = self.box_at(t);
            let mut objects: Vec<(&Texture, (f64, f64))> = self.twins.iter().map(|m| (&twin, m.at(t))).collect();
            if self.twins_in_front {
                objects.insert(0, (&target, (gt.cx, gt.cy)));
            } else {
                objects.push((&target, (gt.cx, gt.cy)));
            }
            for (tex, (cx, cy)) in objects {
                self.paint(&mut buf, channels, tex, cx, cy, self.target_w, self.target_h);
            }
            for o in self.occluders.iter().filter(|o| (o.from..=o.to).contains(&t)) {
                let (w, h) = (self.target_w + 2.0 * o.margin, self.target_h + 2.0 * o.margin);
                self.paint(&mut buf, channels, &occluder, gt.cx, gt.cy, w, h);
            }
            let gain = self.illumination.map_or(1.0, |i| i.gain(t));
            let data: Vec<f32> = buf
                .iter()
                .map(|v| {
                    let n = if self.noise > 0.0 {
                        noise.gen_range(-self.noise..self.noise)
                    } else {
                        0.0
                    };
                    ((v * gain + n).clamp(0.0, 1.0)) as f32
                })
                .collect();
            frames.push(Image::from_vec(self.width, self.height, channels, data)?);
            ground_truth.push(gt);
        }
        Ok(SynthSequence {
            name: self.name.clone(),
            frames,
            ground_truth,
            attributes: self.attributes.clone(),
        })
    }

    /// Pastes `tex` stretched over the `w x h` box centred at `(cx, cy)`.
    /// A pixel is covered when its centre lies inside the box.
    #[allow(clippy::too_many_arguments)]
    fn paint(&self, buf: &mut [f64], channels: usize, tex: &Texture, cx: f64, cy: f64, w: f64, h: f64) {
        let left = cx - (w - 1.0) / 2.0;
        let top = cy - (h - 1.0) / 2.0;
        let sx = (tex.w as f64 - 1.0).max(0.0) / (w - 1.0).max(1.0);
        let sy = (tex.h as f64 - 1.0).max(0.0) / (h - 1.0).max(1.0);
        // Pixel centres inside [left, left + w - 1], as in contains_pixel.
        const SLACK: f64 = 1e-9;
        let x_lo = ((left - SLACK).ceil().max(1.0)) as usize;
        let y_lo = ((top - SLACK).ceil().max(1.0)) as usize;
        let x_hi = (left + w - 1.0 + SLACK).floor().min(self.width as f64);
        let y_hi = (top + h - 1.0 + SLACK).floor().min(self.height as f64);
        if x_hi < 1.0 || y_hi < 1.0 {
            return;
        }
        for y in y_lo..=y_hi as usize {
            for x in x_lo..=x_hi as usize {
                let (u, v) = ((x as f64 - left) * sx, (y as f64 - top) * sy);
                for c in 0..channels {
                    buf[((y - 1) * self.width + x - 1) * channels + c] = tex.sample(u, v, c);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SynthSpec {
        SynthSpec {
            width: 120,
            height: 90,
            frames: 20,
            target_w: 20.0,
            target_h: 16.0,
            target: MovingBox {
                x: 40.0,
                y: 45.0,
                vx: 2.0,
                vy: -0.5,
            },
            ..SynthSpec::default()
        }
    }

    #[test]
    fn constant_position_gives_identical_boxes() {
        let s = SynthSpec {
            target: MovingBox {
                vx: 0.0,
                vy: 0.0,
                ..spec().target
            },
            ..spec()
        };
        let seq = s.render().unwrap();
        assert!(seq.ground_truth.iter().all(|b| *b == seq.ground_truth[0]));
    }

    #[test]
    fn linear_trajectory_is_arithmetic() {
        let seq = SynthSpec { frames: 30, ..spec() }.render().unwrap();
        assert_eq!(seq.ground_truth.len(), 30);
        for (i, b) in seq.ground_truth.iter().enumerate() {
            assert_eq!(b.cx, 40.0 + 2.0 * i as f64);
            assert_eq!(b.cy, 45.0 - 0.5 * i as f64);
        }
    }

    #[test]
    fn seeded_render_is_deterministic() {
        let a = spec().render().unwrap();
        let b = spec().render().unwrap();
        assert_eq!(a, b);
        let c = SynthSpec { seed: 1, ..spec() }.render().unwrap();
        assert_ne!(a.frames[0], c.frames[0]);
    }

    #[test]
    fn occluder_touches_exactly_its_frames_and_box() {
        let clean = SynthSpec { noise: 0.0, ..spec() };
        let occluded = SynthSpec {
            occluders: vec![Occluder {
                from: 10,
                to: 15,
                margin: 0.0,
            }],
            ..clean.clone()
        };
        let a = clean.render().unwrap();
        let b = occluded.render().unwrap();
        for t in 1..=20 {
            let (fa, fb) = (&a.frames[t - 1], &b.frames[t - 1]);
            let gt = clean.box_at(t);
            let (mut changed_inside, mut inside_count) = (0, 0);
            for y in 0..fa.height() {
                for x in 0..fa.width() {
                    let diff = (0..3).any(|c| fa.get(x, y, c) != fb.get(x, y, c));
                    let inside = gt.contains_pixel(x as f64 + 1.0, y as f64 + 1.0);
                    inside_count += inside as usize;
                    if diff {
                        assert!(inside && (10..=15).contains(&t), "frame {t} pixel ({x}, {y})");
                        changed_inside += 1;
                    }
                }
            }
            if (10..=15).contains(&t) {
                assert!(changed_inside as f64 > 0.95 * inside_count as f64);
            }
        }
    }

    #[test]
    fn illumination_ramp() {
        let i = Illumination {
            from: 5,
            to: 9,
            start: 1.0,
            end: 0.6,
        };
        assert_eq!(i.gain(1), 1.0);
        assert_eq!(i.gain(5), 1.0);
        assert!((i.gain(7) - 0.8).abs() < 1e-12);
        assert_eq!(i.gain(20), 0.6);
    }

    #[test]
    fn bad_specs() {
        assert!(matches!(SynthSpec::from_json(r#"{"frames": 0}"#), Err(Error::BadSpec(_))));
        assert!(matches!(SynthSpec::from_json(r#"{"framez": 3}"#), Err(Error::BadSpec(_))));
        assert!(SynthSpec::from_json(r#"{"occluders": [{"from": 5, "to": 2}]}"#).is_err());
        let one = SynthSpec::from_json(r#"{"frames": 1}"#).unwrap().render().unwrap();
        assert_eq!(one.frames.len(), 1);
    }
}
