//! Pool of past filters paired with target templates, and the choice of
//! reference filter for the temporal term.
//!
//! Similarity between the current target template and a stored one is the
//! maximum over circular shifts of their channel-summed cross-correlation.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{forward_dft, ifft2_real, FeatureTensor, SpectrumTensor};
use crate::solver::FilterBank;

#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub filter: FilterBank,
    pub template: FeatureTensor,
    template_spectrum: SpectrumTensor,
    pub frame_index: usize,
}

impl PoolEntry {
    pub fn new(filter: FilterBank, template: FeatureTensor, frame_index: usize) -> Self {
        PoolEntry {
            template_spectrum: forward_dft(&template),
            filter,
            template,
            frame_index,
        }
    }
}

/// First entry pinned; the rest is FIFO up to `capacity`.
#[derive(Debug, Clone)]
pub struct KeyfilterPool {
    entries: Vec<PoolEntry>,
    capacity: usize,
}

impl KeyfilterPool {
    pub fn new(capacity: usize) -> Self {
        KeyfilterPool {
            entries: Vec::with_capacity(capacity),
            capacity: capacity.max(1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends, evicting the oldest unpinned entry when full.
    pub fn update(&mut self, filter: FilterBank, template: FeatureTensor, frame_index: usize) {
        debug_assert!(self.entries.last().is_none_or(|e| e.frame_index < frame_index));
        if self.entries.len() >= self.capacity {
            if self.entries.len() > 1 {
                self.entries.remove(1);
            } else {
                // Capacity 1: the pinned entry stays, nothing else fits.
                return;
            }
        }
        self.entries.push(PoolEntry::new(filter, template, frame_index));
    }
}

/// Free-function form of [`KeyfilterPool::update`].
pub fn update_pool(pool: &mut KeyfilterPool, filter: FilterBank, template: FeatureTensor, frame_index: usize) {
    pool.update(filter, template, frame_index);
}

/// Max-over-shifts correlation of `f_cur` with each stored template.
pub fn similarity_vector(f_cur: &FeatureTensor, pool: &KeyfilterPool) -> Result<Vec<f64>> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let cur = forward_dft(f_cur);
    let (rows, cols, channels) = f_cur.shape();
    let len = rows * cols;
    pool.entries
        .iter()
        .map(|e| {
            f_cur.check_same_shape(&e.template)?;
            let mut acc = vec![Complex64::new(0.0, 0.0); len];
            for d in 0..channels {
                for ((a, x), t) in acc.iter_mut().zip(cur.channel(d)).zip(e.template_spectrum.channel(d)) {
                    *a += x.conj() * t;
                }
            }
            Ok(ifft2_real(&acc, rows, cols)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect()
}

/// Index of the largest value; the lower index wins ties.
pub fn argmax_first(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, x) in v.iter().enumerate() {
        if best.is_none_or(|b| *x > v[b]) {
            best = Some(i);
        }
    }
    best
}

/// The filter whose template is most similar to `f_cur`.
pub fn select_keyfilter<'p>(f_cur: &FeatureTensor, pool: &'p KeyfilterPool) -> Result<&'p FilterBank> {
    let v = similarity_vector(f_cur, pool)?;
    let k = argmax_first(&v).ok_or(Error::EmptyPool)?;
    Ok(&pool.entries[k].filter)
}

/// How the reference filter of the temporal term is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Selection {
    /// No temporal term.
    None,
    /// The most recent filter.
    Previous,
    /// The most recent filter learned on a frame `f` with `(f - 1) % period == 0`.
    FixedPeriod { period: usize },
    /// Template similarity.
    Adaptive,
}

impl Selection {
    /// The pool entry whose filter serves as reference, if any.
    pub fn select<'p>(&self, f_cur: &FeatureTensor, pool: &'p KeyfilterPool) -> Result<Option<&'p PoolEntry>> {
        let entries = &pool.entries;
        match *self {
            Selection::None => Ok(None),
            Selection::Previous => entries.last().map(Some).ok_or(Error::EmptyPool),
            Selection::FixedPeriod { period } => {
                let period = period.max(1);
                entries
                    .iter()
                    .rev()
                    .find(|e| (e.frame_index.saturating_sub(1)) % period == 0)
                    .or(entries.first())
                    .map(Some)
                    .ok_or(Error::EmptyPool)
            }
            Selection::Adaptive => {
                let v = similarity_vector(f_cur, pool)?;
                let k = argmax_first(&v).ok_or(Error::EmptyPool)?;
                Ok(Some(&entries[k]))
            }
        }
    }

    /// Whether the tracker needs a pool at all.
    pub fn uses_pool(&self) -> bool {
        !matches!(self, Selection::None)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointIndex {
    capacity: usize,
    entries: Vec<CheckpointEntry>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointEntry {
    frame_index: usize,
    filter_shape: [usize; 3],
    template_shape: [usize; 3],
}

fn write_tensor(out: &mut impl Write, t: &FeatureTensor) -> Result<()> {
    out.write_all(&((t.data().len() * 4) as u64).to_le_bytes())?;
    for v in t.data() {
        out.write_all(&(*v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn read_tensor(input: &mut impl Read, shape: [usize; 3]) -> Result<FeatureTensor> {
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let bytes = u64::from_le_bytes(len) as usize;
    if bytes != shape.iter().product::<usize>() * 4 {
        return Err(Error::BadCheckpoint(format!("tensor of {bytes} bytes for shape {shape:?}")));
    }
    let mut raw = vec![0u8; bytes];
    input.read_exact(&mut raw)?;
    let data = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    FeatureTensor::from_vec(shape[0], shape[1], shape[2], data)
}

impl KeyfilterPool {
    /// Writes a `u64` header length, a JSON index, then every filter and
    /// template as a length-prefixed run of little-endian `f32`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let index = CheckpointIndex {
            capacity: self.capacity,
            entries: self
                .entries
                .iter()
                .map(|e| {
                    let (a, b, c) = e.filter.shape();
                    let (x, y, z) = e.template.shape();
                    CheckpointEntry {
                        frame_index: e.frame_index,
                        filter_shape: [a, b, c],
                        template_shape: [x, y, z],
                    }
                })
                .collect(),
        };
        let header = serde_json::to_vec(&index)?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(&(header.len() as u64).to_le_bytes())?;
        out.write_all(&header)?;
        for e in &self.entries {
            write_tensor(&mut out, e.filter.spatial())?;
            write_tensor(&mut out, &e.template)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut len = [0u8; 8];
        input.read_exact(&mut len)?;
        let header_len = u64::from_le_bytes(len) as usize;
        if header_len > 1 << 24 {
            return Err(Error::BadCheckpoint(format!("header of {header_len} bytes")));
        }
        let mut header = vec![0u8; header_len];
        input.read_exact(&mut header)?;
        let index: CheckpointIndex = serde_json::from_slice(&header)?;
        let mut pool = KeyfilterPool::new(index.capacity);
        for e in index.entries {
            let filter = read_tensor(&mut input, e.filter_shape)?;
            let template = read_tensor(&mut input, e.template_shape)?;
            pool.entries
                .push(PoolEntry::new(FilterBank::from_spatial(filter), template, e.frame_index));
        }
        if pool.entries.len() > pool.capacity {
            return Err(Error::BadCheckpoint("more entries than capacity".into()));
        }
        Ok(pool)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, shape: (usize, usize, usize)) -> FeatureTensor {
        FeatureTensor::from_fn(shape.0, shape.1, shape.2, |_, _, _| rng.gen_range(-1.0..1.0))
    }

    fn marker(frame: usize) -> FilterBank {
        FilterBank::from_spatial(FeatureTensor::from_fn(2, 2, 1, |_, _, _| frame as f64))
    }

    fn frames(pool: &KeyfilterPool) -> Vec<usize> {
        pool.entries().iter().map(|e| e.frame_index).collect()
    }

    #[test]
    fn self_similarity_is_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random(&mut rng, (6, 5, 3));
        let mut pool = KeyfilterPool::new(15);
        pool.update(marker(1), t.clone(), 1);
        let v = similarity_vector(&t, &pool).unwrap();
        assert!((v[0] - t.norm_sq()).abs() < 1e-9);
    }

    #[test]
    fn disjoint_channels_have_zero_similarity() {
        let a = FeatureTensor::from_fn(4, 4, 2, |m, n, d| if d == 0 { (m + n) as f64 } else { 0.0 });
        let b = FeatureTensor::from_fn(4, 4, 2, |m, n, d| if d == 1 { (m * n) as f64 } else { 0.0 });
        let mut pool = KeyfilterPool::new(15);
        pool.update(marker(1), b, 1);
        assert!(similarity_vector(&a, &pool).unwrap()[0].abs() < 1e-9);
    }

    #[test]
    fn matches_exhaustive_shift_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(&mut rng, (4, 4, 2));
        let b = random(&mut rng, (4, 4, 2));
        let mut best = f64::NEG_INFINITY;
        for sm in 0..4 {
            for sn in 0..4 {
                let mut dot = 0.0;
                for d in 0..2 {
                    for m in 0..4 {
                        for n in 0..4 {
                            dot += a.get(m, n, d) * b.get((m + sm) % 4, (n + sn) % 4, d);
                        }
                    }
                }
                best = best.max(dot);
            }
        }
        let mut pool = KeyfilterPool::new(15);
        pool.update(marker(1), b, 1);
        assert!((similarity_vector(&a, &pool).unwrap()[0] - best).abs() < 1e-8);
    }

    #[test]
    fn selection_picks_matching_template() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let templates: Vec<_> = (0..6).map(|_| random(&mut rng, (5, 5, 2)).scaled(0.1)).collect();
        let mut pool = KeyfilterPool::new(15);
        for (i, t) in templates.iter().enumerate() {
            pool.update(marker(i + 1), t.clone(), i + 1);
        }
        let strong = templates[3].scaled(10.0);
        let mut pool2 = pool.clone();
        pool2.entries[3] = PoolEntry::new(marker(4), strong.clone(), 4);
        let chosen = select_keyfilter(&strong, &pool2).unwrap();
        assert_eq!(chosen.spatial().get(0, 0, 0), 4.0);

        let mut single = KeyfilterPool::new(15);
        single.update(marker(1), templates[0].clone(), 1);
        assert_eq!(select_keyfilter(&templates[5], &single).unwrap().spatial().get(0, 0, 0), 1.0);
    }

    #[test]
    fn ties_go_to_the_older_entry() {
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax_first(&[]), None);
    }

    #[test]
    fn empty_pool_errors() {
        let pool = KeyfilterPool::new(15);
        let t = FeatureTensor::zeros(2, 2, 1);
        assert!(matches!(similarity_vector(&t, &pool), Err(Error::EmptyPool)));
        assert!(matches!(select_keyfilter(&t, &pool), Err(Error::EmptyPool)));
    }

    #[test]
    fn full_pool_evicts_oldest_unpinned() {
        let mut pool = KeyfilterPool::new(15);
        let t = FeatureTensor::zeros(2, 2, 1);
        for f in 1..=14 {
            pool.update(marker(f), t.clone(), f);
        }
        assert_eq!(pool.len(), 14);
        pool.update(marker(15), t.clone(), 15);
        assert_eq!(frames(&pool), (1..=15).collect::<Vec<_>>());
        pool.update(marker(16), t.clone(), 16);
        let mut expect = vec![1];
        expect.extend(3..=16);
        assert_eq!(frames(&pool), expect);
    }

    #[test]
    fn lone_pinned_entry_survives() {
        let t = FeatureTensor::zeros(2, 2, 1);
        let mut pool = KeyfilterPool::new(15);
        pool.update(marker(1), t.clone(), 1);
        pool.update(marker(2), t.clone(), 2);
        assert_eq!(frames(&pool), vec![1, 2]);
        let mut tiny = KeyfilterPool::new(1);
        tiny.update(marker(1), t.clone(), 1);
        tiny.update(marker(2), t, 2);
        assert_eq!(frames(&tiny), vec![1]);
    }

    #[test]
    fn selection_modes() {
        let t = FeatureTensor::zeros(2, 2, 1);
        let mut pool = KeyfilterPool::new(15);
        for f in 1..=25 {
            pool.update(marker(f), t.clone(), f);
        }
        let pick = |s: Selection| s.select(&t, &pool).unwrap().map(|e| e.filter.spatial().get(0, 0, 0));
        assert_eq!(pick(Selection::None), None);
        assert_eq!(pick(Selection::Previous), Some(25.0));
        assert_eq!(pick(Selection::FixedPeriod { period: 10 }), Some(21.0));
        // All templates equal: ties resolve to the pinned entry.
        assert_eq!(pick(Selection::Adaptive), Some(1.0));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut pool = KeyfilterPool::new(5);
        for f in 1..=7 {
            let filter = FilterBank::from_spatial(random(&mut rng, (3, 4, 2)));
            pool.update(filter, random(&mut rng, (2, 2, 2)), f);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.bin");
        pool.save(&path).unwrap();
        let back = KeyfilterPool::load(&path).unwrap();
        assert_eq!(back.capacity(), 5);
        assert_eq!(frames(&back), frames(&pool));
        for (a, b) in back.entries().iter().zip(pool.entries()) {
            for (x, y) in a.filter.spatial().data().iter().zip(b.filter.spatial().data()) {
                assert_eq!(*x, *y as f32 as f64);
            }
        }
        std::fs::write(&path, b"\x04\0\0\0\0\0\0\0{}").unwrap();
        assert!(KeyfilterPool::load(&path).is_err());
    }
}
