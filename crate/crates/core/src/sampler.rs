//! Random generation: symmetric alpha-stable variates, the finest-level
//! increment sheet standing in for the multistable measure, and the derived
//! variables `eta`, `epsilon_{j,k}` and `tau_{j,k}`.
//!
//! Randomness comes from a ChaCha8 stream keyed by `seed` with stream id
//! `replica_index`; entry `l` of a sheet always consumes words `4l..4l+4` of
//! that stream, so entries can be generated in any order or in parallel.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::HaarIndex;
use crate::params::AlphaFunction;

/// Largest sheet level accepted (`2^26` entries).
pub const MAX_SHEET_LEVEL: u32 = 26;

const WORDS_PER_DRAW: u128 = 4;
const CHUNK: usize = 1 << 14;
const SHEET_MAGIC: &[u8; 8] = b"MMRLSHT\0";
const SHEET_VERSION: u32 = 1;

/// Random stream for one `(seed, stream)` pair.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Stream { rng }
    }

    /// Positions the stream at draw `index` (each draw uses two 64-bit words).
    pub fn at_draw(seed: u64, stream: u64, index: u64) -> Self {
        let mut s = Stream::new(seed, stream);
        s.rng.set_word_pos(index as u128 * WORDS_PER_DRAW);
        s
    }

    /// Two uniforms in the open interval `(0, 1)`.
    #[inline]
    pub fn uniform_pair(&mut self) -> (f64, f64) {
        (open_unit(self.rng.next_u64()), open_unit(self.rng.next_u64()))
    }
}

#[inline]
fn open_unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// A symmetric stable law with precomputed constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SasLaw {
    alpha: f64,
    scale: f64,
    tail_power: f64,
}

impl SasLaw {
    pub fn new(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("stability index {alpha} outside (0, 2]")));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!("scale {scale} must be finite and >= 0")));
        }
        Ok(SasLaw {
            alpha,
            scale,
            tail_power: (1.0 - alpha) / alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Chambers-Mallows-Stuck transform of two uniforms on `(0, 1)`.
    #[inline]
    pub fn transform(&self, u1: f64, u2: f64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let angle = PI * (u1 - 0.5);
        let w = -u2.ln();
        let x = if self.alpha == 2.0 {
            2.0 * w.sqrt() * angle.sin()
        } else if self.alpha == 1.0 {
            angle.tan()
        } else {
            // sin(aU) / cos(U)^(1/a) * (cos((1-a)U) / W)^((1-a)/a), with the
            // two powers folded into one
            let a = self.alpha;
            let c = angle.cos();
            (a * angle).sin() / c * (self.tail_power * (((1.0 - a) * angle).cos() / (w * c)).ln()).exp()
        };
        self.scale * x
    }

    #[inline]
    pub fn sample(&self, stream: &mut Stream) -> f64 {
        let (u1, u2) = stream.uniform_pair();
        self.transform(u1, u2)
    }
}

/// One SaS variate with characteristic function `exp(-scale^a |xi|^a)`.
pub fn sample_sas(alpha: f64, scale: f64, stream: &mut Stream) -> Result<f64> {
    Ok(SasLaw::new(alpha, scale)?.sample(stream))
}

/// `n` independent SaS variates from stream `(seed, stream_id)`.
pub fn sample_sas_vec(alpha: f64, scale: f64, n: usize, seed: u64, stream_id: u64) -> Result<Vec<f64>> {
    let law = SasLaw::new(alpha, scale)?;
    let mut out = vec![0.0; n];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut s = Stream::at_draw(seed, stream_id, (c * CHUNK) as u64);
        for x in chunk.iter_mut() {
            *x = law.sample(&mut s);
        }
    });
    Ok(out)
}

/// Finest-level increments approximating the multistable measure of the
/// dyadic cells `[2^-J l, 2^-J (l+1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSheet {
    pub level: u32,
    pub increments: Vec<f64>,
    pub seed: u64,
    pub replica_index: u64,
    /// `alpha(2^-J l)` per entry.
    pub alphas: Vec<f64>,
}

fn check_level(level: u32) -> Result<()> {
    if level > MAX_SHEET_LEVEL {
        return Err(Error::Resource(format!(
            "sheet level {level} exceeds the guard {MAX_SHEET_LEVEL}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum CellLaws {
    Constant(SasLaw),
    Varying(Vec<SasLaw>),
}

fn cell_laws(alpha: &AlphaFunction, level: u32) -> Result<CellLaws> {
    let width = (-(level as f64)).exp2();
    if alpha.is_constant() {
        let a = alpha.alpha_min;
        return Ok(CellLaws::Constant(SasLaw::new(a, width.powf(1.0 / a))?));
    }
    (0..1usize << level)
        .map(|l| {
            let a = alpha.value(l as f64 * width);
            SasLaw::new(a, width.powf(1.0 / a))
        })
        .collect::<Result<_>>()
        .map(CellLaws::Varying)
}

/// Reusable generator for sheets of one `(alpha, level)`.
#[derive(Debug, Clone)]
pub struct SheetSampler {
    level: u32,
    laws: CellLaws,
}

impl SheetSampler {
    pub fn new(alpha: &AlphaFunction, level: u32) -> Result<Self> {
        if level < 1 {
            return Err(Error::Domain("sheet level must be at least 1".into()));
        }
        check_level(level)?;
        Ok(SheetSampler { level, laws: cell_laws(alpha, level)? })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        1usize << self.level
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Entries `start..start + out.len()` of sheet `(seed, replica_index)`.
    pub fn fill_range(&self, seed: u64, replica_index: u64, start: usize, out: &mut [f64]) {
        assert!(start + out.len() <= self.len());
        let mut s = Stream::at_draw(seed, replica_index, start as u64);
        match &self.laws {
            CellLaws::Constant(law) => {
                for x in out.iter_mut() {
                    *x = law.sample(&mut s);
                }
            }
            CellLaws::Varying(laws) => {
                for (x, law) in out.iter_mut().zip(&laws[start..]) {
                    *x = law.sample(&mut s);
                }
            }
        }
    }

    /// Fills `out` with the increments of `(seed, replica_index)` sequentially.
    pub fn fill(&self, seed: u64, replica_index: u64, out: &mut [f64]) {
        assert_eq!(out.len(), self.len());
        self.fill_range(seed, replica_index, 0, out);
    }

    pub fn increments(&self, seed: u64, replica_index: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        if out.len() <= CHUNK {
            self.fill(seed, replica_index, &mut out);
        } else {
            out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
                self.fill_range(seed, replica_index, c * CHUNK, chunk);
            });
        }
        out
    }

    fn alphas(&self) -> Vec<f64> {
        match &self.laws {
            CellLaws::Constant(law) => vec![law.alpha(); self.len()],
            CellLaws::Varying(laws) => laws.iter().map(|l| l.alpha()).collect(),
        }
    }

    pub fn sheet(&self, seed: u64, replica_index: u64) -> IncrementSheet {
        IncrementSheet {
            level: self.level,
            increments: self.increments(seed, replica_index),
            seed,
            replica_index,
            alphas: self.alphas(),
        }
    }
}

pub fn sample_increment_sheet(
    alpha: &AlphaFunction,
    level: u32,
    seed: u64,
    replica_index: u64,
) -> Result<IncrementSheet> {
    Ok(SheetSampler::new(alpha, level)?.sheet(seed, replica_index))
}

impl IncrementSheet {
    /// A sheet with given increments (e.g. zeros or hand-built values).
    pub fn from_increments(increments: Vec<f64>, alpha: &AlphaFunction) -> Result<Self> {
        let n = increments.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Domain(format!("sheet length {n} must be a power of two >= 2")));
        }
        let level = n.trailing_zeros();
        check_level(level)?;
        let width = (-(level as f64)).exp2();
        Ok(IncrementSheet {
            level,
            alphas: (0..n).map(|l| alpha.value(l as f64 * width)).collect(),
            increments,
            seed: 0,
            replica_index: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Entrywise sum with another sheet of the same level.
    pub fn add(&self, other: &IncrementSheet) -> Result<IncrementSheet> {
        if self.level != other.level {
            return Err(Error::Domain("sheet levels differ".into()));
        }
        let mut out = self.clone();
        for (x, y) in out.increments.iter_mut().zip(&other.increments) {
            *x += y;
        }
        Ok(out)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SHEET_MAGIC)?;
        w.write_all(&SHEET_VERSION.to_le_bytes())?;
        w.write_all(&self.level.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.replica_index.to_le_bytes())?;
        for x in &self.increments {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a sheet; the alpha snapshot is rebuilt from `alpha`.
    pub fn read_from<R: Read>(mut r: R, alpha: &AlphaFunction) -> Result<IncrementSheet> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SHEET_MAGIC {
            return Err(Error::SheetFormat("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != SHEET_VERSION {
            return Err(Error::SheetFormat(format!("unsupported version {version}")));
        }
        r.read_exact(&mut b4)?;
        let level = u32::from_le_bytes(b4);
        if level < 1 {
            return Err(Error::SheetFormat("level must be at least 1".into()));
        }
        check_level(level)?;
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let replica_index = u64::from_le_bytes(b8);
        let n = 1usize << level;
        let mut increments = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            increments.push(f64::from_le_bytes(b8));
        }
        let mut sheet = IncrementSheet::from_increments(increments, alpha)?;
        sheet.seed = seed;
        sheet.replica_index = replica_index;
        Ok(sheet)
    }
}

/// Block sums of a sheet at every level `0..=J`, built pairwise from the finest.
#[derive(Debug, Clone)]
pub struct SheetPyramid {
    levels: Vec<Vec<f64>>,
}

impl SheetPyramid {
    pub fn new(sheet: &IncrementSheet) -> Self {
        let mut levels = vec![sheet.increments.clone()];
        while levels.last().map_or(0, Vec::len) > 1 {
            let finer = levels.last().unwrap();
            let coarser = finer.chunks_exact(2).map(|p| p[0] + p[1]).collect();
            levels.push(coarser);
        }
        levels.reverse();
        SheetPyramid { levels }
    }

    pub fn top_level(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    /// Increments of the level-`j` cells.
    pub fn block_sums(&self, j: u32) -> &[f64] {
        &self.levels[j as usize]
    }

    /// `epsilon_{j,k}` for all `k`, requires `j < J`.
    pub fn epsilons(&self, j: u32) -> Vec<f64> {
        self.levels[j as usize + 1]
            .chunks_exact(2)
            .map(|p| p[0] - p[1])
            .collect()
    }
}

/// `eta`: the measure of `[0, 1)`, i.e. the sum of all entries.
pub fn eta_from_sheet(sheet: &IncrementSheet) -> f64 {
    sheet.increments.iter().sum()
}

/// `epsilon_{j,k}`: entries under the first half of the Haar support minus
/// entries under the second half.
pub fn epsilon_from_sheet(sheet: &IncrementSheet, idx: HaarIndex) -> Result<f64> {
    if idx.j >= sheet.level {
        return Err(Error::Index(format!(
            "epsilon at scale {} needs a sheet finer than level {}",
            idx.j, sheet.level
        )));
    }
    let block = 1usize << (sheet.level - idx.j);
    let start = idx.k as usize * block;
    let half = block / 2;
    let first: f64 = sheet.increments[start..start + half].iter().sum();
    let second: f64 = sheet.increments[start + half..start + block].iter().sum();
    Ok(first - second)
}

/// Partial sums `tau_{j,k}` of the scale-`j` Haar variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleTrace {
    pub j: u32,
    pub partial_sums: Vec<f64>,
    pub max_abs: f64,
}

pub fn martingale_trace(sheet: &IncrementSheet, j: u32) -> Result<MartingaleTrace> {
    if j >= sheet.level {
        return Err(Error::Index(format!(
            "martingale scale {j} needs a sheet finer than level {}",
            sheet.level
        )));
    }
    let eps = (0..(1u64 << j))
        .map(|k| epsilon_from_sheet(sheet, HaarIndex { j, k }))
        .collect::<Result<Vec<_>>>()?;
    Ok(trace_from_epsilons(j, &eps))
}

pub(crate) fn trace_from_epsilons(j: u32, eps: &[f64]) -> MartingaleTrace {
    let mut acc = 0.0;
    let partial_sums: Vec<f64> = eps
        .iter()
        .map(|e| {
            acc += e;
            acc
        })
        .collect();
    let max_abs = partial_sums.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    MartingaleTrace { j, partial_sums, max_abs }
}
