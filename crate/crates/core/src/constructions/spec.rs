use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::builders::{build_c, build_p, c_len, p_len};
use crate::blocks::{Block, Digit};
use crate::error::{Error, Result};
use crate::limits::Limits;

/// How a segment's block is produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gen")]
pub enum BlockGen {
    #[serde(rename = "P")]
    P { b: u64, w: u64 },
    #[serde(rename = "C")]
    C { b: u64, w: u64 },
    #[serde(rename = "explicit")]
    Explicit { digits: Vec<Digit> },
}

impl BlockGen {
    /// Length of the generated block, without building it.
    pub fn len(&self) -> BigUint {
        match self {
            BlockGen::P { b, w } => p_len(*b, *w),
            BlockGen::C { b, w } => c_len(*b, *w),
            BlockGen::Explicit { digits } => BigUint::from(digits.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, BlockGen::Explicit { digits } if digits.is_empty())
    }

    fn build(&self, base: u64, limits: &Limits) -> Result<Block> {
        let digits = match self {
            BlockGen::P { b, w } => build_p(*b, *w, limits)?.into_digits(),
            BlockGen::C { b, w } => build_c(*b, *w, limits)?.into_digits(),
            BlockGen::Explicit { digits } => digits.clone(),
        };
        Block::new(base, digits)
    }
}

/// One `(l_i, x_i, b_i)` triple: `l_i` copies of block `x_i`, read with
/// `q_n = b_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub l: u64,
    pub block: BlockGen,
    pub base: u64,
}

/// On-disk form of a [`ConstructionSpec`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub segments: Vec<SegmentSpec>,
}

/// A resolved segment with its block materialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub l: u64,
    pub gen: BlockGen,
    pub block: Block,
}

impl Segment {
    pub fn base(&self) -> u64 {
        self.block.base()
    }

    /// `l_i |x_i|`.
    pub fn span(&self) -> u64 {
        self.l * self.block.len() as u64
    }
}

/// Both segment-index conventions for a position `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SegmentIndex {
    /// `i(n)`: the largest `i` with `L_i < n`, so `L_i < n <= L_{i+1}`.
    pub idef: usize,
    /// `j(n)`: the `j` with `L_{j-1} < n + 1 <= L_j`; `None` when `n + 1` lies
    /// past the end of the construction.
    pub t0: Option<usize>,
}

/// The digit sequence `l_1 x_1 l_2 x_2 ...` together with its basic sequence
/// `q_n = b_i` for `L_{i-1} < n <= L_i`.
///
/// Segments are numbered from 1. Segments with `l_i = 0` are legal and
/// contribute nothing. Digits are served by random access, so only the blocks
/// themselves are held in memory even when the total length is astronomically
/// larger.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionSpec {
    segments: Vec<Segment>,
    // ends[i] = L_i, with ends[0] = 0
    ends: Vec<u64>,
}

impl ConstructionSpec {
    pub fn new(specs: Vec<SegmentSpec>, limits: &Limits) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidSpec("a construction needs at least one segment".into()));
        }
        let held: BigUint = specs.iter().map(|s| s.block.len()).sum();
        limits.check_digits(|| "blocks of the construction".into(), &held)?;

        let mut segments = Vec::with_capacity(specs.len());
        let mut ends = vec![0u64];
        for (idx, spec) in specs.into_iter().enumerate() {
            let i = idx + 1;
            if spec.base < 2 {
                return Err(Error::InvalidSpec(format!("segments[{idx}].base: must be >= 2, got {}", spec.base)));
            }
            let block = spec.block.build(spec.base, limits).map_err(|e| match e {
                Error::InvalidArgument(msg) => Error::InvalidSpec(format!("segments[{idx}].block: {msg}")),
                other => other,
            })?;
            let span = BigUint::from(spec.l) * block.len();
            let end = u64::try_from(span + ends[i - 1])
                .map_err(|_| Error::size_limit(format!("L_{i}"), BigUint::from(u64::MAX) + 1u32, u64::MAX))?;
            ends.push(end);
            segments.push(Segment {
                l: spec.l,
                gen: spec.block,
                block,
            });
        }
        Ok(ConstructionSpec { segments, ends })
    }

    pub fn from_json(json: &str, limits: &Limits) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(json).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        ConstructionSpec::new(file.segments, limits)
    }

    pub fn to_spec_file(&self) -> SpecFile {
        SpecFile {
            segments: self
                .segments
                .iter()
                .map(|s| SegmentSpec {
                    l: s.l,
                    block: s.gen.clone(),
                    base: s.base(),
                })
                .collect(),
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment `i`, numbered from 1.
    pub fn segment(&self, i: usize) -> Option<&Segment> {
        i.checked_sub(1).and_then(|idx| self.segments.get(idx))
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// `L_i` for `i` in `0..=segment_count()`.
    pub fn prefix_len(&self, i: usize) -> u64 {
        self.ends[i]
    }

    pub fn prefix_lens(&self) -> &[u64] {
        &self.ends
    }

    /// Total number of digits, `L_s`.
    pub fn len(&self) -> u64 {
        *self.ends.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether `|x_i|` is non-decreasing across segments.
    pub fn lengths_nondecreasing(&self) -> bool {
        self.segments.windows(2).all(|w| w[0].block.len() <= w[1].block.len())
    }

    fn check_position(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.len() {
            return Err(Error::OutOfRange {
                position: n,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// The segment holding position `n`: the `j` with `L_{j-1} < n <= L_j`.
    pub fn owner(&self, n: u64) -> Result<usize> {
        self.check_position(n)?;
        Ok(self.ends.partition_point(|&end| end < n))
    }

    pub fn segment_index(&self, n: u64) -> Result<SegmentIndex> {
        self.check_position(n)?;
        let idef = self.ends.partition_point(|&end| end < n) - 1;
        let t0 = if n < self.len() { Some(self.owner(n + 1)?) } else { None };
        Ok(SegmentIndex { idef, t0 })
    }

    /// `q_n`.
    pub fn base_at(&self, n: u64) -> Result<u64> {
        Ok(self.segments[self.owner(n)? - 1].base())
    }

    /// `E_n`.
    pub fn digit_at(&self, n: u64) -> Result<Digit> {
        let i = self.owner(n)?;
        let seg = &self.segments[i - 1];
        let offset = (n - self.ends[i - 1] - 1) % seg.block.len() as u64;
        Ok(seg.block[offset as usize])
    }

    /// `(q_n, E_n)` for `n` in `1..=n_max`, streamed.
    pub fn assemble(&self, n_max: u64) -> Result<Assembly<'_>> {
        self.range(1, n_max)
    }

    /// `(q_n, E_n)` for `n` in `start..=end`, streamed; empty when `end < start`.
    pub fn range(&self, start: u64, end: u64) -> Result<Assembly<'_>> {
        if start == 0 {
            return Err(Error::invalid("positions start at 1"));
        }
        if end > self.len() {
            return Err(Error::NeedsMoreSegments {
                requested: end,
                available: self.len(),
            });
        }
        if end < start {
            return Ok(Assembly {
                spec: self,
                segment: 0,
                offset: 0,
                pos: start,
                remaining: 0,
            });
        }
        let i = self.owner(start)?;
        let offset = ((start - self.ends[i - 1] - 1) % self.segments[i - 1].block.len() as u64) as usize;
        Ok(Assembly {
            spec: self,
            segment: i - 1,
            offset,
            pos: start,
            remaining: end - start + 1,
        })
    }

    /// Positions `n` such that `L_{i-1} < n <= L_i`, per segment: `(i, first, last)`
    /// for every segment with positive span.
    pub fn runs(&self) -> impl Iterator<Item = (usize, u64, u64)> + '_ {
        (1..self.ends.len())
            .filter(|&i| self.ends[i] > self.ends[i - 1])
            .map(|i| (i, self.ends[i - 1] + 1, self.ends[i]))
    }
}

/// Streaming `(q_n, E_n)` iterator over a [`ConstructionSpec`].
#[derive(Clone, Debug)]
pub struct Assembly<'a> {
    spec: &'a ConstructionSpec,
    segment: usize,
    offset: usize,
    pos: u64,
    remaining: u64,
}

impl Iterator for Assembly<'_> {
    type Item = (u64, Digit);

    fn next(&mut self) -> Option<(u64, Digit)> {
        if self.remaining == 0 {
            return None;
        }
        // skip exhausted and empty segments
        while self.pos > self.spec.ends[self.segment + 1] {
            self.segment += 1;
            self.offset = 0;
        }
        let seg = &self.spec.segments[self.segment];
        let d = seg.block[self.offset];
        self.offset += 1;
        if self.offset == seg.block.len() {
            self.offset = 0;
        }
        self.pos += 1;
        self.remaining -= 1;
        Some((seg.base(), d))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

impl ExactSizeIterator for Assembly<'_> {}
