//! Finite digit sequences: blocks in a fixed base, base-free digit strings,
//! concatenation with multiplicities, lexicographic enumeration, and
//! occurrence counting.
//!
//! Positions are 1-based throughout. Occurrences may overlap.

mod grams;
pub mod io;

use std::fmt;
use std::ops::Deref;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;

pub use grams::GramCounts;

/// A single digit. Bases may be large, but every construction here keeps its
/// digits small, so a machine word suffices.
pub type Digit = u32;

/// A block of digits in a fixed base: every digit lies in `0..base`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBlock")]
pub struct Block {
    base: u64,
    digits: Vec<Digit>,
}

#[derive(Deserialize)]
struct RawBlock {
    base: u64,
    digits: Vec<Digit>,
}

impl TryFrom<RawBlock> for Block {
    type Error = Error;

    fn try_from(raw: RawBlock) -> Result<Self> {
        Block::new(raw.base, raw.digits)
    }
}

impl Block {
    pub fn new(base: u64, digits: Vec<Digit>) -> Result<Self> {
        if base < 2 {
            return Err(Error::invalid(format!("block base must be at least 2, got {base}")));
        }
        if let Some((pos, &d)) = digits.iter().enumerate().find(|(_, &d)| u64::from(d) >= base) {
            return Err(Error::invalid(format!(
                "digit {d} at position {} is not a base-{base} digit",
                pos + 1
            )));
        }
        Ok(Block { base, digits })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn into_digits(self) -> Vec<Digit> {
        self.digits
    }

    pub(crate) fn new_unchecked(base: u64, digits: Vec<Digit>) -> Self {
        debug_assert!(digits.iter().all(|&d| u64::from(d) < base));
        Block { base, digits }
    }
}

impl Deref for Block {
    type Target = [Digit];

    fn deref(&self) -> &[Digit] {
        &self.digits
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.digits)
    }
}

/// A finite digit sequence with no single base, as produced by concatenating
/// segments of differing bases.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DigitString(Vec<Digit>);

impl DigitString {
    pub fn new(digits: Vec<Digit>) -> Self {
        DigitString(digits)
    }

    pub fn as_slice(&self) -> &[Digit] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Digit> {
        self.0
    }
}

impl Deref for DigitString {
    type Target = [Digit];

    fn deref(&self) -> &[Digit] {
        &self.0
    }
}

impl From<Vec<Digit>> for DigitString {
    fn from(digits: Vec<Digit>) -> Self {
        DigitString(digits)
    }
}

impl From<Block> for DigitString {
    fn from(block: Block) -> Self {
        DigitString(block.digits)
    }
}

impl FromIterator<Digit> for DigitString {
    fn from_iter<I: IntoIterator<Item = Digit>>(iter: I) -> Self {
        DigitString(iter.into_iter().collect())
    }
}

impl fmt::Display for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.0)
    }
}

fn write_tuple(f: &mut fmt::Formatter<'_>, digits: &[Digit]) -> fmt::Result {
    f.write_str("(")?;
    for (i, d) in digits.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{d}")?;
    }
    f.write_str(")")
}

/// `l_1 B_1 l_2 B_2 ... l_n B_n`: blocks with repetition counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcatSpec {
    parts: Vec<(u64, Block)>,
}

impl ConcatSpec {
    pub fn new(parts: Vec<(u64, Block)>) -> Result<Self> {
        if parts.iter().all(|(l, _)| *l == 0) {
            return Err(Error::InvalidSpec("at least one multiplicity must be positive".into()));
        }
        Ok(ConcatSpec { parts })
    }

    pub fn parts(&self) -> &[(u64, Block)] {
        &self.parts
    }

    /// `sum l_j |B_j|`.
    pub fn len(&self) -> BigUint {
        self.parts
            .iter()
            .map(|(l, b)| BigUint::from(*l) * b.len())
            .sum()
    }
}

/// Concatenates `l_j` copies of each `B_j` in order.
pub fn concat(spec: &ConcatSpec, limits: &Limits) -> Result<DigitString> {
    let len = limits.check_digits(|| "concatenation".into(), &spec.len())?;
    let mut out = Vec::with_capacity(len as usize);
    for (l, block) in &spec.parts {
        for _ in 0..*l {
            out.extend_from_slice(block);
        }
    }
    Ok(DigitString(out))
}

/// `N(B, y)`: the number of positions at which `pattern` occurs in `text`,
/// overlapping occurrences included.
pub fn count_occurrences(pattern: &[Digit], text: &[Digit]) -> Result<u64> {
    if pattern.is_empty() {
        return Err(Error::invalid("cannot count occurrences of the empty block"));
    }
    if pattern.len() > text.len() {
        return Ok(0);
    }
    Ok(text.windows(pattern.len()).filter(|w| *w == pattern).count() as u64)
}

/// Occurrences of `pattern` starting at a position no greater than `n`.
///
/// An occurrence starting at `n` may extend past `n`, so `text` must hold at
/// least `n + |pattern| - 1` digits.
pub fn count_prefix_occurrences(pattern: &[Digit], text: &[Digit], n: u64) -> Result<u64> {
    if pattern.is_empty() {
        return Err(Error::invalid("cannot count occurrences of the empty block"));
    }
    if n == 0 {
        return Ok(0);
    }
    let required = n + pattern.len() as u64 - 1;
    if required > text.len() as u64 {
        return Err(Error::NeedsMoreDigits {
            required,
            available: text.len() as u64,
        });
    }
    count_occurrences(pattern, &text[..required as usize])
}

/// Streaming form of [`count_prefix_occurrences`] for digit sources that are
/// too long to hold in memory. `digits` must yield at least `n + |pattern| - 1`
/// items.
pub fn count_prefix_occurrences_iter<I>(pattern: &[Digit], digits: I, n: u64) -> Result<u64>
where
    I: IntoIterator<Item = Digit>,
{
    if pattern.is_empty() {
        return Err(Error::invalid("cannot count occurrences of the empty block"));
    }
    if n == 0 {
        return Ok(0);
    }
    let k = pattern.len();
    let required = n + k as u64 - 1;
    let mut window = std::collections::VecDeque::with_capacity(k);
    let mut count = 0;
    let mut seen = 0u64;
    for d in digits.into_iter().take(required as usize) {
        if window.len() == k {
            window.pop_front();
        }
        window.push_back(d);
        seen += 1;
        if window.len() == k && window.iter().eq(pattern.iter()) {
            count += 1;
        }
    }
    if seen < required {
        return Err(Error::NeedsMoreDigits {
            required,
            available: seen,
        });
    }
    Ok(count)
}

/// `g_b(B)`: how many digits of a base-`b+1` block equal `b`.
pub fn count_top_digit(block: &[Digit], b: u64) -> Result<u64> {
    let mut count = 0;
    for &d in block {
        match u64::from(d).cmp(&b) {
            std::cmp::Ordering::Equal => count += 1,
            std::cmp::Ordering::Greater => {
                return Err(Error::invalid(format!("digit {d} exceeds {b}; not a base-{} block", b + 1)));
            }
            std::cmp::Ordering::Less => {}
        }
    }
    Ok(count)
}

/// Number of split indices `s` in `2..=|B|` such that `B` starts in `left`
/// and ends in `right`: `(b_1..b_{s-1})` is a suffix of `left` and
/// `(b_s..b_k)` is a prefix of `right`.
pub fn count_straddling(pattern: &[Digit], left: &[Digit], right: &[Digit]) -> u64 {
    (2..=pattern.len())
        .filter(|&s| {
            let (head, tail) = pattern.split_at(s - 1);
            left.ends_with(head) && right.starts_with(tail)
        })
        .count() as u64
}

/// All blocks of `length` digits in `base`, in lexicographic order.
pub fn enumerate_blocks(base: u64, length: usize, limits: &Limits) -> Result<BlockEnumerator> {
    if base < 2 {
        return Err(Error::invalid(format!("base must be at least 2, got {base}")));
    }
    if length == 0 {
        return Err(Error::invalid("block length must be at least 1"));
    }
    if base > u64::from(Digit::MAX) + 1 {
        return Err(Error::invalid(format!("base {base} is too large to enumerate")));
    }
    let total = BigUint::from(base).pow(length as u32);
    let total = limits.check_blocks(|| format!("enumeration of base-{base} blocks of length {length}"), &total)?;
    Ok(BlockEnumerator {
        base,
        next: Some(vec![0; length]),
        remaining: total,
    })
}

/// Odometer over base-`b` blocks of fixed length.
#[derive(Clone, Debug)]
pub struct BlockEnumerator {
    base: u64,
    next: Option<Vec<Digit>>,
    remaining: u64,
}

impl Iterator for BlockEnumerator {
    type Item = Block;

    fn next(&mut self) -> Option<Block> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let top = (self.base - 1) as Digit;
        let mut carried = true;
        for d in succ.iter_mut().rev() {
            if *d < top {
                *d += 1;
                carried = false;
                break;
            }
            *d = 0;
        }
        if !carried {
            self.next = Some(succ);
        }
        self.remaining -= 1;
        Some(Block::new_unchecked(self.base, current))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

impl ExactSizeIterator for BlockEnumerator {}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(base: u64, digits: &[Digit]) -> Block {
        Block::new(base, digits.to_vec()).unwrap()
    }

    #[test]
    fn block_rejects_out_of_range_digits() {
        assert!(Block::new(3, vec![0, 3]).is_err());
        assert!(Block::new(1, vec![0]).is_err());
        assert!(Block::new(2, vec![]).unwrap().is_empty());
    }

    #[test]
    fn block_json_has_adjacent_base() {
        let b = block(3, &[0, 2]);
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, r#"{"base":3,"digits":[0,2]}"#);
        let back: Block = serde_json::from_str(&json).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<Block>(r#"{"base":2,"digits":[2]}"#).is_err());
    }

    #[test]
    fn concat_with_multiplicities() {
        let spec = ConcatSpec::new(vec![
            (2, block(10, &[2, 3, 5])),
            (1, block(10, &[0, 8])),
            (0, block(10, &[0, 8])),
        ])
        .unwrap();
        let out = concat(&spec, &Limits::default()).unwrap();
        assert_eq!(out.as_slice(), &[2, 3, 5, 2, 3, 5, 0, 8]);

        let one = ConcatSpec::new(vec![(1, block(10, &[7]))]).unwrap();
        assert_eq!(concat(&one, &Limits::default()).unwrap().as_slice(), &[7]);

        let rep = ConcatSpec::new(vec![(3, block(2, &[0, 1]))]).unwrap();
        assert_eq!(concat(&rep, &Limits::default()).unwrap().as_slice(), &[0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn concat_rejects_all_zero_multiplicities() {
        assert!(matches!(
            ConcatSpec::new(vec![(0, block(2, &[1]))]),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn overlapping_occurrences_are_counted() {
        assert_eq!(count_occurrences(&[1, 1], &[1, 1, 1]).unwrap(), 2);
        assert_eq!(count_occurrences(&[1, 1, 1, 1], &[1, 1, 1]).unwrap(), 0);
        assert!(count_occurrences(&[], &[1]).is_err());
    }

    #[test]
    fn prefix_occurrences_may_extend_past_n() {
        assert_eq!(count_prefix_occurrences(&[0], &[0, 0, 0], 2).unwrap(), 2);
        assert_eq!(count_prefix_occurrences(&[1, 1], &[0, 1, 1, 1], 3).unwrap(), 2);
        match count_prefix_occurrences(&[1, 1], &[0, 1, 1, 1], 4) {
            Err(Error::NeedsMoreDigits { required, available }) => {
                assert_eq!((required, available), (5, 4));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn streaming_prefix_count_matches_slice_count() {
        let text = [0, 1, 1, 1, 0, 1, 1, 0, 0, 1];
        for n in 0..=9 {
            assert_eq!(
                count_prefix_occurrences_iter(&[1, 1], text.iter().copied(), n).unwrap(),
                count_prefix_occurrences(&[1, 1], &text, n).unwrap()
            );
        }
        assert!(count_prefix_occurrences_iter(&[1, 1], text.iter().copied(), 10).is_err());
    }

    #[test]
    fn top_digit_count() {
        assert_eq!(count_top_digit(&[2, 0, 2], 2).unwrap(), 2);
        assert_eq!(count_top_digit(&[4, 4, 4, 4], 4).unwrap(), 4);
        assert_eq!(count_top_digit(&[0, 1, 2], 3).unwrap(), 0);
        assert!(count_top_digit(&[0, 3], 2).is_err());
    }

    #[test]
    fn lexicographic_enumeration() {
        let limits = Limits::default();
        let all: Vec<_> = enumerate_blocks(2, 1, &limits).unwrap().map(Block::into_digits).collect();
        assert_eq!(all, vec![vec![0], vec![1]]);

        let e = enumerate_blocks(3, 2, &limits).unwrap();
        assert_eq!(e.len(), 9);
        let all: Vec<_> = e.map(Block::into_digits).collect();
        assert_eq!(&all[..3], &[vec![0, 0], vec![0, 1], vec![0, 2]]);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn enumeration_respects_cap() {
        let limits = Limits {
            max_blocks: 100,
            ..Limits::default()
        };
        assert!(matches!(enumerate_blocks(3, 5, &limits), Err(Error::SizeLimit { .. })));
        assert_eq!(enumerate_blocks(3, 4, &limits).unwrap().count(), 81);
    }

    #[test]
    fn straddles() {
        assert_eq!(count_straddling(&[5], &[5, 5], &[5, 5]), 0);
        assert_eq!(count_straddling(&[1, 0], &[0, 1], &[0, 1]), 1);
        assert_eq!(count_straddling(&[1, 1], &[1, 1], &[1, 1]), 1);
        assert_eq!(count_straddling(&[1, 1, 1], &[1, 1], &[1, 1]), 2);
    }
}
