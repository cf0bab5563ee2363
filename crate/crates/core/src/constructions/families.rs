//! Parameter families: the `P`-block construction whose orbit collapses to 0,
//! the `C`-block construction that is distribution normal, and the explicit
//! counterexample sequence whose digits never vanish.
//!
//! The unscaled parameters are far beyond anything materializable (the first
//! nontrivial `P` block alone has `36 * 2^216` digits), so both families take
//! the block width and copy count as functions of the segment index. The
//! `literal_*` helpers reproduce the unscaled choices; requesting them fails
//! with a size-limit error.

use std::ops::RangeInclusive;

use num_bigint::BigUint;

use super::builders::{c_len, p_len};
use super::spec::{BlockGen, ConstructionSpec, SegmentSpec};
use crate::blocks::{Digit, DigitString};
use crate::error::{Error, Result};
use crate::exact::pow2;
use crate::limits::Limits;

/// Block width `i^2` of the unscaled `P`-block family.
pub fn qnex_literal_width(i: u64) -> u64 {
    i * i
}

/// Copy count `2^{4 i^2}` of the unscaled `P`-block family.
pub fn qnex_literal_copies(i: u64) -> BigUint {
    pow2(4 * i * i)
}

/// Block width `i^2` of the unscaled `C`-block family.
pub fn qde_literal_width(i: u64) -> u64 {
    i * i
}

/// Copy count `i^{3i}` of the unscaled `C`-block family.
pub fn qde_literal_copies(i: u64) -> BigUint {
    BigUint::from(i).pow((3 * i) as u32)
}

fn copies_u64(i: u64, copies: BigUint) -> Result<u64> {
    u64::try_from(&copies).map_err(|_| {
        Error::size_limit(
            format!("l_{i} copies (positions must fit in 64 bits; the unscaled family is infeasible)"),
            copies.clone(),
            u64::MAX,
        )
    })
}

fn check_block_size(what: String, len: BigUint, limits: &Limits) -> Result<()> {
    limits
        .check_digits(|| format!("{what} (the unscaled family is infeasible; use a scaled width)"), &len)
        .map(drop)
}

/// Segments `1..i_min` are `x_i = (0,1)`, `b_i = 2`, `l_i = 0`; for `i` in
/// `range`, `x_i = P_{i, width(i)}`, `b_i = 2^i`, `l_i = copies(i)`.
///
/// Every digit of segment `i` is at most `i`, while its base is `2^i`.
pub fn qnex_spec<W, L>(range: RangeInclusive<u64>, width: W, copies: L, limits: &Limits) -> Result<ConstructionSpec>
where
    W: Fn(u64) -> u64,
    L: Fn(u64) -> BigUint,
{
    let (i_min, i_max) = (*range.start(), *range.end());
    if i_min < 6 {
        return Err(Error::invalid(format!("the P-block family starts at i >= 6, got {i_min}")));
    }
    if i_max < i_min || i_max > 62 {
        return Err(Error::invalid(format!("index range {i_min}..={i_max} is empty or exceeds 62")));
    }
    let mut segments: Vec<SegmentSpec> = (1..i_min)
        .map(|_| SegmentSpec {
            l: 0,
            block: BlockGen::Explicit { digits: vec![0, 1] },
            base: 2,
        })
        .collect();
    for i in range {
        let w = width(i);
        check_block_size(format!("x_{i} = P_{{{i},{w}}}"), p_len(i, w), limits)?;
        segments.push(SegmentSpec {
            l: copies_u64(i, copies(i))?,
            block: BlockGen::P { b: i, w },
            base: 1 << i,
        });
    }
    ConstructionSpec::new(segments, limits)
}

/// The scaled `P`-block family used by default: `i` in `6..=10`,
/// `x_i = P_{i,2}`, `l_i = 2^{2i}`.
pub fn qnex_default(limits: &Limits) -> Result<ConstructionSpec> {
    qnex_spec(6..=10, |_| 2, |i| pow2(2 * i), limits)
}

/// Segment 1 is `x_1 = (0,1)`, `b_1 = 2`, `l_1 = 0`; for `i >= 2`,
/// `x_i = C_{i, width(i)}` and `b_i = i`, with `l_i = copies(i)` inside `range`
/// and `l_i = 0` below it.
pub fn qde_spec<W, L>(range: RangeInclusive<u64>, width: W, copies: L, limits: &Limits) -> Result<ConstructionSpec>
where
    W: Fn(u64) -> u64,
    L: Fn(u64) -> BigUint,
{
    let (i_min, i_max) = (*range.start(), *range.end());
    if i_min < 2 {
        return Err(Error::invalid(format!("the C-block family starts at i >= 2, got {i_min}")));
    }
    if i_max < i_min {
        return Err(Error::invalid(format!("index range {i_min}..={i_max} is empty")));
    }
    let mut segments = vec![SegmentSpec {
        l: 0,
        block: BlockGen::Explicit { digits: vec![0, 1] },
        base: 2,
    }];
    for i in 2..=i_max {
        let w = width(i);
        check_block_size(format!("x_{i} = C_{{{i},{w}}}"), c_len(i, w), limits)?;
        let l = if i >= i_min { copies_u64(i, copies(i))? } else { 0 };
        segments.push(SegmentSpec {
            l,
            block: BlockGen::C { b: i, w },
            base: i,
        });
    }
    ConstructionSpec::new(segments, limits)
}

/// The scaled `C`-block family used by default: `i` in `2..=12`,
/// `x_i = C_{i,2}`, `l_i = i^3`.
pub fn qde_default(limits: &Limits) -> Result<ConstructionSpec> {
    qde_spec(2..=12, |_| 2, |i| BigUint::from(i * i * i), limits)
}

/// First `n_max` terms of the counterexample sequence: row `m` contributes
/// digits `1, 2, ..., m`, each read with `q = m + 1`. No digit is ever 0.
///
/// Returns `(q_1..q_{n_max}, E_1..E_{n_max})`.
pub fn salat_counterexample(n_max: u64) -> (Vec<u64>, DigitString) {
    let mut q = Vec::with_capacity(n_max as usize);
    let mut e = Vec::with_capacity(n_max as usize);
    let mut row = 1u64;
    'rows: loop {
        for d in 1..=row {
            if q.len() as u64 == n_max {
                break 'rows;
            }
            q.push(row + 1);
            e.push(d as Digit);
        }
        row += 1;
    }
    (q, DigitString::new(e))
}

/// Number of terms in rows `1..=m`: `m(m+1)/2`.
pub fn salat_row_end(m: u64) -> u64 {
    m * (m + 1) / 2
}
