//! Finite-horizon views of the growth conditions on block families.
//!
//! The conditions are little-o statements and cannot be decided from finitely
//! many terms, so nothing here passes or fails. Each table lists the exact
//! ratios whose vanishing the conditions require, with a monotone-trend flag.

use std::ops::RangeInclusive;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::blocks::Block;
use crate::error::{Error, Result};
use crate::exact;
use crate::limits::Limits;
use crate::weightings::{check_pb_uniform, Weighting};

/// One index of a block-friendly family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BffEntry {
    pub l: BigUint,
    pub b: u64,
    pub p: u64,
    pub eps: BigRational,
    pub k: u64,
    pub weighting: Weighting,
}

/// A finite window `i = first_index, first_index + 1, ...` of a
/// block-friendly family `(l_i, b_i, p_i, ε_i, k_i, μ_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BffSpec {
    pub first_index: u64,
    pub entries: Vec<BffEntry>,
}

impl BffSpec {
    /// Validates monotonicity of `l, b, p, k`, `b_i >= 2`, strictly decreasing
    /// positive `ε`, and `(p_i, b_i)`-uniformity of each weighting on blocks of
    /// length up to `uniform_k`.
    pub fn new(first_index: u64, entries: Vec<BffEntry>, uniform_k: usize, limits: &Limits) -> Result<Self> {
        let spec = BffSpec { first_index, entries };
        spec.validate(uniform_k, limits)?;
        Ok(spec)
    }

    /// A window whose invariants are not checked, for inspecting degenerate
    /// families.
    pub fn unvalidated(first_index: u64, entries: Vec<BffEntry>) -> Self {
        BffSpec { first_index, entries }
    }

    pub fn validate(&self, uniform_k: usize, limits: &Limits) -> Result<()> {
        let bad = |i: u64, msg: &str| Err(Error::InvalidSpec(format!("BFF index {i}: {msg}")));
        for (idx, e) in self.entries.iter().enumerate() {
            let i = self.first_index + idx as u64;
            if e.b < 2 {
                return bad(i, "b_i must be at least 2");
            }
            if e.eps <= BigRational::zero() {
                return bad(i, "epsilon must be positive");
            }
            if !check_pb_uniform(&e.weighting, e.p, e.b, uniform_k, limits)? {
                return bad(i, "weighting is not (p_i, b_i)-uniform");
            }
            if idx > 0 {
                let prev = &self.entries[idx - 1];
                if e.l < prev.l || e.b < prev.b || e.p < prev.p || e.k < prev.k {
                    return bad(i, "l, b, p and k must be non-decreasing");
                }
                if e.eps >= prev.eps {
                    return bad(i, "epsilon must strictly decrease");
                }
            }
        }
        Ok(())
    }

    fn entry(&self, i: u64) -> Option<&BffEntry> {
        i.checked_sub(self.first_index)
            .and_then(|idx| self.entries.get(idx as usize))
    }

    /// The family backing the `P`-block construction, indexes `1..=i_max`:
    /// `p_i = 2, k_i = 1, μ_i = λ_2, b_i = 2, l_i = 0` for `i <= 5` with the
    /// supplied `early_eps`, then `p_i = k_i = i`, `μ_i = ν_i`, `b_i = 2^i`,
    /// `ε_i = 1/i` and `l_i = copies(i)`.
    pub fn qnex<L>(i_max: u64, copies: L, early_eps: [BigRational; 5]) -> Self
    where
        L: Fn(u64) -> BigUint,
    {
        let mut entries: Vec<BffEntry> = early_eps
            .into_iter()
            .map(|eps| BffEntry {
                l: BigUint::zero(),
                b: 2,
                p: 2,
                eps,
                k: 1,
                weighting: Weighting::Uniform { base: 2 },
            })
            .collect();
        entries.extend((6..=i_max).map(|i| BffEntry {
            l: copies(i),
            b: 1 << i,
            p: i,
            eps: exact::ratio(1, i),
            k: i,
            weighting: Weighting::Nu { b: i },
        }));
        BffSpec::unvalidated(1, entries)
    }
}

/// One index of a modular-friendly family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MffEntry {
    pub l: BigUint,
    pub b: u64,
    pub eps: BigRational,
}

/// A finite window of a modular-friendly family `(l_i, b_i, ε_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MffSpec {
    pub first_index: u64,
    pub entries: Vec<MffEntry>,
}

impl MffSpec {
    /// Validates non-decreasing `l` and `b`, `b_i >= 2`, and `ε` strictly
    /// decreasing inside `(0, 1)`.
    pub fn new(first_index: u64, entries: Vec<MffEntry>) -> Result<Self> {
        for (idx, e) in entries.iter().enumerate() {
            let i = first_index + idx as u64;
            let bad = |msg: &str| Err(Error::InvalidSpec(format!("MFF index {i}: {msg}")));
            if e.b < 2 {
                return bad("b_i must be at least 2");
            }
            if e.eps <= BigRational::zero() || e.eps >= BigRational::one() {
                return bad("epsilon must lie in (0,1)");
            }
            if idx > 0 {
                let prev = &entries[idx - 1];
                if e.l < prev.l || e.b < prev.b {
                    return bad("l and b must be non-decreasing");
                }
                if e.eps >= prev.eps {
                    return bad("epsilon must strictly decrease");
                }
            }
        }
        Ok(MffSpec { first_index, entries })
    }

    pub fn unvalidated(first_index: u64, entries: Vec<MffEntry>) -> Self {
        MffSpec { first_index, entries }
    }

    pub fn entry(&self, i: u64) -> Option<&MffEntry> {
        i.checked_sub(self.first_index)
            .and_then(|idx| self.entries.get(idx as usize))
    }

    pub fn last_index(&self) -> u64 {
        self.first_index + self.entries.len() as u64 - 1
    }

    /// The family backing the `C`-block construction, indexes `1..=i_max`:
    /// `(l_1, b_1, ε_1) = (0, 2, 3/5)` and `(copies(i), i, 1/i)` for `i >= 2`
    /// (`l_i = 0` below `i_min`).
    pub fn qde<L>(i_min: u64, i_max: u64, copies: L) -> Result<Self>
    where
        L: Fn(u64) -> BigUint,
    {
        let mut entries = vec![MffEntry {
            l: BigUint::zero(),
            b: 2,
            eps: exact::ratio(3, 5),
        }];
        entries.extend((2..=i_max).map(|i| MffEntry {
            l: if i >= i_min { copies(i) } else { BigUint::zero() },
            b: i,
            eps: exact::ratio(1, i),
        }));
        MffSpec::new(1, entries)
    }
}

/// Direction of a column of ratios, judged on its defined entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decreasing,
    Increasing,
    Constant,
    Mixed,
    /// Fewer than two defined values.
    Undetermined,
}

impl Trend {
    pub fn of<'a>(values: impl IntoIterator<Item = Option<&'a BigRational>>) -> Trend {
        let defined: Vec<&BigRational> = values.into_iter().flatten().collect();
        if defined.len() < 2 {
            return Trend::Undetermined;
        }
        let pairs = || defined.windows(2);
        if pairs().all(|w| w[1] < w[0]) {
            Trend::Decreasing
        } else if pairs().all(|w| w[1] > w[0]) {
            Trend::Increasing
        } else if pairs().all(|w| w[1] == w[0]) {
            Trend::Constant
        } else {
            Trend::Mixed
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoodRow {
    pub i: u64,
    /// `b_i^k / ((ε_{i-1} - ε_i) |x_i|)`.
    #[serde(with = "exact::serde_str_opt")]
    pub r1: Option<BigRational>,
    /// `(l_{i-1}|x_{i-1}|) / (l_i|x_i|) * i * b_i^k`.
    #[serde(with = "exact::serde_str_opt")]
    pub r2: Option<BigRational>,
    /// `|x_{i+1}| / (l_i|x_i|) * b_i^k`.
    #[serde(with = "exact::serde_str_opt")]
    pub r3: Option<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoodTable {
    pub k: u64,
    pub rows: Vec<GoodRow>,
    pub trends: [Trend; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// `|x_i|` for each block, as big integers.
pub fn block_lengths(blocks: &[Block]) -> Vec<BigUint> {
    blocks.iter().map(|b| BigUint::from(b.len())).collect()
}

fn div(num: BigUint, den: BigUint) -> Option<BigRational> {
    (!den.is_zero()).then(|| exact::ratio_big(&num, &den))
}

fn lookup(lengths: &[BigUint], first_index: u64, i: u64) -> Option<&BigUint> {
    i.checked_sub(first_index).and_then(|idx| lengths.get(idx as usize))
}

/// Ratios behind the three growth conditions, for each `i` in `range`.
///
/// `lengths[j]` is `|x_{first_index + j}|`; lengths rather than blocks are
/// taken so that analytically known sizes of unbuildable blocks can be used.
/// A ratio needing an index outside the window, or dividing by zero, is
/// reported as undefined.
pub fn bff_good_diagnostics(
    family: &BffSpec,
    lengths: &[BigUint],
    k: u64,
    range: RangeInclusive<u64>,
) -> Result<GoodTable> {
    if lengths.len() != family.entries.len() {
        return Err(Error::invalid(format!(
            "{} block lengths given for {} family entries",
            lengths.len(),
            family.entries.len()
        )));
    }
    let first = family.first_index;
    let mut rows = Vec::new();
    for i in range {
        let (Some(cur), Some(len)) = (family.entry(i), lookup(lengths, first, i)) else {
            return Err(Error::invalid(format!("index {i} is outside the family window")));
        };
        let bk = BigUint::from(cur.b).pow(k as u32);
        let prev = i.checked_sub(1).and_then(|p| family.entry(p).zip(lookup(lengths, first, p)));
        let next_len = lookup(lengths, first, i + 1);
        let mass = &cur.l * len;

        let r1 = prev.and_then(|(p, _)| {
            let gap = &p.eps - &cur.eps;
            (!gap.is_zero() && !len.is_zero()).then(|| exact::from_biguint(&bk) / (gap * exact::from_biguint(len)))
        });
        let r2 = prev.and_then(|(p, plen)| div(&p.l * plen * i * &bk, mass.clone()));
        let r3 = next_len.and_then(|nlen| div(nlen * &bk, mass.clone()));
        rows.push(GoodRow { i, r1, r2, r3 });
    }
    let trends = [
        Trend::of(rows.iter().map(|r| r.r1.as_ref())),
        Trend::of(rows.iter().map(|r| r.r2.as_ref())),
        Trend::of(rows.iter().map(|r| r.r3.as_ref())),
    ];
    let note = (k == 0).then(|| {
        "k = 0 belongs to R(W) but length-0 occurrence counts are undefined; ratios shown with b^0 = 1".to_string()
    });
    Ok(GoodTable { k, rows, trends, note })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NiceRow {
    pub i: u64,
    /// `(l_{i-1}/l_i)(|x_{i-1}|/|x_i|) * i`.
    #[serde(with = "exact::serde_str_opt")]
    pub n1: Option<BigRational>,
    /// `(1/l_i)(|x_{i+1}|/|x_i|)`.
    #[serde(with = "exact::serde_str_opt")]
    pub n2: Option<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NiceTable {
    pub rows: Vec<NiceRow>,
    pub trends: [Trend; 2],
}

/// Ratios behind the two growth conditions on a modular-friendly family.
pub fn mff_nice_diagnostics(family: &MffSpec, lengths: &[BigUint], range: RangeInclusive<u64>) -> Result<NiceTable> {
    if lengths.len() != family.entries.len() {
        return Err(Error::invalid(format!(
            "{} block lengths given for {} family entries",
            lengths.len(),
            family.entries.len()
        )));
    }
    let first = family.first_index;
    let mut rows = Vec::new();
    for i in range {
        let (Some(cur), Some(len)) = (family.entry(i), lookup(lengths, first, i)) else {
            return Err(Error::invalid(format!("index {i} is outside the family window")));
        };
        let prev = i.checked_sub(1).and_then(|p| family.entry(p).zip(lookup(lengths, first, p)));
        let mass = &cur.l * len;
        let n1 = prev.and_then(|(p, plen)| div(&p.l * plen * i, mass.clone()));
        let n2 = lookup(lengths, first, i + 1).and_then(|nlen| div(nlen.clone(), mass.clone()));
        rows.push(NiceRow { i, n1, n2 });
    }
    let trends = [
        Trend::of(rows.iter().map(|r| r.n1.as_ref())),
        Trend::of(rows.iter().map(|r| r.n2.as_ref())),
    ];
    Ok(NiceTable { rows, trends })
}
