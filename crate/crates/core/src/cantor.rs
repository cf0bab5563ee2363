//! Q-Cantor series: values of digit prefixes, greedy expansions, the moments
//! `Q_n^{(k)}`, the shift `T_{Q,n}` as exact enclosures, and the quantities in
//! the uniform-distribution criterion for `{E_n / q_n}`.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::blocks::{count_prefix_occurrences_iter, Digit, DigitString};
use crate::constructions::ConstructionSpec;
use crate::error::{Error, Result};
use crate::exact;

/// Default number of tail digits used for orbit enclosures.
pub const DEFAULT_TAIL: u64 = 64;

/// A basic sequence `Q = (q_1, q_2, ...)` with every `q_n >= 2`.
#[derive(Clone)]
pub enum BasicSequence {
    Constant(u64),
    Explicit(Vec<u64>),
    Spec(Arc<ConstructionSpec>),
    /// `n ↦ q_n`, unbounded. Values are checked on access.
    Rule(Arc<dyn Fn(u64) -> u64 + Send + Sync>),
}

impl fmt::Debug for BasicSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicSequence::Constant(b) => f.debug_tuple("Constant").field(b).finish(),
            BasicSequence::Explicit(q) => f.debug_tuple("Explicit").field(q).finish(),
            BasicSequence::Spec(s) => f.debug_tuple("Spec").field(&s.len()).finish(),
            BasicSequence::Rule(_) => f.write_str("Rule(..)"),
        }
    }
}

impl BasicSequence {
    pub fn constant(b: u64) -> Result<Self> {
        if b < 2 {
            return Err(Error::invalid(format!("q_n must be at least 2, got {b}")));
        }
        Ok(BasicSequence::Constant(b))
    }

    pub fn explicit(q: Vec<u64>) -> Result<Self> {
        if let Some(pos) = q.iter().position(|&v| v < 2) {
            return Err(Error::invalid(format!("q_{} = {} is below 2", pos + 1, q[pos])));
        }
        Ok(BasicSequence::Explicit(q))
    }

    pub fn rule(f: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        BasicSequence::Rule(Arc::new(f))
    }

    /// Number of accessible terms; `None` when unbounded.
    pub fn len(&self) -> Option<u64> {
        match self {
            BasicSequence::Constant(_) | BasicSequence::Rule(_) => None,
            BasicSequence::Explicit(q) => Some(q.len() as u64),
            BasicSequence::Spec(s) => Some(s.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    fn require(&self, n: u64) -> Result<()> {
        match self.len() {
            Some(len) if n > len => Err(Error::NeedsMoreDigits {
                required: n,
                available: len,
            }),
            _ => Ok(()),
        }
    }

    /// `q_n`, numbered from 1.
    pub fn q(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::invalid("q_n is indexed from 1"));
        }
        self.require(n)?;
        let v = match self {
            BasicSequence::Constant(b) => *b,
            BasicSequence::Explicit(q) => q[(n - 1) as usize],
            BasicSequence::Spec(s) => s.base_at(n)?,
            BasicSequence::Rule(f) => f(n),
        };
        if v < 2 {
            return Err(Error::invalid(format!("q_{n} = {v} is below 2")));
        }
        Ok(v)
    }

    /// Maximal runs `(value, first, last)` of equal terms covering `1..=n`.
    pub fn runs(&self, n: u64) -> Result<Vec<(u64, u64, u64)>> {
        self.require(n)?;
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut runs: Vec<(u64, u64, u64)> = Vec::new();
        let mut push = |v: u64, first: u64, last: u64| match runs.last_mut() {
            Some(prev) if prev.0 == v && prev.2 + 1 == first => prev.2 = last,
            _ => runs.push((v, first, last)),
        };
        match self {
            BasicSequence::Constant(b) => push(*b, 1, n),
            BasicSequence::Spec(s) => {
                for (i, first, last) in s.runs() {
                    if first > n {
                        break;
                    }
                    push(s.segment(i).unwrap().base(), first, last.min(n));
                }
            }
            _ => {
                for j in 1..=n {
                    push(self.q(j)?, j, j);
                }
            }
        }
        Ok(runs)
    }
}

/// Digits of an expansion: an explicit prefix, or served from a construction.
#[derive(Clone, Debug)]
enum Digits {
    Prefix(DigitString),
    Spec(Arc<ConstructionSpec>),
}

/// A digit prefix `E_1..E_N` together with its basic sequence.
#[derive(Clone, Debug)]
pub struct CantorExpansion {
    q: BasicSequence,
    digits: Digits,
}

impl CantorExpansion {
    /// Checks `0 <= E_n <= q_n - 1` for every digit given.
    pub fn new(q: BasicSequence, digits: impl Into<DigitString>) -> Result<Self> {
        let digits = digits.into();
        q.require(digits.len() as u64)?;
        for (idx, &e) in digits.iter().enumerate() {
            let n = idx as u64 + 1;
            let qn = q.q(n)?;
            if u64::from(e) >= qn {
                return Err(Error::invalid(format!("E_{n} = {e} is not below q_{n} = {qn}")));
            }
        }
        Ok(CantorExpansion {
            q,
            digits: Digits::Prefix(digits),
        })
    }

    /// The expansion whose digits and basic sequence both come from `spec`.
    pub fn from_spec(spec: Arc<ConstructionSpec>) -> Self {
        CantorExpansion {
            q: BasicSequence::Spec(spec.clone()),
            digits: Digits::Spec(spec),
        }
    }

    pub fn basic_sequence(&self) -> &BasicSequence {
        &self.q
    }

    /// Number of digits available.
    pub fn len(&self) -> u64 {
        match &self.digits {
            Digits::Prefix(d) => d.len() as u64,
            Digits::Spec(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn require(&self, n: u64) -> Result<()> {
        if n > self.len() {
            return Err(Error::NeedsMoreDigits {
                required: n,
                available: self.len(),
            });
        }
        Ok(())
    }

    /// `E_n`, numbered from 1.
    pub fn digit(&self, n: u64) -> Result<Digit> {
        if n == 0 {
            return Err(Error::invalid("E_n is indexed from 1"));
        }
        self.require(n)?;
        match &self.digits {
            Digits::Prefix(d) => Ok(d[(n - 1) as usize]),
            Digits::Spec(s) => s.digit_at(n),
        }
    }

    /// `(q_n, E_n)` for `n` in `start..=end`.
    pub fn window(&self, start: u64, end: u64) -> Result<Box<dyn Iterator<Item = (u64, Digit)> + '_>> {
        if start == 0 {
            return Err(Error::invalid("positions start at 1"));
        }
        self.require(end)?;
        match &self.digits {
            Digits::Spec(s) => Ok(Box::new(s.range(start, end)?)),
            Digits::Prefix(d) => {
                let q = &self.q;
                Ok(Box::new((start..=end).map(move |n| (q.q(n).unwrap(), d[(n - 1) as usize]))))
            }
        }
    }

    /// `E_1..E_n`, streamed.
    pub fn digits(&self, n: u64) -> Result<impl Iterator<Item = Digit> + '_> {
        Ok(self.window(1, n)?.map(|(_, e)| e))
    }
}

/// A closed interval `[lo, hi]` of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RationalInterval {
    #[serde(with = "exact::serde_str")]
    pub lo: BigRational,
    #[serde(with = "exact::serde_str")]
    pub hi: BigRational,
}

impl RationalInterval {
    pub fn contains(&self, x: &BigRational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

impl fmt::Display for RationalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", exact::format(&self.lo), exact::format(&self.hi))
    }
}

/// Horner accumulation of `Σ E_m / (q_1...q_m)` as `num / den`, returning
/// `[num/den, (num+1)/den]`.
fn enclose(terms: impl Iterator<Item = (u64, Digit)>) -> RationalInterval {
    let mut num = BigUint::zero();
    let mut den = BigUint::one();
    for (q, e) in terms {
        num = num * q + e;
        den *= q;
    }
    let lo = exact::ratio_big(&num, &den);
    let hi = exact::ratio_big(&(num + 1u32), &den);
    RationalInterval { lo, hi }
}

/// `[Σ_{n<=N} E_n/(q_1...q_n), that + 1/(q_1...q_N)]` over the first `n`
/// digits. Every admissible continuation of the prefix has its value inside.
pub fn value_enclosure(exp: &CantorExpansion, n: u64) -> Result<RationalInterval> {
    if n == 0 {
        return Ok(RationalInterval {
            lo: BigRational::zero(),
            hi: BigRational::one(),
        });
    }
    Ok(enclose(exp.window(1, n)?))
}

/// [`value_enclosure`] over every digit of a prefix expansion.
pub fn digits_to_value(exp: &CantorExpansion) -> Result<RationalInterval> {
    value_enclosure(exp, exp.len())
}

/// Greedy digits `E_n = ⌊q_n · T_{Q,n-1}(x)⌋` of `x` in `[0, 1)`.
///
/// Terminating expansions come out with trailing zeros, never with a tail of
/// `q_n - 1` digits.
pub fn value_to_digits(x: &BigRational, q: &BasicSequence, n: u64) -> Result<DigitString> {
    if x.is_negative() || *x >= BigRational::one() {
        return Err(Error::invalid(format!("x = {} is outside [0,1)", exact::format(x))));
    }
    q.require(n)?;
    let mut digits = Vec::with_capacity(n as usize);
    let mut rest = x.clone();
    for j in 1..=n {
        let t = rest * exact::int(q.q(j)?);
        let e = t.floor();
        rest = t - &e;
        digits.push(e.to_integer().to_u32().expect("digit below q_n"));
    }
    Ok(DigitString::new(digits))
}

/// `Q_n^{(k)} = Σ_{j=1}^n 1/(q_j q_{j+1} ... q_{j+k-1})`.
pub fn q_moment(q: &BasicSequence, n: u64, k: u64) -> Result<BigRational> {
    if n == 0 || k == 0 {
        return Err(Error::invalid("n and k must be at least 1"));
    }
    let horizon = n + k - 1;
    let runs = q.runs(horizon)?;
    let mut total = BigRational::zero();
    for &(value, first, last) in &runs {
        if first > n {
            break;
        }
        // windows lying inside the run
        let inner_last = last.saturating_sub(k - 1).min(n);
        if inner_last >= first {
            let count = inner_last - first + 1;
            total += exact::ratio_big(&BigUint::from(count), &BigUint::from(value).pow(k as u32));
        }
        // windows starting in the run and leaving it
        let start = first.max(inner_last + 1);
        for j in start..=last.min(n) {
            let mut prod = BigUint::one();
            for t in j..j + k {
                prod *= q.q(t)?;
            }
            total += exact::ratio_big(&BigUint::one(), &prod);
        }
    }
    Ok(total)
}

/// `N_n^Q(B, x) / Q_n^{(k)}` with `k = |B|`.
pub fn normality_ratio(exp: &CantorExpansion, block: &[Digit], n: u64) -> Result<BigRational> {
    if block.is_empty() {
        return Err(Error::invalid("cannot count the empty block"));
    }
    let k = block.len() as u64;
    let required = n + k - 1;
    exp.require(required)?;
    let count = count_prefix_occurrences_iter(block, exp.digits(required)?, n)?;
    Ok(exact::int(count) / q_moment(exp.basic_sequence(), n, k)?)
}

/// Whether `Q_n^{(k)}` still grows appreciably at the last checkpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Growing,
    Saturating,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MomentRow {
    pub n: u64,
    #[serde(with = "exact::serde_str")]
    pub value: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DivergenceTable {
    pub k: u64,
    pub rows: Vec<MomentRow>,
    pub trend: Growth,
}

/// `Q_n^{(k)}` at increasing checkpoints.
///
/// The trend compares the mean increment per term over the last checkpoint
/// interval, scaled by the last `n`, against `1/10`: a harmonic-like tail
/// reads as growing, a summable one as saturating. It is a heuristic label,
/// not a statement about the limit.
pub fn divergence_diagnostics(q: &BasicSequence, k: u64, checkpoints: &[u64]) -> Result<DivergenceTable> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("checkpoints must be strictly increasing"));
    }
    let rows = checkpoints
        .iter()
        .map(|&n| Ok(MomentRow { n, value: q_moment(q, n, k)? }))
        .collect::<Result<Vec<_>>>()?;
    let trend = match rows.as_slice() {
        [.., a, b] => {
            let slope = (&b.value - &a.value) / exact::int(b.n - a.n);
            if slope * exact::int(b.n) < exact::ratio(1, 10) {
                Growth::Saturating
            } else {
                Growth::Growing
            }
        }
        _ => Growth::Undetermined,
    };
    Ok(DivergenceTable { k, rows, trend })
}

/// Enclosure of `T_{Q,n}(x) = q_1...q_n x mod 1` from `m` tail digits:
/// `lo = Σ_{t=1}^m E_{n+t}/(q_{n+1}...q_{n+t})`, `hi = lo + 1/(q_{n+1}...q_{n+m})`.
pub fn orbit_point(exp: &CantorExpansion, n: u64, m: u64) -> Result<RationalInterval> {
    if m == 0 {
        return Err(Error::invalid("tail length must be at least 1"));
    }
    exp.require(n + m)?;
    Ok(enclose(exp.window(n + 1, n + m)?))
}

/// Exact fractional part of `q_1...q_n · p/r`, for checking enclosures.
pub fn orbit_exact(x: &BigRational, q: &BasicSequence, n: u64) -> Result<BigRational> {
    let mut prod = BigInt::one();
    for j in 1..=n {
        prod *= q.q(j)?;
    }
    let numer = (prod * x.numer()).mod_floor(x.denom());
    Ok(BigRational::new(numer, x.denom().clone()))
}

/// `E_m / q_m` for `m <= n`.
pub fn salat_sequence(exp: &CantorExpansion, n: u64) -> Result<Vec<BigRational>> {
    Ok(exp.window(1, n)?.map(|(q, e)| exact::ratio(e, q)).collect())
}

/// `(1/N) Σ_{n<=N} 1/q_n`.
pub fn salat_hypothesis(q: &BasicSequence, n: u64) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let mut total = BigRational::zero();
    for (value, first, last) in q.runs(n)? {
        total += exact::ratio(last - first + 1, value);
    }
    Ok(total / exact::int(n))
}
