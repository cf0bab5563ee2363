//! Block weightings and `(ε, k, μ)`-normality of finite blocks.
//!
//! Two weightings are provided: the uniform weighting `λ_b` (every length-`k`
//! base-`b` block weighs `b^-k`) and the skewed family `ν_b`, which gives each
//! digit below `b` weight `2^-b` and puts the remaining mass `(2^b - b)/2^b` on
//! the digit `b`. Both are closed-form product weightings; nothing is tabulated.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::blocks::{enumerate_blocks, Digit, GramCounts};
use crate::error::{Error, Result};
use crate::exact;
use crate::limits::Limits;

/// Anything that assigns exact probabilities to blocks of every length.
pub trait BlockWeight {
    /// `μ^{(|B|)}(B)`.
    fn weight(&self, block: &[Digit]) -> BigRational;

    /// Largest digit with nonzero single-digit weight.
    fn support_bound(&self) -> u64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Weighting {
    /// `λ_b`.
    Uniform { base: u64 },
    /// `ν_b`.
    Nu { b: u64 },
}

impl Weighting {
    pub fn uniform(base: u64) -> Result<Self> {
        if base < 2 {
            return Err(Error::invalid(format!("uniform weighting needs base >= 2, got {base}")));
        }
        Ok(Weighting::Uniform { base })
    }

    pub fn nu(b: u64) -> Result<Self> {
        if b == 0 {
            return Err(Error::invalid("nu weighting needs b >= 1"));
        }
        Ok(Weighting::Nu { b })
    }
}

impl BlockWeight for Weighting {
    fn weight(&self, block: &[Digit]) -> BigRational {
        weight_eval(self, block)
    }

    fn support_bound(&self) -> u64 {
        match *self {
            Weighting::Uniform { base } => base - 1,
            Weighting::Nu { b } => b,
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weighting::Uniform { base } => write!(f, "uniform:{base}"),
            Weighting::Nu { b } => write!(f, "nu:{b}"),
        }
    }
}

impl FromStr for Weighting {
    type Err = Error;

    /// `uniform:B` (alias `lambda:B`) or `nu:B`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, param) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("weighting {s:?} should look like nu:6 or uniform:10")))?;
        let param: u64 = param
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("weighting parameter {param:?} is not an integer")))?;
        match kind.trim() {
            "uniform" | "lambda" => Weighting::uniform(param),
            "nu" => Weighting::nu(param),
            other => Err(Error::invalid(format!("unknown weighting kind {other:?}"))),
        }
    }
}

/// Exact weight of a block under `μ`.
///
/// `λ_b` gives `b^-k` to base-`b` blocks and zero to anything else. `ν_b`
/// multiplies `2^-b` per digit below `b`, `(2^b - b)/2^b` per digit equal to
/// `b`, and is zero as soon as a digit exceeds `b`.
pub fn weight_eval(mu: &Weighting, block: &[Digit]) -> BigRational {
    let k = block.len() as u64;
    match *mu {
        Weighting::Uniform { base } => {
            if block.iter().any(|&d| u64::from(d) >= base) {
                return BigRational::zero();
            }
            exact::ratio_big(&BigUint::one(), &BigUint::from(base).pow(k as u32))
        }
        Weighting::Nu { b } => {
            let mut top = 0u32;
            for &d in block {
                match u64::from(d).cmp(&b) {
                    std::cmp::Ordering::Greater => return BigRational::zero(),
                    std::cmp::Ordering::Equal => top += 1,
                    std::cmp::Ordering::Less => {}
                }
            }
            let numer = (exact::pow2(b) - b).pow(top);
            exact::ratio_big(&numer, &exact::pow2(b * k))
        }
    }
}

/// Whether `μ(B)` equals `Σ_j μ(B j)` over every digit `j` in the support.
pub fn check_consistency<W: BlockWeight + ?Sized>(mu: &W, k: usize, block: &[Digit]) -> Result<bool> {
    if k == 0 {
        return Err(Error::invalid("consistency is checked for k >= 1"));
    }
    if block.len() != k {
        return Err(Error::invalid(format!("block has length {}, expected {k}", block.len())));
    }
    let support = Digit::try_from(mu.support_bound())
        .map_err(|_| Error::invalid("support bound exceeds the digit range"))?;
    let mut extended = block.to_vec();
    extended.push(0);
    let mut sum = BigRational::zero();
    for j in 0..=support {
        *extended.last_mut().unwrap() = j;
        sum += mu.weight(&extended);
    }
    Ok(sum == mu.weight(block))
}

/// Whether `μ` agrees with `λ_b` (weight `b^-k`) on every base-`p` block of
/// length `k <= k_max`.
pub fn check_pb_uniform<W: BlockWeight + ?Sized>(
    mu: &W,
    p: u64,
    b: u64,
    k_max: usize,
    limits: &Limits,
) -> Result<bool> {
    if p == 0 || p > b {
        return Err(Error::invalid(format!("need 1 <= p <= b, got p={p}, b={b}")));
    }
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    for k in 1..=k_max {
        let expected = exact::ratio_big(&BigUint::one(), &BigUint::from(b).pow(k as u32));
        if p == 1 {
            if mu.weight(&vec![0; k]) != expected {
                return Ok(false);
            }
            continue;
        }
        for block in enumerate_blocks(p, k, limits)? {
            if mu.weight(&block) != expected {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A block whose count fell outside its allowed interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalityWitness {
    pub block: Vec<Digit>,
    pub observed: u64,
    #[serde(with = "exact::serde_str")]
    pub lower: BigRational,
    #[serde(with = "exact::serde_str")]
    pub upper: BigRational,
}

/// Outcome of an `(ε, k, μ)`-normality check; failures carry the first
/// offending block in (length, lexicographic) order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalityVerdict {
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<NormalityWitness>,
}

impl NormalityVerdict {
    fn pass() -> Self {
        NormalityVerdict {
            passed: true,
            witness: None,
        }
    }

    fn fail(witness: NormalityWitness) -> Self {
        NormalityVerdict {
            passed: false,
            witness: Some(witness),
        }
    }
}

fn check_eps(eps: &BigRational) -> Result<()> {
    if *eps <= BigRational::zero() || *eps >= BigRational::one() {
        return Err(Error::invalid(format!("epsilon must lie in (0,1), got {}", exact::format(eps))));
    }
    Ok(())
}

/// Checks whether `y` is `(ε, k, μ)`-normal: for every block `B` with
/// `|B| = m <= k`, `μ(B)|y|(1-ε) <= N(B, y) <= μ(B)|y|(1+ε)`.
///
/// Blocks range over digits `0..=max(support of μ, largest digit in y)`, so a
/// zero-weight block that nevertheless occurs is a failure.
pub fn check_eps_k_normal(
    y: &[Digit],
    eps: &BigRational,
    k: usize,
    mu: &Weighting,
    limits: &Limits,
) -> Result<NormalityVerdict> {
    check_eps(eps)?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if y.is_empty() {
        return Err(Error::invalid("cannot check normality of an empty block"));
    }
    let top = y.iter().copied().max().map(u64::from).unwrap_or(0);
    let alphabet = top.max(mu.support_bound()) + 1;
    let grams = GramCounts::scan(alphabet, k, y.iter().copied(), limits)?;
    verdict_from_counts(&grams, eps, k, mu, limits)
}

/// [`check_eps_k_normal`] over counts already gathered from a stream.
///
/// The quantified alphabet is the counter's alphabet, which must be at least
/// `support_bound + 1` and must cover every digit that was scanned.
pub fn verdict_from_counts(
    grams: &GramCounts,
    eps: &BigRational,
    k: usize,
    mu: &Weighting,
    limits: &Limits,
) -> Result<NormalityVerdict> {
    check_eps(eps)?;
    if k == 0 || k > grams.max_len() {
        return Err(Error::invalid(format!(
            "k = {k} must lie in 1..={} for these counts",
            grams.max_len()
        )));
    }
    if grams.alphabet() <= mu.support_bound() {
        return Err(Error::invalid("counted alphabet does not cover the weighting's support"));
    }
    if grams.scanned() == 0 {
        return Err(Error::invalid("cannot check normality of an empty block"));
    }
    let len = exact::int(grams.scanned());
    let below = BigRational::one() - eps;
    let above = BigRational::one() + eps;
    for m in 1..=k {
        for block in enumerate_blocks(grams.alphabet(), m, limits)? {
            let expected = weight_eval(mu, &block) * &len;
            let observed = grams.count(&block);
            let lower = &expected * &below;
            let upper = &expected * &above;
            let n = exact::int(observed);
            if n < lower || n > upper {
                return Ok(NormalityVerdict::fail(NormalityWitness {
                    block: block.into_digits(),
                    observed,
                    lower,
                    upper,
                }));
            }
        }
    }
    Ok(NormalityVerdict::pass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    #[test]
    fn evaluates_closed_forms() {
        assert_eq!(weight_eval(&Weighting::Uniform { base: 3 }, &[0, 2]), ratio(1, 9));
        assert_eq!(weight_eval(&Weighting::Nu { b: 2 }, &[2]), ratio(1, 2));
        assert_eq!(weight_eval(&Weighting::Nu { b: 2 }, &[0]), ratio(1, 4));
        assert_eq!(weight_eval(&Weighting::Nu { b: 2 }, &[0, 3]), BigRational::zero());
        assert_eq!(weight_eval(&Weighting::Nu { b: 5 }, &[1, 6, 0]), BigRational::zero());
        assert_eq!(weight_eval(&Weighting::Uniform { base: 2 }, &[2]), BigRational::zero());
    }

    #[test]
    fn nu_mass_sums_to_one() {
        let limits = Limits::default();
        for b in 2..=6u64 {
            for k in 1..=3 {
                let total: BigRational = enumerate_blocks(b + 1, k, &limits)
                    .unwrap()
                    .map(|blk| weight_eval(&Weighting::Nu { b }, &blk))
                    .sum();
                assert_eq!(total, BigRational::one(), "b={b} k={k}");
            }
        }
    }

    #[test]
    fn consistency_holds_for_both_families() {
        let nu2 = Weighting::Nu { b: 2 };
        assert!(check_consistency(&nu2, 1, &[0]).unwrap());
        assert!(check_consistency(&nu2, 2, &[2, 1]).unwrap());
        let lambda = Weighting::Uniform { base: 5 };
        assert!(check_consistency(&lambda, 3, &[4, 0, 1]).unwrap());
        assert!(check_consistency(&nu2, 2, &[0]).is_err());
    }

    struct Corrupted;

    impl BlockWeight for Corrupted {
        fn weight(&self, block: &[Digit]) -> BigRational {
            let base = weight_eval(&Weighting::Nu { b: 2 }, block);
            if block == [0, 1] {
                base * exact::int(2)
            } else {
                base
            }
        }

        fn support_bound(&self) -> u64 {
            2
        }
    }

    #[test]
    fn consistency_detects_corrupted_table() {
        assert!(!check_consistency(&Corrupted, 1, &[0]).unwrap());
        assert!(check_consistency(&Corrupted, 1, &[1]).unwrap());
    }

    #[test]
    fn pb_uniformity() {
        let limits = Limits::default();
        for b in [2u64, 3] {
            assert!(check_pb_uniform(&Weighting::Nu { b }, b, 1 << b, 3, &limits).unwrap());
        }
        assert!(check_pb_uniform(&Weighting::Uniform { base: 5 }, 3, 5, 3, &limits).unwrap());
        assert!(check_pb_uniform(&Weighting::Uniform { base: 5 }, 1, 5, 2, &limits).unwrap());
        assert!(!check_pb_uniform(&Weighting::Nu { b: 2 }, 3, 4, 1, &limits).unwrap());
        assert!(check_pb_uniform(&Weighting::Nu { b: 2 }, 3, 2, 1, &limits).is_err());
    }

    #[test]
    fn eps_k_normal_basic_cases() {
        let limits = Limits::default();
        let lambda2 = Weighting::Uniform { base: 2 };
        let v = check_eps_k_normal(&[0, 1], &ratio(1, 100), 1, &lambda2, &limits).unwrap();
        assert!(v.passed && v.witness.is_none());

        let v = check_eps_k_normal(&[0, 0], &ratio(1, 2), 1, &lambda2, &limits).unwrap();
        assert!(!v.passed);
        let w = v.witness.unwrap();
        assert_eq!(w.block, vec![0]);
        assert_eq!(w.observed, 2);
        assert_eq!(w.upper, ratio(3, 2));
    }

    #[test]
    fn eps_k_normal_rejects_bad_arguments() {
        let limits = Limits::default();
        let lambda2 = Weighting::Uniform { base: 2 };
        assert!(check_eps_k_normal(&[0, 1], &ratio(1, 1), 1, &lambda2, &limits).is_err());
        assert!(check_eps_k_normal(&[0, 1], &ratio(0, 1), 1, &lambda2, &limits).is_err());
        assert!(check_eps_k_normal(&[0, 1], &ratio(1, 2), 0, &lambda2, &limits).is_err());
        assert!(check_eps_k_normal(&[], &ratio(1, 2), 1, &lambda2, &limits).is_err());
    }

    #[test]
    fn zero_weight_blocks_must_not_occur() {
        let limits = Limits::default();
        let v = check_eps_k_normal(&[0, 1, 2], &ratio(1, 2), 1, &Weighting::Uniform { base: 2 }, &limits).unwrap();
        assert!(!v.passed);
    }

    #[test]
    fn parses_weighting_names() {
        assert_eq!("nu:6".parse::<Weighting>().unwrap(), Weighting::Nu { b: 6 });
        assert_eq!("lambda:10".parse::<Weighting>().unwrap(), Weighting::Uniform { base: 10 });
        assert!("uniform:1".parse::<Weighting>().is_err());
        assert!("mu:3".parse::<Weighting>().is_err());
    }
}
