//! Exact star discrepancy and the upper bounds used for concatenated blocks.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::slice::ParallelSliceMut;
use serde::Serialize;

use crate::blocks::Digit;
use crate::constructions::{ConstructionSpec, MffSpec};
use crate::error::{Error, Result};
use crate::exact;

/// A finite sequence of exact rationals in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitSequence(Vec<BigRational>);

impl UnitSequence {
    pub fn new(values: Vec<BigRational>) -> Result<Self> {
        if let Some((idx, z)) = values
            .iter()
            .enumerate()
            .find(|(_, z)| z.is_negative() || **z >= BigRational::one())
        {
            return Err(Error::invalid(format!("z_{} = {} is outside [0,1)", idx + 1, exact::format(z))));
        }
        Ok(UnitSequence(values))
    }

    /// Parses each string with [`exact::parse`].
    pub fn parse<S: AsRef<str>>(items: impl IntoIterator<Item = S>) -> Result<Self> {
        let values = items
            .into_iter()
            .map(|s| exact::parse(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        UnitSequence::new(values)
    }

    pub fn values(&self) -> &[BigRational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }
}

fn sorted_formula<'a>(sorted: impl IntoIterator<Item = &'a BigRational>, n: usize) -> BigRational {
    let n_r = exact::int(n as u64);
    let mut best = BigRational::zero();
    for (idx, z) in sorted.into_iter().enumerate() {
        let i = exact::int(idx as u64 + 1);
        let above = &i / &n_r - z;
        let below = z - (i - BigRational::one()) / &n_r;
        best = best.max(above).max(below);
    }
    best
}

/// `D*_n(z) = sup_{0<γ<=1} |A([0,γ), z)/n - γ|`, exactly.
///
/// Evaluated on the sorted values as `max_i max(i/n - z_(i), z_(i) - (i-1)/n)`,
/// which stays correct in the presence of ties.
pub fn star_discrepancy(z: &UnitSequence) -> Result<BigRational> {
    if z.is_empty() {
        return Err(Error::invalid("star discrepancy of an empty sequence"));
    }
    if z.is_sorted() {
        return Ok(sorted_formula(z.values(), z.len()));
    }
    let mut sorted = z.values().to_vec();
    sorted.par_sort();
    Ok(sorted_formula(&sorted, z.len()))
}

/// A multiset of values in `[0,1)` held as value counts, for sequences with
/// few distinct values but many terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EmpiricalMeasure {
    counts: BTreeMap<BigRational, u64>,
    n: u64,
}

impl EmpiricalMeasure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: BigRational, count: u64) -> Result<()> {
        if value.is_negative() || value >= BigRational::one() {
            return Err(Error::invalid(format!("{} is outside [0,1)", exact::format(&value))));
        }
        if count > 0 {
            *self.counts.entry(value).or_default() += count;
            self.n += count;
        }
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// The measure of `E_1/q_1, ..., E_n/q_n` for a construction, counted
    /// per segment without walking the digits.
    pub fn of_spec_prefix(spec: &ConstructionSpec, n: u64) -> Result<Self> {
        if n > spec.len() {
            return Err(Error::NeedsMoreSegments {
                requested: n,
                available: spec.len(),
            });
        }
        let mut raw: BTreeMap<(u64, Digit), u64> = BTreeMap::new();
        for (i, first, last) in spec.runs() {
            if first > n {
                break;
            }
            let seg = spec.segment(i).unwrap();
            let block = &seg.block;
            let taken = last.min(n) - first + 1;
            let len = block.len() as u64;
            let (copies, rest) = (taken / len, (taken % len) as usize);
            for (idx, &d) in block.iter().enumerate() {
                let c = copies + u64::from(idx < rest);
                *raw.entry((seg.base(), d)).or_default() += c;
            }
        }
        let mut measure = EmpiricalMeasure::new();
        for ((q, d), c) in raw {
            measure.add(exact::ratio(d, q), c)?;
        }
        Ok(measure)
    }

    /// `D*` of the multiset.
    pub fn star_discrepancy(&self) -> Result<BigRational> {
        if self.n == 0 {
            return Err(Error::invalid("star discrepancy of an empty sequence"));
        }
        let n = exact::int(self.n);
        let mut below = 0u64;
        let mut best = BigRational::zero();
        for (v, &c) in &self.counts {
            let upto = below + c;
            best = best
                .max(exact::int(upto) / &n - v)
                .max(v - exact::int(below) / &n);
            below = upto;
        }
        Ok(best)
    }
}

/// `1/(2n) + max_i |z_i - (2i-1)/(2n)|` for non-decreasing `z`.
pub fn kn1_bound(z: &UnitSequence) -> Result<BigRational> {
    if z.is_empty() {
        return Err(Error::invalid("bound of an empty sequence"));
    }
    if !z.is_sorted() {
        return Err(Error::invalid("the bound needs non-decreasing input"));
    }
    let two_n = 2 * z.len() as u64;
    let dev = z
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| (v - exact::ratio(2 * idx as u64 + 1, two_n)).abs())
        .max()
        .unwrap();
    Ok(exact::ratio(1, two_n) + dev)
}

/// One block of a concatenation: `multiplicity` copies of a block of `len`
/// terms whose own discrepancy is at most `eps`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcatPart {
    pub multiplicity: BigUint,
    pub len: BigUint,
    pub eps: BigRational,
}

/// `Σ l_j |z_j| ε_j / Σ l_j |z_j|`.
pub fn concat_bound(parts: &[ConcatPart]) -> Result<BigRational> {
    let mut num = BigRational::zero();
    let mut den = BigUint::zero();
    for p in parts {
        let mass = &p.multiplicity * &p.len;
        num += exact::from_biguint(&mass) * &p.eps;
        den += mass;
    }
    if den.is_zero() {
        return Err(Error::invalid("concatenation has zero total length"));
    }
    Ok(num / exact::from_biguint(&den))
}

/// `1/b + ε + 1/len`.
pub fn e1l_bound(b: u64, eps: &BigRational, len: u64) -> Result<BigRational> {
    if b < 2 || len == 0 {
        return Err(Error::invalid("need b >= 2 and a nonempty block"));
    }
    if eps.is_negative() {
        return Err(Error::invalid("epsilon must be non-negative"));
    }
    Ok(exact::ratio(1, b) + eps + exact::ratio(1, len))
}

/// `x_j / b` for each digit.
pub fn scaled_digits(x: &[Digit], b: u64) -> Result<UnitSequence> {
    if b < 2 {
        return Err(Error::invalid(format!("base must be at least 2, got {b}")));
    }
    if let Some(&d) = x.iter().find(|&&d| u64::from(d) >= b) {
        return Err(Error::invalid(format!("digit {d} is not below {b}")));
    }
    Ok(UnitSequence(x.iter().map(|&d| exact::ratio(d, b)).collect()))
}

/// One completed segment `(l_j, |x_j|, ε'_j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightedSegment {
    pub l: BigUint,
    pub len: BigUint,
    #[serde(with = "exact::serde_str")]
    pub eps_prime: BigRational,
}

/// The data behind `f_i`: segments `1..=i` and the length and `ε'` of
/// segment `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrefixWeights {
    pub i: u64,
    pub prefix: Vec<WeightedSegment>,
    pub next_len: BigUint,
    #[serde(with = "exact::serde_str")]
    pub next_eps_prime: BigRational,
}

/// `ε' = 1/b + ε + 1/|x|`.
pub fn eps_prime(b: u64, eps: &BigRational, len: &BigUint) -> Result<BigRational> {
    if len.is_zero() {
        return Err(Error::invalid("epsilon' needs a nonempty block"));
    }
    Ok(exact::ratio(1, b) + eps + exact::ratio_big(&BigUint::one(), len))
}

impl PrefixWeights {
    /// Weights at index `i` of a family, with `lengths[j]` the length of the
    /// block at index `first_index + j`.
    pub fn from_mff(family: &MffSpec, lengths: &[BigUint], i: u64) -> Result<Self> {
        if lengths.len() != family.entries.len() {
            return Err(Error::invalid("block lengths do not align with the family"));
        }
        let first = family.first_index;
        if i < first || i + 1 > family.last_index() {
            return Err(Error::invalid(format!(
                "index {i} needs segments {first}..={} of the family",
                i + 1
            )));
        }
        let seg = |j: u64| -> Result<WeightedSegment> {
            let idx = (j - first) as usize;
            let e = &family.entries[idx];
            Ok(WeightedSegment {
                l: e.l.clone(),
                len: lengths[idx].clone(),
                eps_prime: eps_prime(e.b, &e.eps, &lengths[idx])?,
            })
        };
        let prefix = (first..=i).map(seg).collect::<Result<Vec<_>>>()?;
        let next = seg(i + 1)?;
        Ok(PrefixWeights {
            i,
            prefix,
            next_len: next.len,
            next_eps_prime: next.eps_prime,
        })
    }

    /// `L_i`.
    pub fn prefix_len(&self) -> BigUint {
        self.prefix.iter().map(|s| &s.l * &s.len).sum()
    }

    /// `m = α|x_{i+1}| + β` with `0 <= β < |x_{i+1}|`.
    pub fn alpha_beta(&self, m: &BigUint) -> Result<(BigUint, BigUint)> {
        if self.next_len.is_zero() {
            return Err(Error::invalid("|x_{i+1}| is zero"));
        }
        Ok((m / &self.next_len, m % &self.next_len))
    }

    fn sums(&self) -> (BigRational, BigRational) {
        let mut num = BigRational::zero();
        let mut den = BigRational::zero();
        for s in &self.prefix {
            let mass = exact::from_biguint(&(&s.l * &s.len));
            num += &mass * &s.eps_prime;
            den += mass;
        }
        (num, den)
    }
}

/// `f_i(w, z)`, the weighted mean of `ε'` over the prefix, `w` further copies
/// of segment `i+1`, and `z` terms counted with weight 1.
pub fn f_bound(pw: &PrefixWeights, w: &BigRational, z: &BigRational) -> Result<BigRational> {
    if w.is_negative() || z.is_negative() {
        return Err(Error::invalid("f is defined for w, z >= 0"));
    }
    let (mut num, mut den) = pw.sums();
    let next = exact::from_biguint(&pw.next_len);
    num += &next * &pw.next_eps_prime * w + z;
    den += next * w + z;
    if den.is_zero() {
        return Err(Error::invalid("f has a zero denominator here"));
    }
    Ok(num / den)
}

/// `ε̄_i = f_i(0, |x_{i+1}|)`.
pub fn epsbar(pw: &PrefixWeights) -> Result<BigRational> {
    f_bound(pw, &BigRational::zero(), &exact::from_biguint(&pw.next_len))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundfCheck {
    pub holds: bool,
    pub failures: Vec<String>,
}

/// The hypotheses under which `f_i` decreases in `w`, increases in `z`, and
/// stays below `ε̄_i` on its integer domain:
/// `l_i > 0`, `|x_i| > 0`, `ε'_{i+1} < 1`,
/// `Σ l_j|x_j| > Σ l_j|x_j|ε'_j`, and
/// `|x_{i+1}| / (l_i|x_i|) < (1 - ε'_i) / ε'_{i+1}`.
pub fn boundf_hypotheses(pw: &PrefixWeights) -> BoundfCheck {
    let mut failures = Vec::new();
    let Some(last) = pw.prefix.last() else {
        return BoundfCheck {
            holds: false,
            failures: vec!["no completed segment".into()],
        };
    };
    if last.l.is_zero() {
        failures.push("l_i = 0".into());
    }
    if last.len.is_zero() {
        failures.push("|x_i| = 0".into());
    }
    if pw.next_eps_prime >= BigRational::one() {
        failures.push(format!("eps'_{{i+1}} = {} is not below 1", exact::format(&pw.next_eps_prime)));
    }
    let (num, den) = pw.sums();
    if den <= num {
        failures.push("prefix mass does not exceed its eps'-weighted mass".into());
    }
    let mass = &last.l * &last.len;
    let ratio_ok = !mass.is_zero()
        && !pw.next_eps_prime.is_zero()
        && exact::ratio_big(&pw.next_len, &mass) < (BigRational::one() - &last.eps_prime) / &pw.next_eps_prime;
    if !ratio_ok {
        failures.push("|x_{i+1}| / (l_i |x_i|) is not below (1 - eps'_i) / eps'_{i+1}".into());
    }
    BoundfCheck {
        holds: failures.is_empty(),
        failures,
    }
}

/// A named upper bound attached to a discrepancy value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NamedBound {
    pub name: String,
    #[serde(with = "exact::serde_str")]
    pub value: BigRational,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub n: u64,
    #[serde(with = "exact::serde_str")]
    pub d_star: BigRational,
    pub d_star_approx: f64,
    pub bounds: Vec<NamedBound>,
}

impl DiscrepancyReport {
    pub fn new(z: &UnitSequence) -> Result<Self> {
        let d_star = star_discrepancy(z)?;
        Ok(DiscrepancyReport {
            n: z.len() as u64,
            d_star_approx: exact::approx(&d_star),
            d_star,
            bounds: Vec::new(),
        })
    }

    pub fn with_bound(mut self, name: &str, value: BigRational) -> Self {
        self.bounds.push(NamedBound {
            name: name.into(),
            holds: self.d_star <= value,
            value,
        });
        self
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::constructions::{build_c, qde_default, MffEntry};
    use crate::exact::ratio;
    use crate::limits::Limits;

    /// Evaluates `|A([0,γ))/n - γ|` at each value, just past each value, and
    /// at `γ = 1`.
    fn sweep(z: &[BigRational]) -> BigRational {
        let n = exact::int(z.len() as u64);
        let mut best = BigRational::zero();
        let mut gammas: Vec<&BigRational> = z.iter().collect();
        let one = BigRational::one();
        gammas.push(&one);
        for g in gammas {
            let strictly = z.iter().filter(|v| *v < g).count() as u64;
            let through = z.iter().filter(|v| *v <= g).count() as u64;
            best = best
                .max((exact::int(strictly) / &n - g).abs())
                .max((exact::int(through) / &n - g).abs());
        }
        best
    }

    fn seq(v: &[(i64, i64)]) -> UnitSequence {
        UnitSequence::new(v.iter().map(|&(a, b)| ratio(a, b)).collect()).unwrap()
    }

    #[test]
    fn star_examples() {
        assert_eq!(star_discrepancy(&seq(&[(1, 2)])).unwrap(), ratio(1, 2));
        assert_eq!(star_discrepancy(&seq(&[(0, 1)])).unwrap(), ratio(1, 1));
        for n in 1..=20i64 {
            let z: Vec<(i64, i64)> = (1..=n).map(|i| (2 * i - 1, 2 * n)).collect();
            assert_eq!(star_discrepancy(&seq(&z)).unwrap(), ratio(1, 2 * n));
            assert_eq!(kn1_bound(&seq(&z)).unwrap(), ratio(1, 2 * n));
        }
        assert!(star_discrepancy(&seq(&[])).is_err());
        assert!(UnitSequence::new(vec![ratio(1, 1)]).is_err());
        assert!(UnitSequence::parse(["1/3", "0.25", "0"]).is_ok());
    }

    #[test]
    fn kn1_examples() {
        assert_eq!(kn1_bound(&seq(&[(0, 1), (1, 2)])).unwrap(), ratio(1, 2));
        assert!(kn1_bound(&seq(&[(1, 2), (0, 1)])).is_err());
    }

    #[test]
    fn concat_examples() {
        let part = |l: u32, len: u32, eps| ConcatPart {
            multiplicity: BigUint::from(l),
            len: BigUint::from(len),
            eps,
        };
        assert_eq!(concat_bound(&[part(3, 4, ratio(1, 7))]).unwrap(), ratio(1, 7));
        assert_eq!(
            concat_bound(&[part(10, 1, ratio(1, 10)), part(1, 5, ratio(1, 1))]).unwrap(),
            ratio(2, 5)
        );
        assert!(concat_bound(&[part(0, 4, ratio(1, 7))]).is_err());
    }

    #[test]
    fn e1l_examples() {
        assert_eq!(e1l_bound(2, &ratio(0, 1), 2).unwrap(), ratio(1, 1));
        let d = star_discrepancy(&scaled_digits(&[0, 1], 2).unwrap()).unwrap();
        assert_eq!(d, ratio(1, 2));
        assert_eq!(e1l_bound(10, &ratio(1, 10), 100).unwrap(), ratio(21, 100));
    }

    #[test]
    fn scaling() {
        assert_eq!(scaled_digits(&[0, 1], 2).unwrap(), seq(&[(0, 1), (1, 2)]));
        let c = build_c(3, 2, &Limits::default()).unwrap();
        let y = scaled_digits(&c, 3).unwrap();
        assert_eq!(y.len(), 18);
        assert!(y.values().iter().all(|v| *v.denom() == 3.into() || v.is_zero() || v.denom() == &1.into()));
        assert!(scaled_digits(&[3], 3).is_err());
    }

    #[test]
    fn measure_matches_explicit_sequence() {
        let spec = qde_default(&Limits::default()).unwrap();
        for n in [1, 63, 64, 65, 600, 2598, 3000] {
            let z: Vec<BigRational> = spec.assemble(n).unwrap().map(|(q, e)| ratio(e, q)).collect();
            let direct = star_discrepancy(&UnitSequence::new(z).unwrap()).unwrap();
            let m = EmpiricalMeasure::of_spec_prefix(&spec, n).unwrap();
            assert_eq!(m.len(), n);
            assert_eq!(m.star_discrepancy().unwrap(), direct, "n={n}");
        }
    }

    fn one_segment() -> PrefixWeights {
        PrefixWeights {
            i: 1,
            prefix: vec![WeightedSegment {
                l: BigUint::from(2u32),
                len: BigUint::from(5u32),
                eps_prime: ratio(1, 10),
            }],
            next_len: BigUint::from(5u32),
            next_eps_prime: ratio(1, 2),
        }
    }

    #[test]
    fn f_examples() {
        let pw = one_segment();
        assert_eq!(f_bound(&pw, &ratio(0, 1), &ratio(5, 1)).unwrap(), ratio(2, 5));
        assert_eq!(f_bound(&pw, &ratio(0, 1), &ratio(0, 1)).unwrap(), ratio(1, 10));
        assert_eq!(epsbar(&pw).unwrap(), ratio(2, 5));
        assert_eq!(pw.alpha_beta(&BigUint::from(13u32)).unwrap(), (2u32.into(), 3u32.into()));
        assert!(f_bound(&pw, &ratio(-1, 1), &ratio(0, 1)).is_err());
    }

    #[test]
    fn hypotheses() {
        let pw = one_segment();
        assert!(boundf_hypotheses(&pw).holds);
        let mut big = pw.clone();
        for s in &mut big.prefix {
            s.eps_prime = ratio(1, 1);
        }
        big.next_eps_prime = ratio(3, 2);
        let check = boundf_hypotheses(&big);
        assert!(!check.holds);
        assert!(check.failures.iter().any(|f| f.contains("not below 1")));
        let mut empty = pw.clone();
        empty.prefix[0].l = BigUint::zero();
        assert!(!boundf_hypotheses(&empty).holds);
    }

    #[test]
    fn prefix_weights_from_family() {
        let fam = MffSpec::new(
            1,
            vec![
                MffEntry { l: BigUint::from(2u32), b: 2, eps: ratio(1, 2) },
                MffEntry { l: BigUint::from(3u32), b: 3, eps: ratio(1, 3) },
            ],
        )
        .unwrap();
        let lens = [BigUint::from(4u32), BigUint::from(9u32)];
        let pw = PrefixWeights::from_mff(&fam, &lens, 1).unwrap();
        assert_eq!(pw.prefix[0].eps_prime, ratio(1, 2) + ratio(1, 2) + ratio(1, 4));
        assert_eq!(pw.next_eps_prime, ratio(1, 3) + ratio(1, 3) + ratio(1, 9));
        assert_eq!(pw.prefix_len(), BigUint::from(8u32));
        assert!(PrefixWeights::from_mff(&fam, &lens, 2).is_err());
    }

    #[test]
    fn report_carries_bounds() {
        let z = seq(&[(0, 1), (1, 2)]);
        let r = DiscrepancyReport::new(&z).unwrap().with_bound("kn1", kn1_bound(&z).unwrap());
        assert_eq!(r.d_star, ratio(1, 2));
        assert!(r.bounds[0].holds);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains(r#""d_star":"1/2""#));
    }

    fn rationals(max_len: usize) -> impl Strategy<Value = Vec<BigRational>> {
        prop::collection::vec((1u64..60).prop_flat_map(|d| (0..d, Just(d))), 1..max_len)
            .prop_map(|v| v.into_iter().map(|(a, b)| ratio(a, b)).collect())
    }

    proptest! {
        #[test]
        fn matches_sweep(z in rationals(60)) {
            let d = star_discrepancy(&UnitSequence::new(z.clone()).unwrap()).unwrap();
            prop_assert_eq!(&d, &sweep(&z));
            let n = z.len() as i64;
            prop_assert!(d >= ratio(1, 2 * n) && d <= ratio(1, 1));
            let mut sorted = z.clone();
            sorted.sort();
            let s = UnitSequence::new(sorted).unwrap();
            prop_assert_eq!(&star_discrepancy(&s).unwrap(), &d);
            prop_assert!(kn1_bound(&s).unwrap() >= d);
        }
    }
}
