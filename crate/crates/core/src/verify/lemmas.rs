use std::ops::RangeInclusive;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde_json::json;

use super::{Certificate, Claim};
use crate::blocks::{count_top_digit, enumerate_blocks, Digit, GramCounts};
use crate::constructions::{p_len, p_stream_with, repetition_count};
use crate::error::{Error, Result};
use crate::exact::{self, pow2};
use crate::limits::Limits;
use crate::weightings::{verdict_from_counts, weight_eval, Weighting};

fn true_counts(b: u64, block: &[Digit]) -> u64 {
    let top = block.iter().filter(|&&d| u64::from(d) == b).count() as u32;
    ((1u64 << b) - b).pow(top)
}

fn nu_weight(b: u64, block: &[Digit]) -> BigRational {
    weight_eval(&Weighting::Nu { b }, block)
}

fn grid2(b: &RangeInclusive<u64>, w: &RangeInclusive<u64>) -> serde_json::Value {
    json!({ "b": [b.start(), b.end()], "w": [w.start(), w.end()] })
}

/// `2^{bw} ν_b(B) = (2^b - b)^{g_b(B)}` for every base-`(b+1)` block of length
/// `w`.
pub fn verify_lemma_amount(
    b_range: RangeInclusive<u64>,
    w_range: RangeInclusive<u64>,
    limits: &Limits,
) -> Result<Certificate> {
    verify_lemma_amount_with(b_range, w_range, limits, nu_weight)
}

/// [`verify_lemma_amount`] with a substitute for `ν_b`.
pub fn verify_lemma_amount_with<F>(
    b_range: RangeInclusive<u64>,
    w_range: RangeInclusive<u64>,
    limits: &Limits,
    nu: F,
) -> Result<Certificate>
where
    F: Fn(u64, &[Digit]) -> BigRational,
{
    let start = Instant::now();
    let mut cert = Certificate::new(Claim::LemmaAmount, grid2(&b_range, &w_range));
    for b in b_range.clone() {
        for w in w_range.clone() {
            for block in enumerate_blocks(b + 1, w as usize, limits)? {
                let lhs = exact::from_biguint(&pow2(b * w)) * nu(b, &block);
                let rhs = repetition_count(b, w, &block)?;
                cert.checked += 1;
                if lhs != exact::from_biguint(&rhs) {
                    cert.fail(json!({
                        "b": b, "w": w, "block": block.digits(),
                        "lhs": exact::format(&lhs), "rhs": rhs.to_string(),
                    }));
                }
            }
        }
    }
    Ok(cert.timed(start))
}

/// `|P_{b,w}| = w 2^{bw}`, measured by streaming the block.
pub fn verify_lemma_pbw(b_range: RangeInclusive<u64>, w_range: RangeInclusive<u64>, limits: &Limits) -> Result<Certificate> {
    verify_lemma_pbw_with(b_range, w_range, limits, true_counts)
}

/// [`verify_lemma_pbw`] with substitute repetition counts.
pub fn verify_lemma_pbw_with<F>(
    b_range: RangeInclusive<u64>,
    w_range: RangeInclusive<u64>,
    limits: &Limits,
    counts: F,
) -> Result<Certificate>
where
    F: Fn(u64, &[Digit]) -> u64 + Copy,
{
    let start = Instant::now();
    let mut cert = Certificate::new(Claim::LemmaPbw, grid2(&b_range, &w_range));
    for b in b_range.clone() {
        for w in w_range.clone() {
            let measured = p_stream_with(b, w, limits, counts)?.count() as u64;
            let expected = p_len(b, w);
            cert.checked += 1;
            if BigUint::from(measured) != expected {
                cert.fail(json!({
                    "b": b, "w": w, "measured": measured, "expected": expected.to_string(),
                }));
            }
        }
    }
    Ok(cert.timed(start))
}

/// For every base-`(b+1)` block `B` of length `k <= k_max`:
/// `(w-k+1)(2^b-b)^{g_b(B)} 2^{b(w-k)} <= N(B, P_{b,w})
///  <= w (2^b-b)^{g_b(B)} 2^{b(w-k)} + (k-1)(b+1)^w`.
pub fn verify_bounds_ng_nl(b: u64, w: u64, k_max: u64, limits: &Limits) -> Result<Certificate> {
    verify_bounds_ng_nl_with(b, w, k_max, limits, true_counts)
}

/// [`verify_bounds_ng_nl`] over a `P` block built with substitute repetition
/// counts; the bounds keep their true values.
pub fn verify_bounds_ng_nl_with<F>(b: u64, w: u64, k_max: u64, limits: &Limits, counts: F) -> Result<Certificate>
where
    F: Fn(u64, &[Digit]) -> u64,
{
    let start = Instant::now();
    let mut cert = Certificate::new(Claim::BoundsNgNl, json!({ "b": [b, b], "w": [w, w], "k": [1, k_max] }));
    ng_nl_into(&mut cert, b, w, k_max, limits, counts)?;
    Ok(cert.timed(start))
}

fn ng_nl_into<F>(cert: &mut Certificate, b: u64, w: u64, k_max: u64, limits: &Limits, counts: F) -> Result<()>
where
    F: Fn(u64, &[Digit]) -> u64,
{
    if k_max == 0 || k_max > w {
        return Err(Error::invalid(format!("k_max = {k_max} must lie in 1..={w}")));
    }
    let grams = GramCounts::scan(b + 1, k_max as usize, p_stream_with(b, w, limits, counts)?, limits)?;
    let base_pow_w = BigUint::from(b + 1).pow(w as u32);
    let factor = pow2(b) - b;
    for k in 1..=k_max {
        let spread = pow2(b * (w - k));
        for block in enumerate_blocks(b + 1, k as usize, limits)? {
            let g = count_top_digit(&block, b)?;
            let core = factor.pow(g as u32) * &spread;
            let lower = &core * (w - k + 1);
            let upper = &core * w + &base_pow_w * (k - 1);
            let observed = BigUint::from(grams.count(&block));
            cert.checked += 1;
            if observed < lower || observed > upper {
                cert.fail(json!({
                    "b": b, "w": w, "block": block.digits(), "observed": observed.to_string(),
                    "lower": lower.to_string(), "upper": upper.to_string(),
                }));
            }
        }
    }
    Ok(())
}

/// Bounds over a grid, with `k <= min(w, k_max)` for each `w`.
pub(super) fn ng_nl_grid(
    b_range: RangeInclusive<u64>,
    w_range: RangeInclusive<u64>,
    k_max: u64,
    limits: &Limits,
) -> Result<Certificate> {
    let start = Instant::now();
    let mut grid = grid2(&b_range, &w_range);
    grid["k"] = json!([1, k_max]);
    let mut cert = Certificate::new(Claim::BoundsNgNl, grid);
    for b in b_range {
        for w in w_range.clone() {
            ng_nl_into(&mut cert, b, w, k_max.min(w), limits, true_counts)?;
        }
    }
    Ok(cert.timed(start))
}

fn lemma_1021(b_range: RangeInclusive<u64>, w_range: RangeInclusive<u64>, guarded: bool) -> Certificate {
    let start = Instant::now();
    let mut cert = Certificate::new(Claim::Lemma1021, grid2(&b_range, &w_range));
    let mut skipped = Vec::new();
    for b in b_range {
        if guarded && b < 6 {
            skipped.push(b);
            continue;
        }
        for w in w_range.clone() {
            let lhs_unit = BigUint::from(b + 1).pow(w as u32);
            for k in 1..=w / 2 {
                for m in 1..=k {
                    let lhs = &lhs_unit * (m - 1);
                    let rhs = pow2(b * (w - m)) * k;
                    cert.checked += 1;
                    if lhs > rhs {
                        cert.fail(json!({
                            "b": b, "w": w, "k": k, "m": m,
                            "lhs": lhs.to_string(), "rhs": rhs.to_string(),
                        }));
                    }
                }
            }
        }
    }
    if !skipped.is_empty() {
        cert.note(format!("b in {skipped:?} skipped: the inequality is only claimed for b >= 6"));
    }
    cert.timed(start)
}

/// `(m-1)(b+1)^w <= k 2^{b(w-m)}` for `1 <= m <= k <= w/2`; bases below 6 are
/// outside the claim and are skipped with a note.
pub fn verify_lemma_1021(b_range: RangeInclusive<u64>, w_range: RangeInclusive<u64>) -> Result<Certificate> {
    Ok(lemma_1021(b_range, w_range, true))
}

/// [`verify_lemma_1021`] without the `b >= 6` guard.
pub fn verify_lemma_1021_unguarded(b_range: RangeInclusive<u64>, w_range: RangeInclusive<u64>) -> Certificate {
    lemma_1021(b_range, w_range, false)
}

fn eknu_guard(b: u64, w: u64, k: u64) -> Result<()> {
    if b < 6 {
        return Err(Error::invalid(format!("b = {b}: the claim needs b >= 6")));
    }
    if k == 0 || 2 * k > w {
        return Err(Error::invalid(format!("k = {k}, w = {w} violates 1 <= k <= w/2")));
    }
    Ok(())
}

fn eknu_into<F>(cert: &mut Certificate, b: u64, w: u64, k: u64, limits: &Limits, counts: F) -> Result<()>
where
    F: Fn(u64, &[Digit]) -> u64,
{
    let grams = GramCounts::scan(b + 1, k as usize, p_stream_with(b, w, limits, counts)?, limits)?;
    let eps = exact::ratio(k, w);
    let verdict = verdict_from_counts(&grams, &eps, k as usize, &Weighting::Nu { b }, limits)?;
    cert.checked += (1..=k).map(|m| (b + 1).pow(m as u32)).sum::<u64>();
    if let Some(w_) = verdict.witness {
        cert.fail(json!({
            "b": b, "w": w, "k": k, "eps": exact::format(&eps), "block": w_.block,
            "observed": w_.observed, "lower": exact::format(&w_.lower), "upper": exact::format(&w_.upper),
        }));
    }
    Ok(())
}

/// `P_{b,w}` is `(k/w, k, ν_b)`-normal, by exact counting over the streamed
/// block. Requires `b >= 6` and `k <= w/2`.
pub fn verify_eknu(b: u64, w: u64, k: u64, limits: &Limits) -> Result<Certificate> {
    verify_eknu_with(b, w, k, limits, true_counts)
}

/// [`verify_eknu`] over a `P` block built with substitute repetition counts.
pub fn verify_eknu_with<F>(b: u64, w: u64, k: u64, limits: &Limits, counts: F) -> Result<Certificate>
where
    F: Fn(u64, &[Digit]) -> u64,
{
    eknu_guard(b, w, k)?;
    let start = Instant::now();
    let mut cert = Certificate::new(Claim::LemmaEknu, json!({ "b": [b, b], "w": [w, w], "k": [k, k] }));
    eknu_into(&mut cert, b, w, k, limits, counts)?;
    Ok(cert.timed(start))
}

/// Every `(b, w, k)` in the grid satisfying the hypotheses; the rest are
/// noted. Fails with an argument error when nothing is left.
pub(super) fn eknu_grid(
    b_range: RangeInclusive<u64>,
    w_range: RangeInclusive<u64>,
    k_range: RangeInclusive<u64>,
    limits: &Limits,
) -> Result<Certificate> {
    let start = Instant::now();
    let mut grid = grid2(&b_range, &w_range);
    grid["k"] = json!([k_range.start(), k_range.end()]);
    let mut cert = Certificate::new(Claim::LemmaEknu, grid);
    let mut ran = 0;
    let mut last_err = None;
    for b in b_range {
        for w in w_range.clone() {
            for k in k_range.clone() {
                match eknu_guard(b, w, k) {
                    Ok(()) => {
                        eknu_into(&mut cert, b, w, k, limits, true_counts)?;
                        ran += 1;
                    }
                    Err(e) => {
                        cert.note(format!("(b,w,k) = ({b},{w},{k}) skipped: {e}"));
                        last_err = Some(e);
                    }
                }
            }
        }
    }
    if ran == 0 {
        return Err(last_err.unwrap_or_else(|| Error::invalid("empty grid")));
    }
    Ok(cert.timed(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::Outcome;

    #[test]
    fn amount_passes_and_counts_blocks() {
        let limits = Limits::default();
        let cert = verify_lemma_amount(2..=4, 1..=3, &limits).unwrap();
        assert!(cert.passed());
        let expected: u64 = (2..=4u64).flat_map(|b| (1..=3u32).map(move |w| (b + 1).pow(w))).sum();
        assert_eq!(cert.checked, expected);
        assert_eq!(verify_lemma_amount(2..=2, 1..=1, &limits).unwrap().checked, 3);
    }

    #[test]
    fn amount_detects_corrupted_weights() {
        let corrupt = |b: u64, block: &[Digit]| {
            if block == [1, 1] {
                exact::ratio(1, 1)
            } else {
                nu_weight(b, block)
            }
        };
        let cert = verify_lemma_amount_with(2..=3, 1..=2, &Limits::default(), corrupt).unwrap();
        assert_eq!(cert.result, Outcome::Fail);
        let w = cert.counterexample.unwrap();
        assert_eq!(w["block"], json!([1, 1]));
        assert_eq!(w["b"], json!(2));
    }

    #[test]
    fn pbw_passes_and_detects_mutation() {
        let limits = Limits::default();
        assert!(verify_lemma_pbw(2..=6, 1..=2, &limits).unwrap().passed());
        let off_by_one = |b: u64, block: &[Digit]| true_counts(b, block) + u64::from(block[0] == 0);
        let cert = verify_lemma_pbw_with(2..=2, 2..=2, &limits, off_by_one).unwrap();
        assert!(!cert.passed());
        assert_eq!(cert.counterexample.unwrap()["measured"], json!(32 + 3 * 2));
    }

    #[test]
    fn ng_nl_worked_values() {
        let limits = Limits::default();
        let cert = verify_bounds_ng_nl(2, 2, 2, &limits).unwrap();
        assert!(cert.passed());
        assert_eq!(cert.checked, 3 + 9);
        let p = crate::constructions::build_p(2, 2, &limits).unwrap();
        assert_eq!(crate::blocks::count_occurrences(&[2], &p).unwrap(), 16);
        assert_eq!(crate::blocks::count_occurrences(&[2, 2], &p).unwrap(), 8);
        assert!(verify_bounds_ng_nl(6, 2, 1, &limits).unwrap().passed());
        assert!(verify_bounds_ng_nl(2, 2, 3, &limits).is_err());
    }

    #[test]
    fn ng_nl_detects_mutation() {
        let starve = |b: u64, block: &[Digit]| if block.iter().all(|&d| d == 2) { 1 } else { true_counts(b, block) };
        let cert = verify_bounds_ng_nl_with(2, 3, 2, &Limits::default(), starve).unwrap();
        assert!(!cert.passed());
        assert!(cert.counterexample.is_some());
    }

    #[test]
    fn inequality_1021() {
        let cert = verify_lemma_1021(2..=10, 2..=12).unwrap();
        assert!(cert.passed());
        assert!(cert.notes[0].contains("[2, 3, 4, 5]"));
        let unguarded = verify_lemma_1021_unguarded(2..=10, 2..=12);
        assert!(!unguarded.passed());
        assert_eq!(unguarded.counterexample.unwrap()["b"], json!(2));
    }

    #[test]
    fn eknu_small_and_guards() {
        let limits = Limits::default();
        assert!(verify_eknu(6, 2, 1, &limits).unwrap().passed());
        assert!(verify_eknu(6, 2, 2, &limits).is_err_and(|e| e.to_string().contains("k <= w/2")));
        assert!(verify_eknu(5, 4, 1, &limits).is_err());
        let flat = |_: u64, _: &[Digit]| 1;
        let cert = verify_eknu_with(6, 2, 1, &limits, flat).unwrap();
        assert!(!cert.passed());
        assert!(eknu_grid(6..=6, 2..=2, 2..=2, &limits).is_err());
        let cert = eknu_grid(6..=6, 2..=3, 1..=2, &limits).unwrap();
        assert!(cert.passed());
        assert_eq!(cert.notes.len(), 2);
    }
}
