use std::collections::BTreeSet;
use std::ops::RangeInclusive;
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde_json::json;

use super::{Certificate, Claim};
use crate::blocks::Digit;
use crate::cantor::{orbit_point, salat_hypothesis, BasicSequence, CantorExpansion};
use crate::constructions::{qde_spec, qnex_spec, salat_counterexample, salat_row_end, ConstructionSpec, MffSpec};
use crate::discrepancy::{
    boundf_hypotheses, epsbar, star_discrepancy, EmpiricalMeasure, PrefixWeights, UnitSequence,
};
use crate::error::{Error, Result};
use crate::exact::{self, pow2};
use crate::limits::Limits;
use crate::weightings::{check_eps_k_normal, Weighting};

/// Digits checked for the absence of zeros in the counterexample sequence.
pub const SALAT_ZERO_HORIZON: u64 = 20_000;

const SALAT_THRESHOLD_ROW: u64 = 200;

fn log_spaced(hi: u64, k: usize) -> Vec<u64> {
    if k <= 1 {
        return vec![hi];
    }
    let top = (hi as f64).ln();
    (0..k)
        .map(|t| ((top * t as f64 / (k - 1) as f64).exp().round() as u64).clamp(1, hi))
        .collect()
}

/// `count` positions in `1..=len - margin`: the neighbours `L_i - 1, L_i,
/// L_i + 1` of every segment end, topped up with log-spaced positions.
pub fn checkpoints(spec: &ConstructionSpec, count: usize, margin: u64) -> Result<Vec<u64>> {
    let hi = spec
        .len()
        .checked_sub(margin)
        .filter(|&h| h >= 1)
        .ok_or_else(|| Error::NeedsMoreDigits {
            required: margin + 1,
            available: spec.len(),
        })?;
    if hi <= count as u64 {
        return Ok((1..=hi).collect());
    }
    let mut fixed = BTreeSet::new();
    for &end in &spec.prefix_lens()[1..] {
        for n in [end.saturating_sub(1), end, end + 1] {
            if (1..=hi).contains(&n) {
                fixed.insert(n);
            }
        }
    }
    if fixed.len() >= count {
        let all: Vec<u64> = fixed.into_iter().collect();
        let step = all.len() as f64 / count as f64;
        return Ok((0..count).map(|t| all[(t as f64 * step) as usize]).collect());
    }
    let mut k = count - fixed.len();
    let mut extra: Vec<u64>;
    loop {
        extra = log_spaced(hi, k).into_iter().filter(|n| !fixed.contains(n)).collect();
        extra.dedup();
        if fixed.len() + extra.len() >= count || k > 8 * count {
            break;
        }
        k += 1;
    }
    // drop the surplus log points that crowd their neighbours most
    while fixed.len() + extra.len() > count {
        let idx = (1..extra.len())
            .min_by_key(|&t| extra[t] - extra[t - 1])
            .unwrap_or(0);
        extra.remove(idx);
    }
    fixed.extend(extra);
    Ok(fixed.into_iter().collect())
}

/// Checks that every nonempty segment `i` is read in base `2^i` and has all
/// digits at most `i`.
pub fn qnex_guard(spec: &ConstructionSpec) -> Result<()> {
    for (i, _, _) in spec.runs() {
        let seg = spec.segment(i).unwrap();
        let i = i as u64;
        if i >= 63 || seg.base() != 1 << i {
            return Err(Error::invalid(format!(
                "not a P-block construction: segment {i} has base {}, expected 2^{i}",
                seg.base()
            )));
        }
        if let Some(&d) = seg.block.iter().find(|&&d| u64::from(d) > i) {
            return Err(Error::invalid(format!(
                "not a P-block construction: segment {i} has digit {d} above {i}"
            )));
        }
    }
    Ok(())
}

fn default_t0_bound(j: u64) -> BigRational {
    exact::ratio_big(&BigUint::from(j + 1), &pow2(j))
}

/// At each checkpoint `n`, with `j = j(n)` the segment holding position
/// `n + 1`: the orbit enclosure from `m` tail digits has
/// `hi <= (j+1)/2^j + 2^{-m}`, and `E_{n+1} <= j`.
pub fn verify_t0_scaled(spec: &ConstructionSpec, points: &[u64], m: u64) -> Result<Certificate> {
    verify_t0_scaled_with(spec, points, m, default_t0_bound)
}

/// [`verify_t0_scaled`] against a substitute for `(j+1)/2^j`.
pub fn verify_t0_scaled_with<F>(spec: &ConstructionSpec, points: &[u64], m: u64, bound: F) -> Result<Certificate>
where
    F: Fn(u64) -> BigRational,
{
    qnex_guard(spec)?;
    let start = Instant::now();
    let mut cert = Certificate::new(Claim::T0Scaled, json!({ "checkpoints": points.len(), "tail": m }));
    let exp = CantorExpansion::from_spec(Arc::new(spec.clone()));
    let slack = exact::ratio_big(&BigUint::one(), &pow2(m));
    let (mut j_min, mut j_max) = (u64::MAX, 0);
    for &n in points {
        let j = spec
            .segment_index(n)?
            .t0
            .ok_or_else(|| Error::invalid(format!("checkpoint {n} has no successor digit")))? as u64;
        j_min = j_min.min(j);
        j_max = j_max.max(j);
        let iv = orbit_point(&exp, n, m)?;
        let limit = bound(j) + &slack;
        let next = exp.digit(n + 1)?;
        cert.checked += 2;
        if iv.hi > limit {
            cert.fail(json!({
                "n": n, "j": j, "hi": exact::format(&iv.hi), "bound": exact::format(&limit),
            }));
        }
        if u64::from(next) > j {
            cert.fail(json!({ "n": n, "j": j, "next_digit": next }));
        }
    }
    cert.details = json!({ "j_min": j_min, "j_max": j_max });
    Ok(cert.timed(start))
}

/// All points lie in `[0, (j_min+1)/2^{j_min} + 2^{-m}]`, which forces
/// `D* >= 1 - (j_min+1)/2^{j_min} - 2^{-m}`.
pub fn verify_notdn_points(points: &[BigRational], j_min: u64, m: u64) -> Result<Certificate> {
    let start = Instant::now();
    let mut cert = Certificate::new(Claim::NotdnScaled, json!({ "points": points.len(), "j_min": j_min, "tail": m }));
    let threshold =
        BigRational::one() - default_t0_bound(j_min) - exact::ratio_big(&BigUint::one(), &pow2(m));
    let d = star_discrepancy(&UnitSequence::new(points.to_vec())?)?;
    cert.checked = 1;
    if d < threshold {
        cert.fail(json!({ "d_star": exact::format(&d), "threshold": exact::format(&threshold) }));
    }
    cert.details = json!({
        "d_star": exact::format(&d),
        "d_star_approx": exact::approx(&d),
        "threshold": exact::format(&threshold),
    });
    Ok(cert.timed(start))
}

/// Star discrepancy of the orbit upper endpoints at the checkpoints, against
/// the threshold forced by the orbit bound. Every checkpoint must lie in a
/// segment `j >= 6`.
pub fn verify_notdn_scaled(spec: &ConstructionSpec, points: &[u64], m: u64) -> Result<Certificate> {
    qnex_guard(spec)?;
    let start = Instant::now();
    let exp = CantorExpansion::from_spec(Arc::new(spec.clone()));
    let mut uppers = Vec::with_capacity(points.len());
    let mut j_min = u64::MAX;
    for &n in points {
        let j = spec.segment_index(n)?.t0.unwrap_or(0) as u64;
        if j < 6 {
            return Err(Error::invalid(format!("checkpoint {n} lies in segment {j}, below 6")));
        }
        j_min = j_min.min(j);
        uppers.push(orbit_point(&exp, n, m)?.hi);
    }
    let mut cert = verify_notdn_points(&uppers, j_min, m)?;
    cert.grid = json!({ "checkpoints": points.len(), "tail": m });
    Ok(cert.timed(start))
}

/// Knobs for [`verify_mqd_scaled_with`].
#[derive(Clone, Debug)]
pub struct MqdOptions {
    /// Asserted upper bound on `D*` over the whole construction.
    pub final_threshold: Option<BigRational>,
    /// Multiplies every `ε̄_i` before comparing; `1` except in negative
    /// controls.
    pub epsbar_scale: BigRational,
}

impl Default for MqdOptions {
    fn default() -> Self {
        MqdOptions {
            final_threshold: None,
            epsbar_scale: BigRational::one(),
        }
    }
}

fn check_alignment(spec: &ConstructionSpec, family: &MffSpec) -> Result<()> {
    if family.first_index != 1 || family.entries.len() != spec.segment_count() {
        return Err(Error::invalid("family indexes do not match the construction's segments"));
    }
    for (idx, (seg, e)) in spec.segments().iter().zip(&family.entries).enumerate() {
        if seg.base() != e.b || BigUint::from(seg.l) != e.l {
            return Err(Error::invalid(format!(
                "segment {} has (l, b) = ({}, {}) but the family says ({}, {})",
                idx + 1,
                seg.l,
                seg.base(),
                e.l,
                e.b
            )));
        }
    }
    Ok(())
}

/// Checkpoints for the discrepancy run: every segment boundary neighbour
/// plus log-spaced positions, 100 in all (or every position when shorter).
pub fn mqd_checkpoints(spec: &ConstructionSpec) -> Result<Vec<u64>> {
    checkpoints(spec, 100, 0)
}

/// For a construction built from a modular-friendly family: each block
/// `x_i` is `(ε_i, 1, λ_{b_i})`-normal, and at every checkpoint where the
/// hypotheses on `f_{i(n)}` hold, `D*_n(E_m/q_m) <= ε̄_{i(n)}`. Checkpoints
/// where they fail are reported, not asserted.
pub fn verify_mqd_scaled(spec: &ConstructionSpec, family: &MffSpec, points: &[u64]) -> Result<Certificate> {
    verify_mqd_scaled_with(spec, family, points, &MqdOptions::default())
}

pub fn verify_mqd_scaled_with(
    spec: &ConstructionSpec,
    family: &MffSpec,
    points: &[u64],
    opts: &MqdOptions,
) -> Result<Certificate> {
    check_alignment(spec, family)?;
    let start = Instant::now();
    let mut cert = Certificate::new(Claim::MqdScaled, json!({ "checkpoints": points.len() }));
    let lengths: Vec<BigUint> = spec.segments().iter().map(|s| BigUint::from(s.block.len())).collect();
    let limits = Limits::default();

    for (idx, (seg, e)) in spec.segments().iter().zip(&family.entries).enumerate() {
        let verdict = check_eps_k_normal(&seg.block, &e.eps, 1, &Weighting::Uniform { base: e.b }, &limits)?;
        cert.checked += 1;
        if let Some(w) = verdict.witness {
            cert.fail(json!({
                "segment": idx + 1, "eps": exact::format(&e.eps), "block": w.block, "observed": w.observed,
                "lower": exact::format(&w.lower), "upper": exact::format(&w.upper),
            }));
        }
    }

    // ε̄_i wherever the hypotheses hold
    let mut bars = Vec::new();
    let mut hyp = Vec::new();
    for i in family.first_index..family.last_index() {
        let pw = PrefixWeights::from_mff(family, &lengths, i)?;
        let check = boundf_hypotheses(&pw);
        let bar = check.holds.then(|| epsbar(&pw)).transpose()?;
        hyp.push((i, check, bar.clone()));
        if let Some(b) = bar {
            bars.push((i, b));
        }
    }
    let first_hold = hyp.iter().find(|(_, c, _)| c.holds).map(|(i, _, _)| *i);
    if let Some(f) = first_hold {
        let lapses: Vec<u64> = hyp.iter().filter(|(i, c, _)| *i > f && !c.holds).map(|(i, _, _)| *i).collect();
        if !lapses.is_empty() {
            cert.note(format!("hypotheses lapse again at i = {lapses:?}"));
        }
    }

    let mut trajectory = Vec::new();
    let mut unasserted = 0;
    for &n in points {
        let i = spec.segment_index(n)?.idef as u64;
        let d = EmpiricalMeasure::of_spec_prefix(spec, n)?.star_discrepancy()?;
        let bar = hyp.iter().find(|(j, _, _)| *j == i).and_then(|(_, _, b)| b.clone());
        match &bar {
            Some(b) => {
                let limit = b * &opts.epsbar_scale;
                cert.checked += 1;
                if d > limit {
                    cert.fail(json!({
                        "n": n, "i": i, "d_star": exact::format(&d), "epsbar": exact::format(&limit),
                    }));
                }
            }
            None => unasserted += 1,
        }
        trajectory.push(json!({
            "n": n, "i": i, "d_star": exact::format(&d), "d_star_approx": exact::approx(&d),
            "epsbar": bar.as_ref().map(exact::format),
        }));
    }
    if unasserted > 0 {
        cert.note(format!(
            "{unasserted} checkpoints unasserted: hypotheses fail at their index (first holding index: {})",
            first_hold.map_or("none".to_string(), |i| i.to_string())
        ));
    }

    let final_d = EmpiricalMeasure::of_spec_prefix(spec, spec.len())?.star_discrepancy()?;
    if let Some(t) = &opts.final_threshold {
        cert.checked += 1;
        if final_d > *t {
            cert.fail(json!({
                "n": spec.len(), "d_star": exact::format(&final_d), "threshold": exact::format(t),
            }));
        }
    }
    let decreasing = bars.windows(2).all(|w| w[1].1 < w[0].1);
    cert.details = json!({
        "epsbar": bars.iter().map(|(i, b)| json!({
            "i": i, "value": exact::format(b), "approx": exact::approx(b),
        })).collect::<Vec<_>>(),
        "epsbar_decreasing": decreasing,
        "hypotheses_fail_at": hyp.iter().filter(|(_, c, _)| !c.holds).map(|(i, _, _)| *i).collect::<Vec<_>>(),
        "final_d_star": exact::format(&final_d),
        "final_d_star_approx": exact::approx(&final_d),
        "trajectory": trajectory,
    });
    Ok(cert.timed(start))
}

/// The counterexample sequence through row `m_rows`: no digit `0` among the
/// first `max(m_rows(m_rows+1)/2, 20000)` terms, `(1/N) Σ 1/q_n` strictly
/// decreasing across row ends, `D*` of `E_n/q_n` strictly decreasing across
/// row ends from row 50 (or 3 for short runs), and `D* <= 1/20` at row 200
/// when it is reached.
pub fn verify_salat_counterexample(m_rows: u64) -> Result<Certificate> {
    verify_salat_counterexample_with(m_rows, |_, _| {})
}

/// [`verify_salat_counterexample`] after `mutate` has edited the generated
/// `(q, E)` terms.
pub fn verify_salat_counterexample_with<F>(m_rows: u64, mutate: F) -> Result<Certificate>
where
    F: FnOnce(&mut Vec<u64>, &mut Vec<Digit>),
{
    if m_rows < 2 {
        return Err(Error::invalid("need at least two rows"));
    }
    let start = Instant::now();
    let mut cert = Certificate::new(Claim::SalatCounterexample, json!({ "m": [m_rows, m_rows] }));
    let total = salat_row_end(m_rows).max(SALAT_ZERO_HORIZON);
    let (mut q, digits) = salat_counterexample(total);
    let mut e = digits.into_vec();
    mutate(&mut q, &mut e);
    let exp = CantorExpansion::new(BasicSequence::explicit(q.clone())?, e.clone())?;

    if let Some(pos) = e.iter().position(|&d| d == 0) {
        cert.fail(json!({ "n": pos + 1, "digit": 0, "q": q[pos] }));
    }
    cert.checked += total;

    let seq = exp.basic_sequence();
    let mut prev: Option<BigRational> = None;
    let mut hyp_rows = Vec::new();
    for m in 1..=m_rows {
        let h = salat_hypothesis(seq, salat_row_end(m))?;
        if let Some(p) = &prev {
            cert.checked += 1;
            if h >= *p {
                cert.fail(json!({ "row": m, "hypothesis": exact::format(&h), "previous": exact::format(p) }));
            }
        }
        if m % 50 == 0 || m == m_rows {
            hyp_rows.push(json!({ "row": m, "value": exact::format(&h), "approx": exact::approx(&h) }));
        }
        prev = Some(h);
    }

    let from = if m_rows >= 50 { 50 } else { 3.min(m_rows) };
    let mut measure = EmpiricalMeasure::new();
    let mut prev: Option<BigRational> = None;
    let mut d_rows = Vec::new();
    let mut at_threshold_row = None;
    for m in 1..=m_rows {
        for n in salat_row_end(m - 1)..salat_row_end(m) {
            measure.add(exact::ratio(e[n as usize], q[n as usize]), 1)?;
        }
        if m < from {
            continue;
        }
        let d = measure.star_discrepancy()?;
        if let Some(p) = &prev {
            cert.checked += 1;
            if d >= *p {
                cert.fail(json!({ "row": m, "d_star": exact::format(&d), "previous": exact::format(p) }));
            }
        }
        if m == SALAT_THRESHOLD_ROW {
            at_threshold_row = Some(d.clone());
        }
        d_rows.push(json!({ "row": m, "d_star": exact::format(&d), "approx": exact::approx(&d) }));
        prev = Some(d);
    }
    match at_threshold_row {
        Some(d) => {
            let t = exact::ratio(1, 20);
            cert.checked += 1;
            if d > t {
                cert.fail(json!({ "row": SALAT_THRESHOLD_ROW, "d_star": exact::format(&d), "threshold": "1/20" }));
            }
        }
        None => cert.note(format!("row {SALAT_THRESHOLD_ROW} not reached; the 1/20 threshold is not asserted")),
    }
    cert.details = json!({ "hypothesis": hyp_rows, "d_star": d_rows });
    Ok(cert.timed(start))
}

fn qnex_run(i: &RangeInclusive<u64>, w: u64, limits: &Limits) -> Result<ConstructionSpec> {
    qnex_spec(i.clone(), |_| w, |i| pow2(2 * i), limits)
}

pub(super) fn t0_grid(i: RangeInclusive<u64>, w: u64, limits: &Limits) -> Result<Certificate> {
    let spec = qnex_run(&i, w, limits)?;
    let m = crate::cantor::DEFAULT_TAIL;
    let mut cert = verify_t0_scaled(&spec, &checkpoints(&spec, 100, m)?, m)?;
    cert.grid = json!({ "i": [i.start(), i.end()], "w": [w, w], "checkpoints": 100, "tail": m });
    Ok(cert)
}

pub(super) fn notdn_grid(i: RangeInclusive<u64>, w: u64, limits: &Limits) -> Result<Certificate> {
    let spec = qnex_run(&i, w, limits)?;
    let m = crate::cantor::DEFAULT_TAIL;
    let mut cert = verify_notdn_scaled(&spec, &checkpoints(&spec, 100, m)?, m)?;
    cert.grid = json!({ "i": [i.start(), i.end()], "w": [w, w], "checkpoints": 100, "tail": m });
    Ok(cert)
}

pub(super) fn mqd_grid(i: RangeInclusive<u64>, w: u64, limits: &Limits) -> Result<Certificate> {
    let cube = |i: u64| BigUint::from(i.pow(3));
    let spec = qde_spec(i.clone(), |_| w, cube, limits)?;
    let family = MffSpec::qde(*i.start(), *i.end(), cube)?;
    let default = i == (2..=12) && w == 2;
    let opts = MqdOptions {
        final_threshold: default.then(|| exact::ratio(1, 10)),
        ..MqdOptions::default()
    };
    let mut cert = verify_mqd_scaled_with(&spec, &family, &mqd_checkpoints(&spec)?, &opts)?;
    if !default {
        cert.note("final 1/10 threshold applies to the default grid only");
    }
    cert.grid = json!({ "i": [i.start(), i.end()], "w": [w, w], "checkpoints": 100 });
    Ok(cert)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{qde_default, qnex_default};

    #[test]
    fn checkpoint_layout() {
        let spec = qnex_default(&Limits::default()).unwrap();
        let pts = checkpoints(&spec, 100, 64).unwrap();
        assert_eq!(pts.len(), 100);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(pts[0], 1);
        assert!(*pts.last().unwrap() <= spec.len() - 64);
        for &end in &spec.prefix_lens()[6..10] {
            assert!(pts.contains(&(end - 1)) && pts.contains(&end) && pts.contains(&(end + 1)));
        }
        assert_eq!(checkpoints(&spec, 100, 64).unwrap(), pts);
    }

    #[test]
    fn t0_bound_and_negative_control() {
        let limits = Limits::default();
        let spec = qnex_default(&limits).unwrap();
        let pts = checkpoints(&spec, 40, 64).unwrap();
        let cert = verify_t0_scaled(&spec, &pts, 64).unwrap();
        assert!(cert.passed(), "{:?}", cert.counterexample);
        assert_eq!(cert.details["j_min"], json!(6));
        assert_eq!(default_t0_bound(6), exact::ratio(7, 64));
        let tight = verify_t0_scaled_with(&spec, &pts, 64, |j| exact::ratio_big(&BigUint::one(), &pow2(j))).unwrap();
        assert!(!tight.passed());
        let qde = qde_default(&limits).unwrap();
        assert!(verify_t0_scaled(&qde, &[1, 2], 64).is_err());
    }

    #[test]
    fn notdn_threshold_and_uniform_control() {
        let spec = qnex_default(&Limits::default()).unwrap();
        let pts = checkpoints(&spec, 40, 64).unwrap();
        assert!(verify_notdn_scaled(&spec, &pts, 64).unwrap().passed());
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let uniform: Vec<BigRational> = (0..100).map(|_| exact::ratio(rng.gen_range(0..1_000_000u64), 1_000_000u64)).collect();
        let control = verify_notdn_points(&uniform, 6, 64).unwrap();
        assert!(!control.passed());
    }

    #[test]
    fn mqd_default_and_negative_control() {
        let limits = Limits::default();
        let cert = mqd_grid(2..=12, 2, &limits).unwrap();
        assert!(cert.passed(), "{:?}", cert.counterexample);
        assert_eq!(cert.details["hypotheses_fail_at"], json!([1, 2]));
        assert_eq!(cert.details["epsbar_decreasing"], json!(true));

        let spec = qde_default(&limits).unwrap();
        let cube = |i: u64| BigUint::from(i.pow(3));
        let family = MffSpec::qde(2, 12, cube).unwrap();
        let opts = MqdOptions {
            final_threshold: None,
            epsbar_scale: exact::ratio(1, 10),
        };
        let bad = verify_mqd_scaled_with(&spec, &family, &mqd_checkpoints(&spec).unwrap(), &opts).unwrap();
        assert!(!bad.passed());
        let strict = MqdOptions {
            final_threshold: Some(exact::ratio(1, 20)),
            ..MqdOptions::default()
        };
        assert!(!verify_mqd_scaled_with(&spec, &family, &[1], &strict).unwrap().passed());
        let shifted = MffSpec::qde(3, 12, cube).unwrap();
        assert!(verify_mqd_scaled(&spec, &shifted, &[1]).is_err());
    }

    #[test]
    fn salat_small_and_mutated() {
        let cert = verify_salat_counterexample(60).unwrap();
        assert!(cert.passed(), "{:?}", cert.counterexample);
        assert!(cert.notes.iter().any(|n| n.contains("not reached")));
        let bad = verify_salat_counterexample_with(20, |_, e| e[4] = 0).unwrap();
        assert!(!bad.passed());
        assert_eq!(bad.counterexample.unwrap()["n"], json!(5));
        assert!(verify_salat_counterexample(1).is_err());
    }
}
