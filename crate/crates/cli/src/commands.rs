use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use cantor_normal::blocks::{count_prefix_occurrences_iter, io, Digit};
use cantor_normal::cantor::{divergence_diagnostics, orbit_point, q_moment, BasicSequence, CantorExpansion};
use cantor_normal::constructions::{qde_default, qnex_default, ConstructionSpec, MffEntry, MffSpec};
use cantor_normal::discrepancy::{
    boundf_hypotheses, concat_bound, e1l_bound, epsbar, kn1_bound, star_discrepancy, ConcatPart,
    DiscrepancyReport, EmpiricalMeasure, PrefixWeights, UnitSequence,
};
use cantor_normal::verify::{self, Claim, Grid};
use cantor_normal::weightings::{check_eps_k_normal, weight_eval, Weighting};
use cantor_normal::{exact, Error, Limits, Result};
use num_bigint::BigUint;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::{Command, DigitSource, NormalityAction, Preset, QSource, WeightsAction};

/// Runs one subcommand; `Ok(false)` means a check failed.
pub fn run(cmd: Command) -> Result<bool> {
    let limits = Limits::from_env()?;
    match cmd {
        Command::Construct { source, n_max, out } => construct(&load(&source.spec, source.preset, &limits)?, n_max, out, &limits),
        Command::Count { source, block, n } => count(&source, &parse_digits(&block)?, n, &limits),
        Command::Weights {
            action: WeightsAction::Eval { weighting, block },
        } => {
            let mu = parse_weighting(&weighting)?;
            let block = parse_digits(&block)?;
            let w = weight_eval(&mu, &block);
            print_json(&json!({
                "weighting": weighting, "block": block,
                "weight": exact::format(&w), "weight_approx": exact::approx(&w),
            }))?;
            Ok(true)
        }
        Command::Normality {
            action: NormalityAction::Check { source, n_max, eps, k, weighting },
        } => {
            let digits = digits_from(&source, n_max, &limits)?;
            let mu = parse_weighting(&weighting)?;
            let eps = exact::parse(&eps)?;
            let verdict = check_eps_k_normal(&digits, &eps, k, &mu, &limits)?;
            print_json(&json!({
                "n": digits.len(), "eps": exact::format(&eps), "k": k, "weighting": weighting,
                "verdict": verdict,
            }))?;
            Ok(verdict.passed)
        }
        Command::Moments { q, k, checkpoints } => {
            let seq = basic_sequence(&q, &limits)?;
            let table = divergence_diagnostics(&seq, k, &parse_u64_list(&checkpoints)?)?;
            print_json(&serde_json::to_value(&table)?)?;
            Ok(true)
        }
        Command::Orbit { source, n_list, tail, out } => {
            let spec = load(&source.spec, source.preset, &limits)?;
            orbit(spec, &parse_u64_list(&n_list)?, tail, out)
        }
        Command::Discrepancy { input, exact: _, bounds, segments, base, eps, out } => {
            discrepancy(&input, &bounds, segments.as_deref(), base, eps.as_deref(), out)
        }
        Command::Verify { claim, grid, all, budget, out } => verify(claim, grid, all, budget, out, &limits),
        Command::Report { source, checkpoints, count, tail, eps, blocks, out } => {
            let spec = load(&source.spec, source.preset, &limits)?;
            let family = match (source.preset, eps) {
                (Some(Preset::Qde), None) => Some(MffSpec::qde(2, 12, |i| BigUint::from(i.pow(3)))?),
                (_, Some(eps)) => Some(family_from_eps(&spec, &eps)?),
                _ => None,
            };
            let points = match checkpoints {
                Some(c) => parse_u64_list(&c)?,
                None => verify::checkpoints(&spec, count, 0)?,
            };
            let blocks = blocks
                .split(';')
                .filter(|b| !b.trim().is_empty())
                .map(parse_digits)
                .collect::<Result<Vec<_>>>()?;
            let doc = report(spec, family.as_ref(), &points, tail, &blocks, &limits)?;
            write_json(out.as_deref(), &doc)?;
            Ok(true)
        }
    }
}

fn load(path: &Option<PathBuf>, preset: Option<Preset>, limits: &Limits) -> Result<ConstructionSpec> {
    match (path, preset) {
        (Some(p), _) => {
            let text = fs::read_to_string(p)?;
            ConstructionSpec::from_json(&text, limits)
        }
        (None, Some(Preset::Qnex)) => qnex_default(limits),
        (None, Some(Preset::Qde)) => qde_default(limits),
        (None, None) => Err(Error::InvalidArgument("a spec or preset is required".into())),
    }
}

fn cap(n: u64, limits: &Limits) -> Result<()> {
    if n > limits.max_digits {
        return Err(Error::SizeLimit {
            what: format!("{n} digits"),
            required: BigUint::from(n),
            cap: limits.max_digits,
        });
    }
    Ok(())
}

fn spec_prefix(spec: &ConstructionSpec, n_max: Option<u64>, limits: &Limits) -> Result<Vec<(u64, Digit)>> {
    let n = n_max.unwrap_or(spec.len());
    cap(n, limits)?;
    Ok(spec.assemble(n)?.collect())
}

fn digits_from(source: &DigitSource, n_max: Option<u64>, limits: &Limits) -> Result<Vec<Digit>> {
    match &source.input {
        Some(path) => {
            let mut d = io::read_digits_file(path)?.into_vec();
            if let Some(n) = n_max {
                if n as usize > d.len() {
                    return Err(Error::NeedsMoreDigits { required: n, available: d.len() as u64 });
                }
                d.truncate(n as usize);
            }
            Ok(d)
        }
        None => {
            let spec = load(&source.spec, source.preset, limits)?;
            Ok(spec_prefix(&spec, n_max, limits)?.into_iter().map(|(_, e)| e).collect())
        }
    }
}

fn construct(spec: &ConstructionSpec, n_max: Option<u64>, out: Option<PathBuf>, limits: &Limits) -> Result<bool> {
    let terms = spec_prefix(spec, n_max, limits)?;
    let n = terms.len() as u64;
    match out {
        Some(path) => {
            io::write_digits_file(&path, terms.iter().map(|&(_, e)| e))?;
            let runs: Vec<Value> = spec
                .runs()
                .filter(|&(_, first, _)| first <= n)
                .map(|(i, first, last)| {
                    json!({ "segment": i, "first": first, "last": last.min(n), "q": spec.segment(i).unwrap().base() })
                })
                .collect();
            print_json(&json!({ "n": n, "digits": path, "q_runs": runs }))?;
        }
        None => {
            let mut s = String::from("n,q,E\n");
            for (idx, (q, e)) in terms.iter().enumerate() {
                writeln!(s, "{},{q},{e}", idx + 1).unwrap();
            }
            print!("{s}");
        }
    }
    Ok(true)
}

fn count(source: &DigitSource, block: &[Digit], n: Option<u64>, limits: &Limits) -> Result<bool> {
    let k = block.len() as u64;
    let (n, count) = match &source.input {
        Some(_) => {
            let digits = digits_from(source, None, limits)?;
            let avail = (digits.len() as u64 + 1).saturating_sub(k);
            let n = n.unwrap_or(avail);
            (n, count_prefix_occurrences_iter(block, digits.iter().copied(), n)?)
        }
        None => {
            let spec = load(&source.spec, source.preset, limits)?;
            let n = n.unwrap_or((spec.len() + 1).saturating_sub(k));
            let end = n + k.max(1) - 1;
            cap(end, limits)?;
            (n, count_prefix_occurrences_iter(block, spec.assemble(end)?.map(|(_, e)| e), n)?)
        }
    };
    print_json(&json!({ "block": block, "n": n, "count": count }))?;
    Ok(true)
}

fn basic_sequence(src: &QSource, limits: &Limits) -> Result<BasicSequence> {
    if let Some(q) = &src.q {
        return BasicSequence::explicit(parse_u64_list(q)?);
    }
    if let Some(b) = src.constant {
        return BasicSequence::constant(b);
    }
    let spec = load(&src.spec, src.preset, limits)?;
    Ok(CantorExpansion::from_spec(Arc::new(spec)).basic_sequence().clone())
}

fn orbit(spec: ConstructionSpec, ns: &[u64], tail: u64, out: Option<PathBuf>) -> Result<bool> {
    strictly_increasing(ns)?;
    let spec = Arc::new(spec);
    let exp = CantorExpansion::from_spec(spec.clone());
    let mut csv = String::from("n,j,lo,hi,lo_approx,hi_approx\n");
    for &n in ns {
        let j = spec.segment_index(n)?.t0.map_or(String::new(), |j| j.to_string());
        let iv = orbit_point(&exp, n, tail)?;
        writeln!(
            csv,
            "{n},{j},{},{},{},{}",
            exact::format(&iv.lo),
            exact::format(&iv.hi),
            exact::approx(&iv.lo),
            exact::approx(&iv.hi)
        )
        .unwrap();
    }
    match out {
        Some(p) => fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(true)
}

fn read_sequence(path: &Path) -> Result<Vec<BigRational>> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<_>> = line.split(',').map(|f| exact::parse(f.trim())).collect();
        match parsed {
            Ok(v) => values.extend(v),
            // a header row
            Err(_) if values.is_empty() && idx == 0 => continue,
            Err(e) => return Err(Error::InvalidArgument(format!("line {}: {e}", idx + 1))),
        }
    }
    Ok(values)
}

fn discrepancy(
    input: &Path,
    bounds: &[String],
    segments: Option<&str>,
    base: Option<u64>,
    eps: Option<&str>,
    out: Option<PathBuf>,
) -> Result<bool> {
    let values = read_sequence(input)?;
    let z = UnitSequence::new(values.clone())?;
    let mut report = DiscrepancyReport::new(&z)?;
    for name in bounds {
        let value = match name.trim() {
            "kn1" => {
                let mut sorted = values.clone();
                sorted.sort();
                kn1_bound(&UnitSequence::new(sorted)?)?
            }
            "kn2" => {
                let lens = parse_u64_list(segments.ok_or_else(|| usage("kn2 needs --segments"))?)?;
                if lens.iter().sum::<u64>() != values.len() as u64 || lens.contains(&0) {
                    return Err(usage("--segments must be positive and sum to the sequence length"));
                }
                let mut parts = Vec::new();
                let mut at = 0;
                for len in lens {
                    let part = UnitSequence::new(values[at..at + len as usize].to_vec())?;
                    parts.push(ConcatPart {
                        multiplicity: BigUint::from(1u8),
                        len: BigUint::from(len),
                        eps: star_discrepancy(&part)?,
                    });
                    at += len as usize;
                }
                concat_bound(&parts)?
            }
            "e1l" => {
                let b = base.ok_or_else(|| usage("e1l needs --base"))?;
                let e = exact::parse(eps.ok_or_else(|| usage("e1l needs --eps"))?)?;
                e1l_bound(b, &e, values.len() as u64)?
            }
            other => return Err(usage(&format!("unknown bound {other:?}; expected kn1, kn2 or e1l"))),
        };
        report = report.with_bound(name.trim(), value);
    }
    write_json(out.as_deref(), &serde_json::to_value(&report)?)?;
    Ok(report.bounds.iter().all(|b| b.holds))
}

fn verify(
    claim: Option<String>,
    grid: Option<String>,
    all: bool,
    budget: Option<String>,
    out: Option<PathBuf>,
    limits: &Limits,
) -> Result<bool> {
    let (doc, passed, meta) = if all {
        let budget = budget.as_deref().map(verify::parse_budget).transpose()?;
        let start = Instant::now();
        let suite = verify::run_all(budget, limits)?;
        let runtimes: Vec<Value> = suite
            .certificates
            .iter()
            .map(|c| json!({ "claim": c.claim, "runtime_s": c.runtime.as_secs_f64() }))
            .collect();
        let meta = json!({ "runtime_s": start.elapsed().as_secs_f64(), "claims": runtimes });
        (serde_json::to_value(&suite)?, suite.passed(), meta)
    } else {
        let claim: Claim = claim.as_deref().unwrap_or_default().parse()?;
        let grid: Grid = grid.as_deref().unwrap_or("").parse()?;
        let cert = claim.run(&grid, limits)?;
        let meta = json!({ "claim": cert.claim, "runtime_s": cert.runtime.as_secs_f64() });
        (serde_json::to_value(&cert)?, cert.passed(), meta)
    };
    write_json(out.as_deref(), &doc)?;
    if let Some(p) = out {
        let mut sidecar = p.into_os_string();
        sidecar.push(".meta.json");
        fs::write(sidecar, serde_json::to_string_pretty(&meta)? + "\n")?;
    }
    if !passed {
        eprintln!("verification failed");
    }
    Ok(passed)
}

fn family_from_eps(spec: &ConstructionSpec, eps: &str) -> Result<MffSpec> {
    let eps: Vec<BigRational> = eps.split(',').map(|e| exact::parse(e.trim())).collect::<Result<_>>()?;
    if eps.len() != spec.segment_count() {
        return Err(usage(&format!("--eps has {} values for {} segments", eps.len(), spec.segment_count())));
    }
    let entries = spec
        .segments()
        .iter()
        .zip(eps)
        .map(|(s, eps)| MffEntry { l: BigUint::from(s.l), b: s.base(), eps })
        .collect();
    MffSpec::new(1, entries)
}

/// Occurrence counts of `block` starting at each checkpoint or before, in one
/// pass over the digits.
fn streamed_counts(spec: &ConstructionSpec, block: &[Digit], points: &[u64]) -> Result<Vec<u64>> {
    let k = block.len();
    let Some(&last) = points.last() else { return Ok(Vec::new()) };
    let mut window = std::collections::VecDeque::with_capacity(k);
    let mut found = 0u64;
    let mut out = Vec::with_capacity(points.len());
    let mut next = 0;
    for (pos, (_, e)) in spec.assemble(last + k as u64 - 1)?.enumerate() {
        if window.len() == k {
            window.pop_front();
        }
        window.push_back(e);
        if window.len() < k {
            continue;
        }
        let start = pos as u64 + 2 - k as u64;
        if window.iter().eq(block.iter()) {
            found += 1;
        }
        while next < points.len() && points[next] == start {
            out.push(found);
            next += 1;
        }
    }
    Ok(out)
}

fn report(
    spec: ConstructionSpec,
    family: Option<&MffSpec>,
    points: &[u64],
    tail: u64,
    blocks: &[Vec<Digit>],
    limits: &Limits,
) -> Result<Value> {
    strictly_increasing(points)?;
    if points.first() == Some(&0) {
        return Err(usage("checkpoints start at 1"));
    }
    let spec = Arc::new(spec);
    let exp = CantorExpansion::from_spec(spec.clone());
    let mut notes = Vec::new();

    let mut ratios = Vec::new();
    for block in blocks {
        if block.is_empty() {
            return Err(usage("empty block in --blocks"));
        }
        let k = block.len() as u64;
        let reachable: Vec<u64> = points
            .iter()
            .copied()
            .filter(|&n| n + k - 1 <= spec.len() && n + k - 1 <= limits.max_digits)
            .collect();
        if reachable.len() < points.len() {
            notes.push(format!(
                "ratios for {block:?} omitted at {} checkpoints beyond the digit cap or the construction",
                points.len() - reachable.len()
            ));
        }
        let counts = streamed_counts(&spec, block, &reachable)?;
        let rows = reachable
            .iter()
            .zip(counts)
            .map(|(&n, c)| {
                let r = exact::int(c) / q_moment(exp.basic_sequence(), n, k)?;
                Ok(json!({ "n": n, "count": c, "ratio": exact::format(&r), "ratio_approx": exact::approx(&r) }))
            })
            .collect::<Result<Vec<_>>>()?;
        ratios.push(json!({ "block": block, "rows": rows }));
    }

    let lengths: Vec<BigUint> = spec.segments().iter().map(|s| BigUint::from(s.block.len())).collect();
    let mut bars: Vec<(u64, Option<BigRational>)> = Vec::new();
    if let Some(f) = family {
        if f.entries.len() != spec.segment_count() {
            return Err(usage("family and construction have different segment counts"));
        }
        for i in f.first_index..f.last_index() {
            let pw = PrefixWeights::from_mff(f, &lengths, i)?;
            let bar = boundf_hypotheses(&pw).holds.then(|| epsbar(&pw)).transpose()?;
            bars.push((i, bar));
        }
    } else {
        notes.push("no ε_i given; ε̄ trajectory omitted".into());
    }

    let mut orbits = Vec::new();
    let mut trajectory = Vec::new();
    for &n in points {
        let idx = spec.segment_index(n)?;
        if n + tail <= spec.len() {
            let iv = orbit_point(&exp, n, tail)?;
            orbits.push(json!({
                "n": n, "j": idx.t0, "lo": exact::format(&iv.lo), "hi": exact::format(&iv.hi),
                "lo_approx": exact::approx(&iv.lo), "hi_approx": exact::approx(&iv.hi),
            }));
        }
        let d = EmpiricalMeasure::of_spec_prefix(&spec, n)?.star_discrepancy()?;
        let bar = bars.iter().find(|(i, _)| *i == idx.idef as u64).and_then(|(_, b)| b.as_ref());
        trajectory.push(json!({
            "n": n, "i": idx.idef, "d_star": exact::format(&d), "d_star_approx": exact::approx(&d),
            "epsbar": bar.map(exact::format), "epsbar_approx": bar.map(exact::approx),
        }));
    }
    if orbits.len() < points.len() {
        notes.push(format!("{} checkpoints lack {tail} tail digits for an orbit enclosure", points.len() - orbits.len()));
    }
    let epsbar_rows: Vec<Value> = bars
        .iter()
        .map(|(i, b)| json!({ "i": i, "value": b.as_ref().map(exact::format), "approx": b.as_ref().map(exact::approx) }))
        .collect();

    Ok(json!({
        "length": spec.len(),
        "segments": spec.segment_count(),
        "checkpoints": points,
        "normality_ratios": ratios,
        "orbit": orbits,
        "discrepancy": trajectory,
        "epsbar": epsbar_rows,
        "notes": notes,
    }))
}

fn usage(msg: &str) -> Error {
    Error::InvalidArgument(msg.to_string())
}

fn strictly_increasing(ns: &[u64]) -> Result<()> {
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("positions must be strictly increasing"));
    }
    Ok(())
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| usage(&format!("{t:?} is not a non-negative integer"))))
        .collect()
}

fn parse_digits(s: &str) -> Result<Vec<Digit>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| usage(&format!("{t:?} is not a digit"))))
        .collect()
}

fn parse_weighting(s: &str) -> Result<Weighting> {
    let (kind, arg) = s
        .split_once(':')
        .ok_or_else(|| usage(&format!("weighting {s:?} should look like uniform:10 or nu:6")))?;
    let arg: u64 = arg.trim().parse().map_err(|_| usage(&format!("bad weighting parameter in {s:?}")))?;
    match kind.trim() {
        "uniform" | "lambda" => Weighting::uniform(arg),
        "nu" => Weighting::nu(arg),
        other => Err(usage(&format!("unknown weighting {other:?}"))),
    }
}

fn print_json(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write_json(out: Option<&Path>, v: &Value) -> Result<()> {
    match out {
        Some(p) => fs::write(p, serde_json::to_string_pretty(v)? + "\n")?,
        None => print_json(v)?,
    }
    Ok(())
}
