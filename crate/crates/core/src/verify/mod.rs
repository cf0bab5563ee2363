//! Executable checks of the block lemmas and of the scaled constructions,
//! each producing a [`Certificate`].
//!
//! Every check has an injectable mutation (a corrupted weight table, a wrong
//! repetition count, a perturbed bound) so that its failure path can be
//! exercised.

mod lemmas;
mod scaled;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::limits::Limits;

pub use lemmas::{
    verify_bounds_ng_nl, verify_bounds_ng_nl_with, verify_eknu, verify_eknu_with, verify_lemma_1021,
    verify_lemma_1021_unguarded, verify_lemma_amount, verify_lemma_amount_with, verify_lemma_pbw,
    verify_lemma_pbw_with,
};
pub use scaled::{
    checkpoints, mqd_checkpoints, qnex_guard, verify_mqd_scaled, verify_mqd_scaled_with, verify_notdn_points,
    verify_notdn_scaled, verify_salat_counterexample, verify_salat_counterexample_with, verify_t0_scaled,
    verify_t0_scaled_with, MqdOptions, SALAT_ZERO_HORIZON,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
}

/// Machine-readable result of one claim over one parameter grid.
///
/// A failing certificate always carries a counterexample holding the
/// parameters and both sides of the violated comparison. Runtime is kept out
/// of the serialized form so that identical inputs give identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub claim: String,
    pub grid: Value,
    pub result: Outcome,
    /// Number of elementary comparisons made.
    pub checked: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
    #[serde(skip)]
    pub runtime: Duration,
}

impl Certificate {
    fn new(claim: Claim, grid: Value) -> Self {
        Certificate {
            claim: claim.id().into(),
            grid,
            result: Outcome::Pass,
            checked: 0,
            counterexample: None,
            notes: Vec::new(),
            details: Value::Null,
            runtime: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.result == Outcome::Pass
    }

    /// Records the first failure; later ones are ignored.
    fn fail(&mut self, witness: Value) {
        if self.result == Outcome::Pass {
            self.result = Outcome::Fail;
            self.counterexample = Some(witness);
        }
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    fn timed(mut self, start: Instant) -> Self {
        self.runtime = start.elapsed();
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The checks that can be requested by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Claim {
    LemmaAmount,
    LemmaPbw,
    BoundsNgNl,
    Lemma1021,
    LemmaEknu,
    T0Scaled,
    NotdnScaled,
    MqdScaled,
    SalatCounterexample,
}

impl Claim {
    pub const ALL: [Claim; 9] = [
        Claim::LemmaAmount,
        Claim::LemmaPbw,
        Claim::BoundsNgNl,
        Claim::Lemma1021,
        Claim::LemmaEknu,
        Claim::T0Scaled,
        Claim::NotdnScaled,
        Claim::MqdScaled,
        Claim::SalatCounterexample,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Claim::LemmaAmount => "lemma-amount",
            Claim::LemmaPbw => "lemma-pbw",
            Claim::BoundsNgNl => "bounds-ng-nl",
            Claim::Lemma1021 => "lemma-1021",
            Claim::LemmaEknu => "lemma-eknu",
            Claim::T0Scaled => "t0-scaled",
            Claim::NotdnScaled => "notdn-scaled",
            Claim::MqdScaled => "mqd-scaled",
            Claim::SalatCounterexample => "salat-counterexample",
        }
    }

    /// Default parameter grid.
    pub fn default_grid(self) -> Grid {
        let g = |pairs: &[(&str, u64, u64)]| Grid(pairs.iter().map(|&(k, a, b)| (k.to_string(), a..=b)).collect());
        match self {
            Claim::LemmaAmount => g(&[("b", 2, 4), ("w", 1, 3)]),
            Claim::LemmaPbw => g(&[("b", 2, 6), ("w", 1, 3)]),
            Claim::BoundsNgNl => g(&[("b", 2, 6), ("w", 2, 3), ("k", 1, 2)]),
            Claim::Lemma1021 => g(&[("b", 6, 10), ("w", 2, 12)]),
            Claim::LemmaEknu => g(&[("b", 6, 6), ("w", 2, 4), ("k", 1, 2)]),
            Claim::T0Scaled | Claim::NotdnScaled => g(&[("i", 6, 10), ("w", 2, 2)]),
            Claim::MqdScaled => g(&[("i", 2, 12), ("w", 2, 2)]),
            Claim::SalatCounterexample => g(&[("m", 200, 200)]),
        }
    }

    /// Rough cost of the default grid in seconds, used to fit a budget.
    pub fn nominal_cost(self) -> f64 {
        match self {
            Claim::LemmaAmount | Claim::LemmaPbw | Claim::Lemma1021 => 0.1,
            Claim::BoundsNgNl => 1.0,
            Claim::LemmaEknu => 20.0,
            Claim::T0Scaled | Claim::NotdnScaled => 2.0,
            Claim::MqdScaled => 2.0,
            Claim::SalatCounterexample => 5.0,
        }
    }

    /// Runs the claim over `grid`, filling unspecified axes from the default.
    pub fn run(self, grid: &Grid, limits: &Limits) -> Result<Certificate> {
        let grid = self.default_grid().overridden_by(grid)?;
        match self {
            Claim::LemmaAmount => verify_lemma_amount(grid.axis("b")?, grid.axis("w")?, limits),
            Claim::LemmaPbw => verify_lemma_pbw(grid.axis("b")?, grid.axis("w")?, limits),
            Claim::BoundsNgNl => {
                let (b, w, k) = (grid.axis("b")?, grid.axis("w")?, grid.axis("k")?);
                lemmas::ng_nl_grid(b, w, *k.end(), limits)
            }
            Claim::Lemma1021 => verify_lemma_1021(grid.axis("b")?, grid.axis("w")?),
            Claim::LemmaEknu => lemmas::eknu_grid(grid.axis("b")?, grid.axis("w")?, grid.axis("k")?, limits),
            Claim::T0Scaled => scaled::t0_grid(grid.axis("i")?, grid.single("w")?, limits),
            Claim::NotdnScaled => scaled::notdn_grid(grid.axis("i")?, grid.single("w")?, limits),
            Claim::MqdScaled => scaled::mqd_grid(grid.axis("i")?, grid.single("w")?, limits),
            Claim::SalatCounterexample => verify_salat_counterexample(grid.single("m")?),
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Claim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Claim::ALL.into_iter().find(|c| c.id() == s.trim()).ok_or_else(|| {
            let known: Vec<&str> = Claim::ALL.iter().map(|c| c.id()).collect();
            Error::invalid(format!("unknown claim {s:?}; known claims: {}", known.join(", ")))
        })
    }
}

/// Named integer ranges, written `b=2..6,w=1..3` (a bare value is a
/// one-point range).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Grid(pub BTreeMap<String, RangeInclusive<u64>>);

impl Grid {
    pub fn axis(&self, name: &str) -> Result<RangeInclusive<u64>> {
        self.0
            .get(name)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("grid has no axis {name:?}")))
    }

    pub fn single(&self, name: &str) -> Result<u64> {
        let r = self.axis(name)?;
        if r.start() != r.end() {
            return Err(Error::invalid(format!("grid axis {name:?} takes a single value")));
        }
        Ok(*r.start())
    }

    fn overridden_by(mut self, other: &Grid) -> Result<Grid> {
        for (k, v) in &other.0 {
            if !self.0.contains_key(k) {
                let known: Vec<&str> = self.0.keys().map(String::as_str).collect();
                return Err(Error::invalid(format!(
                    "axis {k:?} does not apply here; expected one of {}",
                    known.join(", ")
                )));
            }
            self.0.insert(k.clone(), v.clone());
        }
        Ok(self)
    }

    pub fn to_json(&self) -> Value {
        Value::Object(
            self.0
                .iter()
                .map(|(k, r)| (k.clone(), json!([r.start(), r.end()])))
                .collect(),
        )
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut axes = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || Error::invalid(format!("grid entry {part:?} should look like b=2..6 or w=3"));
            let (name, range) = part.split_once('=').ok_or_else(bad)?;
            let parse = |v: &str| v.trim().parse::<u64>().map_err(|_| bad());
            let (lo, hi) = match range.split_once("..") {
                Some((lo, hi)) => match hi.strip_prefix('=') {
                    Some(hi) => (parse(lo)?, parse(hi)?),
                    None => (parse(lo)?, parse(hi)?),
                },
                None => {
                    let v = parse(range)?;
                    (v, v)
                }
            };
            if lo > hi {
                return Err(Error::invalid(format!("grid axis {name} has an empty range {lo}..{hi}")));
            }
            if axes.insert(name.trim().to_string(), lo..=hi).is_some() {
                return Err(Error::invalid(format!("grid axis {name} given twice")));
            }
        }
        Ok(Grid(axes))
    }
}

/// Outcome of running several claims.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub certificates: Vec<Certificate>,
    /// Claims left out to stay within the budget.
    pub skipped: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(Certificate::passed)
    }
}

/// Runs every claim on its default grid, concurrently, reporting in the
/// fixed claim order. With a budget, claims are admitted in that order while
/// their summed nominal cost fits.
pub fn run_all(budget: Option<Duration>, limits: &Limits) -> Result<SuiteReport> {
    let mut admitted = Vec::new();
    let mut skipped = Vec::new();
    let mut spent = 0.0;
    for claim in Claim::ALL {
        let cost = claim.nominal_cost();
        match budget {
            Some(b) if spent + cost > b.as_secs_f64() => skipped.push(claim.id().to_string()),
            _ => {
                spent += cost;
                admitted.push(claim);
            }
        }
    }
    let certificates = admitted
        .par_iter()
        .map(|c| c.run(&Grid::default(), limits))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport { certificates, skipped })
}

/// Parses durations such as `90s`, `10min`, `2h` or a bare number of seconds.
pub fn parse_budget(s: &str) -> Result<Duration> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit() && c != '.').unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| Error::invalid(format!("budget {s:?} should look like 90s or 10min")))?;
    let scale = match unit.trim() {
        "" | "s" | "sec" => 1.0,
        "m" | "min" => 60.0,
        "h" => 3600.0,
        other => return Err(Error::invalid(format!("unknown budget unit {other:?}"))),
    };
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::invalid("budget must be a non-negative number"));
    }
    Ok(Duration::from_secs_f64(value * scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let g: Grid = "b=2..6,w=1..=3, k=2".parse().unwrap();
        assert_eq!(g.axis("b").unwrap(), 2..=6);
        assert_eq!(g.axis("w").unwrap(), 1..=3);
        assert_eq!(g.single("k").unwrap(), 2);
        assert!("b=6..2".parse::<Grid>().is_err());
        assert!("b".parse::<Grid>().is_err());
        assert!("b=1,b=2".parse::<Grid>().is_err());
        let merged = Claim::LemmaPbw.default_grid().overridden_by(&"w=1..2".parse().unwrap()).unwrap();
        assert_eq!(merged.axis("b").unwrap(), 2..=6);
        assert_eq!(merged.axis("w").unwrap(), 1..=2);
        assert!(Claim::LemmaPbw.default_grid().overridden_by(&"m=3".parse().unwrap()).is_err());
    }

    #[test]
    fn claim_names_round_trip() {
        for c in Claim::ALL {
            assert_eq!(c.id().parse::<Claim>().unwrap(), c);
        }
        assert!("lemma-foo".parse::<Claim>().is_err());
    }

    #[test]
    fn budgets() {
        assert_eq!(parse_budget("10min").unwrap(), Duration::from_secs(600));
        assert_eq!(parse_budget("90").unwrap(), Duration::from_secs(90));
        assert_eq!(parse_budget("1.5h").unwrap(), Duration::from_secs(5400));
        assert!(parse_budget("soon").is_err());
        assert!(parse_budget("5parsecs").is_err());
    }

    #[test]
    fn tight_budget_skips_claims() {
        let report = run_all(Some(Duration::from_millis(250)), &Limits::default()).unwrap();
        let ran: Vec<&str> = report.certificates.iter().map(|c| c.claim.as_str()).collect();
        assert_eq!(ran, ["lemma-amount", "lemma-pbw"]);
        assert!(report.skipped.contains(&"lemma-eknu".to_string()));
        assert!(report.passed());
    }
}
