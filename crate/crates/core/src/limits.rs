use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Environment variable overriding [`Limits::max_digits`].
pub const SIZE_CAP_ENV: &str = "CNL_SIZE_CAP";

pub const DEFAULT_MAX_DIGITS: u64 = 100_000_000;
pub const DEFAULT_MAX_BLOCKS: u64 = 10_000_000;

/// Caps on materialized digit sequences and on exhaustive block enumeration.
///
/// The digit cap admits `P_{6,4}` (4 * 2^24 digits) but nothing of the size the
/// unscaled constructions would need.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_digits: u64,
    pub max_blocks: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_digits: DEFAULT_MAX_DIGITS,
            max_blocks: DEFAULT_MAX_BLOCKS,
        }
    }
}

impl Limits {
    /// Defaults, with the digit cap taken from `CNL_SIZE_CAP` when set.
    pub fn from_env() -> Result<Self> {
        let mut limits = Limits::default();
        if let Ok(raw) = std::env::var(SIZE_CAP_ENV) {
            let cap: u64 = raw
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{SIZE_CAP_ENV}={raw:?} is not a positive integer")))?;
            if cap == 0 {
                return Err(Error::invalid(format!("{SIZE_CAP_ENV} must be positive")));
            }
            limits.max_digits = cap;
        }
        Ok(limits)
    }

    pub fn with_max_digits(mut self, max_digits: u64) -> Self {
        self.max_digits = max_digits;
        self
    }

    pub(crate) fn check_digits(&self, what: impl FnOnce() -> String, required: &BigUint) -> Result<u64> {
        match u64::try_from(required) {
            Ok(n) if n <= self.max_digits => Ok(n),
            _ => Err(Error::size_limit(what(), required.clone(), self.max_digits)),
        }
    }

    pub(crate) fn check_blocks(&self, what: impl FnOnce() -> String, required: &BigUint) -> Result<u64> {
        match u64::try_from(required) {
            Ok(n) if n <= self.max_blocks => Ok(n),
            _ => Err(Error::size_limit(what(), required.clone(), self.max_blocks)),
        }
    }
}
