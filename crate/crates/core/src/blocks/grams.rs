use num_bigint::BigUint;

use super::Digit;
use crate::error::{Error, Result};
use crate::limits::Limits;

/// Occurrence counts of every block of length `1..=max_len` over a fixed
/// alphabet, gathered in one streaming pass.
///
/// Each length keeps a rolling base-`alphabet` code of the last `m` digits,
/// so a digit costs `max_len` multiply-adds regardless of how many blocks are
/// tracked.
#[derive(Clone, Debug)]
pub struct GramCounts {
    alphabet: u64,
    max_len: usize,
    counts: Vec<Vec<u64>>,
    moduli: Vec<u64>,
    codes: Vec<u64>,
    scanned: u64,
}

impl GramCounts {
    pub fn new(alphabet: u64, max_len: usize, limits: &Limits) -> Result<Self> {
        if alphabet == 0 || max_len == 0 {
            return Err(Error::invalid("alphabet and block length must be positive"));
        }
        let table = BigUint::from(alphabet).pow(max_len as u32);
        limits.check_blocks(|| format!("table of {alphabet}^{max_len} block counts"), &table)?;
        let moduli: Vec<u64> = (1..=max_len as u32).map(|m| alphabet.pow(m)).collect();
        Ok(GramCounts {
            alphabet,
            max_len,
            counts: moduli.iter().map(|&size| vec![0; size as usize]).collect(),
            moduli,
            codes: vec![0; max_len],
            scanned: 0,
        })
    }

    /// Counts every gram in `digits`.
    pub fn scan<I>(alphabet: u64, max_len: usize, digits: I, limits: &Limits) -> Result<Self>
    where
        I: IntoIterator<Item = Digit>,
    {
        let mut grams = GramCounts::new(alphabet, max_len, limits)?;
        for d in digits {
            grams.push(d)?;
        }
        Ok(grams)
    }

    pub fn push(&mut self, digit: Digit) -> Result<()> {
        let d = u64::from(digit);
        if d >= self.alphabet {
            return Err(Error::invalid(format!(
                "digit {digit} outside alphabet 0..{}",
                self.alphabet
            )));
        }
        self.scanned += 1;
        for m in 0..self.max_len {
            let code = (self.codes[m] * self.alphabet + d) % self.moduli[m];
            self.codes[m] = code;
            if self.scanned > m as u64 {
                self.counts[m][code as usize] += 1;
            }
        }
        Ok(())
    }

    pub fn alphabet(&self) -> u64 {
        self.alphabet
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Number of digits pushed so far.
    pub fn scanned(&self) -> u64 {
        self.scanned
    }

    /// `N(block, y)` for the scanned `y`; zero for blocks using digits outside
    /// the alphabet.
    ///
    /// # Panics
    ///
    /// Panics if `block` is empty or longer than `max_len`.
    pub fn count(&self, block: &[Digit]) -> u64 {
        assert!(!block.is_empty() && block.len() <= self.max_len);
        let mut code = 0u64;
        for &d in block {
            if u64::from(d) >= self.alphabet {
                return 0;
            }
            code = code * self.alphabet + u64::from(d);
        }
        self.counts[block.len() - 1][code as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{count_occurrences, enumerate_blocks};

    #[test]
    fn agrees_with_direct_counting() {
        let text: Vec<Digit> = vec![0, 1, 2, 2, 1, 0, 2, 2, 2, 1, 0, 0, 1];
        let limits = Limits::default();
        let grams = GramCounts::scan(3, 3, text.iter().copied(), &limits).unwrap();
        assert_eq!(grams.scanned(), text.len() as u64);
        for len in 1..=3 {
            for b in enumerate_blocks(3, len, &limits).unwrap() {
                assert_eq!(grams.count(&b), count_occurrences(&b, &text).unwrap(), "block {b}");
            }
        }
        assert_eq!(grams.count(&[7]), 0);
    }

    #[test]
    fn rejects_digits_outside_alphabet() {
        let mut grams = GramCounts::new(2, 1, &Limits::default()).unwrap();
        assert!(grams.push(2).is_err());
    }
}
