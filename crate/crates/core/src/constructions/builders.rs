use num_bigint::BigUint;

use crate::blocks::{count_top_digit, Block, Digit};
use crate::error::{Error, Result};
use crate::exact::pow2;
use crate::limits::Limits;

/// `|P_{b,w}| = w * 2^{bw}`.
pub fn p_len(b: u64, w: u64) -> BigUint {
    pow2(b * w) * w
}

/// `|C_{b,w}| = w * b^w`.
pub fn c_len(b: u64, w: u64) -> BigUint {
    BigUint::from(b).pow(w as u32) * w
}

fn check_bw(b: u64, w: u64) -> Result<()> {
    if b < 2 {
        return Err(Error::invalid(format!("b must be at least 2, got {b}")));
    }
    if w == 0 {
        return Err(Error::invalid("w must be at least 1"));
    }
    if b >= u64::from(Digit::MAX) {
        return Err(Error::invalid(format!("b = {b} exceeds the digit range")));
    }
    Ok(())
}

/// How many consecutive copies of a length-`w` base-`(b+1)` block appear in
/// `P_{b,w}`: `(2^b - b)^{g_b(P)}`, which equals `2^{bw} ν_b(P)`.
pub fn repetition_count(b: u64, w: u64, block: &Block) -> Result<BigUint> {
    if block.base() != b + 1 {
        return Err(Error::invalid(format!(
            "block is in base {}, expected base {}",
            block.base(),
            b + 1
        )));
    }
    if block.len() as u64 != w {
        return Err(Error::invalid(format!("block has length {}, expected {w}", block.len())));
    }
    let top = count_top_digit(block, b)?;
    Ok((pow2(b) - b).pow(top as u32))
}

fn repetition_count_u64(b: u64, digits: &[Digit]) -> u64 {
    let top = digits.iter().filter(|&&d| u64::from(d) == b).count() as u32;
    // callers have checked |P_{b,w}| against the cap, so every factor fits
    ((1u64 << b) - b).pow(top)
}

/// Repetition count of a block given `b`.
pub type RepetitionFn = fn(u64, &[Digit]) -> u64;

/// Streams the digits of `P_{b,w}` without materializing it: every base-`(b+1)`
/// block of length `w` in lexicographic order, each repeated
/// `(2^b - b)^{g_b}` times.
pub fn p_stream(b: u64, w: u64, limits: &Limits) -> Result<PStream<RepetitionFn>> {
    p_stream_with(b, w, limits, repetition_count_u64)
}

/// [`p_stream`] with caller-supplied repetition counts. Used to inject
/// mutations when exercising the verification failure paths.
pub fn p_stream_with<F>(b: u64, w: u64, limits: &Limits, counts: F) -> Result<PStream<F>>
where
    F: Fn(u64, &[Digit]) -> u64,
{
    check_bw(b, w)?;
    limits.check_digits(|| format!("P_{{{b},{w}}}"), &p_len(b, w))?;
    let block = vec![0; w as usize];
    let reps = counts(b, &block);
    let mut stream = PStream {
        b,
        counts,
        block,
        reps_left: reps,
        pos: 0,
        done: false,
    };
    stream.skip_empty();
    Ok(stream)
}

/// Iterator returned by [`p_stream`].
pub struct PStream<F> {
    b: u64,
    counts: F,
    block: Vec<Digit>,
    reps_left: u64,
    pos: usize,
    done: bool,
}

impl<F: Fn(u64, &[Digit]) -> u64> PStream<F> {
    fn advance_block(&mut self) {
        let top = self.b as Digit;
        for d in self.block.iter_mut().rev() {
            if *d < top {
                *d += 1;
                self.reps_left = (self.counts)(self.b, &self.block);
                self.pos = 0;
                return;
            }
            *d = 0;
        }
        self.done = true;
    }

    fn skip_empty(&mut self) {
        while !self.done && self.reps_left == 0 {
            self.advance_block();
        }
    }
}

impl<F: Fn(u64, &[Digit]) -> u64> Iterator for PStream<F> {
    type Item = Digit;

    fn next(&mut self) -> Option<Digit> {
        if self.done {
            return None;
        }
        let d = self.block[self.pos];
        self.pos += 1;
        if self.pos == self.block.len() {
            self.pos = 0;
            self.reps_left -= 1;
            if self.reps_left == 0 {
                self.advance_block();
                self.skip_empty();
            }
        }
        Some(d)
    }
}

/// Materializes `P_{b,w}` as a base-`(b+1)` block.
pub fn build_p(b: u64, w: u64, limits: &Limits) -> Result<Block> {
    check_bw(b, w)?;
    let len = limits.check_digits(|| format!("P_{{{b},{w}}}"), &p_len(b, w))?;
    let mut digits = Vec::with_capacity(len as usize);
    digits.extend(p_stream(b, w, limits)?);
    Ok(Block::new_unchecked(b + 1, digits))
}

/// `C_{b,w}`: every base-`b` block of length `w`, once each, in lexicographic
/// order.
pub fn build_c(b: u64, w: u64, limits: &Limits) -> Result<Block> {
    check_bw(b, w)?;
    let len = limits.check_digits(|| format!("C_{{{b},{w}}}"), &c_len(b, w))?;
    let mut digits = Vec::with_capacity(len as usize);
    let mut current = vec![0 as Digit; w as usize];
    let top = (b - 1) as Digit;
    loop {
        digits.extend_from_slice(&current);
        let mut carried = true;
        for d in current.iter_mut().rev() {
            if *d < top {
                *d += 1;
                carried = false;
                break;
            }
            *d = 0;
        }
        if carried {
            break;
        }
    }
    Ok(Block::new_unchecked(b, digits))
}
