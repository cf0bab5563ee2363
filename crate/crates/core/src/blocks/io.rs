//! On-disk digit streams: an 8-byte little-endian digit count followed by
//! each digit as unsigned LEB128.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Digit, DigitString};
use crate::error::{Error, Result};

/// Writes `digits` in the length-prefixed LEB128 format.
pub fn write_digits<W, I>(mut out: W, digits: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = Digit>,
    I::IntoIter: ExactSizeIterator,
{
    let digits = digits.into_iter();
    out.write_all(&(digits.len() as u64).to_le_bytes())?;
    for d in digits {
        leb128::write::unsigned(&mut out, u64::from(d))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a digit stream written by [`write_digits`].
pub fn read_digits<R: Read>(mut input: R) -> Result<DigitString> {
    let mut header = [0u8; 8];
    input.read_exact(&mut header)?;
    let count = u64::from_le_bytes(header);
    let mut digits = Vec::with_capacity(count.min(1 << 24) as usize);
    for i in 0..count {
        let value = leb128::read::unsigned(&mut input).map_err(|e| match e {
            leb128::read::Error::IoError(io) => Error::Io(io),
            leb128::read::Error::Overflow => Error::invalid(format!("digit {} overflows", i + 1)),
        })?;
        let digit = Digit::try_from(value)
            .map_err(|_| Error::invalid(format!("digit {} = {value} exceeds the digit range", i + 1)))?;
        digits.push(digit);
    }
    Ok(DigitString::new(digits))
}

pub fn write_digits_file<I>(path: impl AsRef<Path>, digits: I) -> Result<()>
where
    I: IntoIterator<Item = Digit>,
    I::IntoIter: ExactSizeIterator,
{
    let file = std::fs::File::create(path)?;
    write_digits(BufWriter::new(file), digits)
}

pub fn read_digits_file(path: impl AsRef<Path>) -> Result<DigitString> {
    let file = std::fs::File::open(path)?;
    read_digits(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_encoding_layout() {
        let mut buf = Vec::new();
        write_digits(&mut buf, vec![0u32, 127, 128, 300]).unwrap();
        assert_eq!(&buf[..8], &4u64.to_le_bytes());
        assert_eq!(&buf[8..], &[0x00, 0x7f, 0x80, 0x01, 0xac, 0x02]);
    }

    #[test]
    fn truncated_stream_is_an_error() {
        let mut buf = Vec::new();
        write_digits(&mut buf, vec![1u32, 2, 3]).unwrap();
        buf.pop();
        assert!(read_digits(&buf[..]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(digits in proptest::collection::vec(any::<u32>(), 0..200)) {
            let mut buf = Vec::new();
            write_digits(&mut buf, digits.clone()).unwrap();
            prop_assert_eq!(read_digits(&buf[..]).unwrap().into_vec(), digits);
        }
    }
}
