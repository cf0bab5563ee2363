//! Q-Cantor series expansions, explicit normal-number block constructions,
//! and exact discrepancy bounds.
//!
//! All arithmetic on values, weights and bounds is exact (`BigRational`).
//! Digits are `u32`; lengths and counts that can exceed machine words are
//! `BigUint`.

pub mod blocks;
pub mod cantor;
pub mod constructions;
pub mod discrepancy;
pub mod error;
pub mod exact;
pub mod limits;
pub mod verify;
pub mod weightings;

pub use error::{Error, Result};
pub use limits::Limits;
