//! Index lists as distance symbols.
//!
//! Ascending indices `i₁ < … < i_k` in `[0, L)` become
//! `i₁ + 1, i₂ - i₁, …, i_k - i_{k-1}, ι`: the first distance is measured from
//! a virtual index `-1`, so every distance lies in `1..=L` and one model covers
//! the whole list.

use super::TERMINATOR;
use crate::error::{Error, Result};

pub fn delta_encode(indices: &[u32], support_len: usize) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(indices.len() + 1);
    let mut prev: i64 = -1;
    for (k, &i) in indices.iter().enumerate() {
        let i = i as i64;
        if i <= prev || i as usize >= support_len {
            return Err(Error::InvalidArgument(format!(
                "index {i} at position {k} is not strictly ascending within [0, {support_len})"
            )));
        }
        out.push((i - prev) as u32);
        prev = i;
    }
    out.push(TERMINATOR);
    Ok(out)
}

pub fn delta_decode(symbols: &[u32], support_len: usize) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    let mut prev: i64 = -1;
    for (k, &s) in symbols.iter().enumerate() {
        if s == TERMINATOR {
            if k + 1 != symbols.len() {
                return Err(Error::CorruptStream(format!(
                    "{} symbols after the terminator",
                    symbols.len() - k - 1
                )));
            }
            return Ok(out);
        }
        let i = prev + s as i64;
        if i as usize >= support_len {
            return Err(Error::CorruptStream(format!(
                "cumulative index {i} reaches past support length {support_len}"
            )));
        }
        out.push(i as u32);
        prev = i;
    }
    Err(Error::CorruptStream("symbol stream has no terminator".into()))
}
