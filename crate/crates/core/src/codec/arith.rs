//! Integer range coder over a [`SymbolModel`].
//!
//! 32-bit range, 33-bit low with byte-wise carry propagation (a pending byte
//! plus a run of `0xFF` bytes, as in the LZMA coder). The always-zero leading
//! byte of that scheme is not written, so a stream is exactly
//! `renormalisation bytes + 4` long and the decoder consumes every byte.

use super::model::{SymbolModel, FREQ_BITS};
use super::TERMINATOR;
use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;

struct Encoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    first: bool,
    out: Vec<u8>,
}

impl Encoder {
    fn new() -> Self {
        Encoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            first: true,
            out: Vec::new(),
        }
    }

    fn emit(&mut self, byte: u8) {
        if self.first {
            debug_assert_eq!(byte, 0);
            self.first = false;
        } else {
            self.out.push(byte);
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut pending = self.cache;
            loop {
                self.emit(pending.wrapping_add(carry));
                pending = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn encode(&mut self, cum: u32, freq: u32) {
        let r = self.range >> FREQ_BITS;
        self.low += r as u64 * cum as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

/// Encodes `symbols` (which should end with [`TERMINATOR`]).
pub fn ac_encode(symbols: &[u32], model: &SymbolModel) -> Result<Vec<u8>> {
    let mut enc = Encoder::new();
    for (k, &s) in symbols.iter().enumerate() {
        if !model.contains(s) {
            return Err(Error::InvalidArgument(format!(
                "symbol {s} at position {k} outside alphabet of {}",
                model.alphabet_size()
            )));
        }
        enc.encode(model.cum_freq(s), model.freq(s));
    }
    Ok(enc.finish())
}

struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
}

impl<'a> Decoder<'a> {
    fn new(bytes: &'a [u8]) -> Result<Self> {
        let mut d = Decoder {
            bytes,
            pos: 0,
            code: 0,
            range: u32::MAX,
        };
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next()? as u32;
        }
        Ok(d)
    }

    fn next(&mut self) -> Result<u8> {
        let b = *self.bytes.get(self.pos).ok_or_else(|| {
            Error::CorruptStream(format!(
                "coded stream ended after {} bytes before the terminator",
                self.bytes.len()
            ))
        })?;
        self.pos += 1;
        Ok(b)
    }

    fn decode(&mut self, model: &SymbolModel) -> Result<u32> {
        let r = self.range >> FREQ_BITS;
        let target = self.code / r;
        if target >= 1 << FREQ_BITS {
            return Err(Error::CorruptStream(format!(
                "code value out of range at byte {}",
                self.pos
            )));
        }
        let s = model.symbol_for(target);
        self.code -= r * model.cum_freq(s);
        self.range = r * model.freq(s);
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next()? as u32;
        }
        Ok(s)
    }
}

/// Decodes up to and including the first [`TERMINATOR`]. The stream must be
/// consumed exactly.
pub fn ac_decode(bytes: &[u8], model: &SymbolModel) -> Result<Vec<u32>> {
    let mut dec = Decoder::new(bytes)?;
    let mut out = Vec::new();
    loop {
        let s = dec.decode(model)?;
        out.push(s);
        if s == TERMINATOR {
            break;
        }
    }
    if dec.pos != bytes.len() {
        return Err(Error::CorruptStream(format!(
            "{} bytes left after the terminator",
            bytes.len() - dec.pos
        )));
    }
    Ok(out)
}
