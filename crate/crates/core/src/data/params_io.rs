//! `SLCP` parameter files.
//!
//! Little-endian layout:
//!
//! | field | type |
//! |---|---|
//! | magic `"SLCP"` | 4 bytes |
//! | version (= 1) | u32 |
//! | n, m_hidden, latent_dim | 3 × u32 |
//! | lambda | f64 |
//! | selector (0 identity, 1 forward difference) | u8 |
//! | reserved (zero) | 3 bytes |
//! | seed | u64 |
//! | for each of the 4 layers: rows u32, cols u32, rows·cols × f64 weights, bias length u32, bias × f64 | |
//! | XXH3-64 of every preceding byte | u64 |

use std::fs;
use std::io::Write;
use std::path::Path;

use xxhash_rust::xxh3::xxh3_64;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{Dense, ModelParams, NetworkSpec};
use crate::objective::SelectorKind;

pub const PARAMS_MAGIC: &[u8; 4] = b"SLCP";
pub const PARAMS_VERSION: u32 = 1;

pub fn write_params<W: Write>(params: &ModelParams, spec: &NetworkSpec, mut w: W) -> Result<()> {
    params.check_shapes(spec)?;
    let mut buf = Vec::with_capacity(48 + 8 * spec.parameter_count() + 40);
    buf.extend_from_slice(PARAMS_MAGIC);
    buf.extend_from_slice(&PARAMS_VERSION.to_le_bytes());
    for d in [spec.n, spec.m_hidden, spec.latent_dim] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    buf.extend_from_slice(&spec.lambda.to_le_bytes());
    buf.push(spec.selector.code());
    buf.extend_from_slice(&[0; 3]);
    buf.extend_from_slice(&spec.seed.to_le_bytes());
    for layer in &params.layers {
        buf.extend_from_slice(&(layer.out_dim() as u32).to_le_bytes());
        buf.extend_from_slice(&(layer.in_dim() as u32).to_le_bytes());
        for v in layer.weight.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&(layer.bias.len() as u32).to_le_bytes());
        for v in &layer.bias {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let hash = xxh3_64(&buf);
    buf.extend_from_slice(&hash.to_le_bytes());
    w.write_all(&buf)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(Error::Truncated {
                expected: self.pos.saturating_add(len),
                actual: self.bytes.len(),
            })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let raw = self.take(count.checked_mul(8).ok_or(Error::Format {
            offset: self.pos,
            msg: "array length overflows".into(),
        })?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn read_params(bytes: &[u8]) -> Result<(ModelParams, NetworkSpec)> {
    if bytes.len() < 8 {
        return Err(Error::Truncated {
            expected: 8,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != PARAMS_MAGIC {
        return Err(Error::Format {
            offset: 0,
            msg: "missing SLCP magic".into(),
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != PARAMS_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    const HEADER: usize = 4 + 4 + 12 + 8 + 4 + 8;
    if bytes.len() < HEADER + 8 {
        return Err(Error::Truncated {
            expected: HEADER + 8,
            actual: bytes.len(),
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
    let computed = xxh3_64(body);
    if stored != computed {
        return Err(Error::Corruption { stored, computed });
    }

    let mut r = Reader { bytes: body, pos: 8 };
    let n = r.u32()? as usize;
    let m_hidden = r.u32()? as usize;
    let latent_dim = r.u32()? as usize;
    let lambda = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
    let sel_offset = r.pos;
    let selector_code = r.take(4)?[0];
    let selector = SelectorKind::from_code(selector_code).ok_or(Error::Format {
        offset: sel_offset,
        msg: format!("unknown selector code {selector_code}"),
    })?;
    let seed = r.u64()?;
    let spec = NetworkSpec {
        n,
        m_hidden,
        latent_dim,
        lambda,
        selector,
        seed,
    };
    spec.validate()?;

    let mut layers = Vec::with_capacity(4);
    for _ in 0..4 {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let weight = Matrix::from_vec(rows, cols, r.f64s(rows * cols)?)?;
        let bias_len = r.u32()? as usize;
        let bias = r.f64s(bias_len)?;
        layers.push(Dense { weight, bias });
    }
    if r.pos != body.len() {
        return Err(Error::Format {
            offset: r.pos,
            msg: format!("{} unexpected bytes before the hash", body.len() - r.pos),
        });
    }
    let params = ModelParams {
        layers: layers.try_into().expect("four layers"),
    };
    params.check_shapes(&spec)?;
    Ok((params, spec))
}

pub fn save_params(params: &ModelParams, spec: &NetworkSpec, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_params(params, spec, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<(ModelParams, NetworkSpec)> {
    read_params(&fs::read(path)?)
}
