//! IDX files (the MNIST distribution format), optionally gzip-compressed.
//!
//! All header integers are big-endian. Two image encodings are read:
//! unsigned bytes (`0x00000803`, scaled by 1/255) and big-endian doubles
//! (`0x00000E03`, stored as-is and required to be finite). Labels are
//! unsigned bytes under `0x00000801`. Datasets additionally require pixel
//! values in `[0, 1]`; decoder outputs written with [`write_idx_matrix`] may
//! fall outside that range.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const IDX_U8_IMAGES: u32 = 0x0000_0803;
pub const IDX_F64_IMAGES: u32 = 0x0000_0E03;
pub const IDX_U8_LABELS: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn need(bytes: &[u8], expected: usize) -> Result<()> {
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    Ok(())
}

fn be_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_be_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

fn magic(bytes: &[u8]) -> Result<u32> {
    need(bytes, 4)?;
    Ok(be_u32(bytes, 0))
}

/// Parses an image file into `(samples, rows, cols)`.
pub fn read_idx_images(bytes: &[u8]) -> Result<(Matrix, usize, usize)> {
    let magic = magic(bytes)?;
    let width = match magic {
        IDX_U8_IMAGES => 1,
        IDX_F64_IMAGES => 8,
        other => {
            return Err(Error::Format {
                offset: 0,
                msg: format!("bad image magic {other:#010x}"),
            })
        }
    };
    need(bytes, 16)?;
    let count = be_u32(bytes, 4) as usize;
    let rows = be_u32(bytes, 8) as usize;
    let cols = be_u32(bytes, 12) as usize;
    let n = rows * cols;
    let expected = 16 + count * n * width;
    if bytes.len() != expected {
        if bytes.len() < expected {
            return Err(Error::Truncated {
                expected,
                actual: bytes.len(),
            });
        }
        return Err(Error::Format {
            offset: expected,
            msg: format!("{} trailing bytes after image data", bytes.len() - expected),
        });
    }
    let body = &bytes[16..];
    let data: Vec<f64> = if width == 1 {
        body.iter().map(|&p| p as f64 / 255.0).collect()
    } else {
        let mut out = Vec::with_capacity(count * n);
        for (k, chunk) in body.chunks_exact(8).enumerate() {
            let v = f64::from_be_bytes(chunk.try_into().expect("8 bytes"));
            if !v.is_finite() {
                return Err(Error::Format {
                    offset: 16 + 8 * k,
                    msg: format!("non-finite pixel value {v}"),
                });
            }
            out.push(v);
        }
        out
    };
    Ok((Matrix::from_vec(count, n, data)?, rows, cols))
}

pub fn read_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = magic(bytes)?;
    if magic != IDX_U8_LABELS {
        return Err(Error::Format {
            offset: 0,
            msg: format!("bad label magic {magic:#010x}"),
        });
    }
    need(bytes, 8)?;
    let count = be_u32(bytes, 4) as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    let labels = bytes[8..expected].to_vec();
    if let Some(k) = labels.iter().position(|&l| l >= 10) {
        return Err(Error::Format {
            offset: 8 + k,
            msg: format!("label {} outside 0..10", labels[k]),
        });
    }
    Ok(labels)
}

/// Loads an image file and optional label file (plain or gzip).
pub fn load_idx(images: &Path, labels: Option<&Path>) -> Result<Dataset> {
    let (samples, rows, cols) = read_idx_images(&read_file(images)?)?;
    let labels = match labels {
        Some(p) => {
            let l = read_idx_labels(&read_file(p)?)?;
            if l.len() != samples.rows() {
                return Err(Error::Format {
                    offset: 4,
                    msg: format!("{} labels for {} images", l.len(), samples.rows()),
                });
            }
            Some(l)
        }
        None => None,
    };
    let dataset = Dataset::new(samples, labels, images.display().to_string()).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::Format { offset: 16, msg },
        other => other,
    })?;
    dataset.with_shape(rows, cols)
}

/// Writes samples as a big-endian `f64` IDX image file. Samples without an
/// image shape are written as `1 x n` images.
pub fn write_idx_f64<W: Write>(dataset: &Dataset, w: W) -> Result<()> {
    let (rows, cols) = dataset.shape().unwrap_or((1, dataset.dim()));
    write_idx_matrix(dataset.samples(), rows, cols, w)
}

/// Writes the rows of `samples` as `rows x cols` big-endian `f64` images.
pub fn write_idx_matrix<W: Write>(samples: &Matrix, rows: usize, cols: usize, mut w: W) -> Result<()> {
    if rows * cols != samples.cols() {
        return Err(Error::Dimension(format!(
            "{rows}x{cols} images for {}-dimensional samples",
            samples.cols()
        )));
    }
    if !samples.is_finite() {
        return Err(Error::InvalidArgument("non-finite sample value".into()));
    }
    let mut buf = Vec::with_capacity(16 + 8 * samples.as_slice().len());
    buf.extend_from_slice(&IDX_F64_IMAGES.to_be_bytes());
    buf.extend_from_slice(&(samples.rows() as u32).to_be_bytes());
    buf.extend_from_slice(&(rows as u32).to_be_bytes());
    buf.extend_from_slice(&(cols as u32).to_be_bytes());
    for v in samples.as_slice() {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}
