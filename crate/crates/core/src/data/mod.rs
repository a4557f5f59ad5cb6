//! Datasets and their on-disk forms.

mod idx;
mod params_io;
mod sas;

pub use idx::{
    load_idx, read_idx_images, read_idx_labels, write_idx_f64, write_idx_matrix, IDX_F64_IMAGES, IDX_U8_IMAGES,
    IDX_U8_LABELS,
};
pub use params_io::{load_params, read_params, save_params, write_params, PARAMS_MAGIC, PARAMS_VERSION};
pub use sas::{gen_sas, sas_image, PatternFamily, SasPatternParams, SasRanges};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `N` samples of dimension `n`, one per row, with entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Matrix,
    labels: Option<Vec<u8>>,
    /// Image height and width when the samples are images.
    shape: Option<(usize, usize)>,
    source: String,
}

impl Dataset {
    pub fn new(samples: Matrix, labels: Option<Vec<u8>>, source: impl Into<String>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != samples.rows() {
                return Err(Error::Dimension(format!(
                    "{} labels for {} samples",
                    l.len(),
                    samples.rows()
                )));
            }
        }
        if let Some(bad) = samples.as_slice().iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(format!(
                "sample value {} at flat index {bad} is outside [0, 1]",
                samples.as_slice()[bad]
            )));
        }
        Ok(Dataset {
            samples,
            labels,
            shape: None,
            source: source.into(),
        })
    }

    pub fn with_shape(mut self, rows: usize, cols: usize) -> Result<Self> {
        if rows * cols != self.dim() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} image shape for {}-dimensional samples",
                self.dim()
            )));
        }
        self.shape = Some((rows, cols));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample dimension `n`.
    pub fn dim(&self) -> usize {
        self.samples.cols()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        self.samples.row(i)
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn shape(&self) -> Option<(usize, usize)> {
        self.shape
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Gathers the given samples as the columns of an `n x indices.len()` batch.
    pub fn batch(&self, indices: &[usize]) -> Matrix {
        let (n, b) = (self.dim(), indices.len());
        let mut m = Matrix::zeros(n, b);
        let out = m.as_mut_slice();
        for (j, &i) in indices.iter().enumerate() {
            for (r, &v) in self.samples.row(i).iter().enumerate() {
                out[r * b + j] = v;
            }
        }
        m
    }

    /// New dataset holding the given samples in order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let n = self.dim();
        let mut data = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            data.extend_from_slice(self.samples.row(i));
        }
        Dataset {
            samples: Matrix::from_vec(indices.len(), n, data).expect("sized above"),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
            shape: self.shape,
            source: self.source.clone(),
        }
    }

    /// The first `count` samples.
    pub fn head(&self, count: usize) -> Dataset {
        let idx: Vec<usize> = (0..count.min(self.len())).collect();
        self.subset(&idx)
    }

    /// Random split into `(train, test)` with `round(fraction * N)` training
    /// samples. Both halves keep the original relative order.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        let (train, test) = split_indices(self.len(), fraction, seed)?;
        Ok((self.subset(&train), self.subset(&test)))
    }
}

/// Index form of [`Dataset::split`].
pub fn split_indices(len: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "split fraction {fraction} outside [0, 1]"
        )));
    }
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (fraction * len as f64).round() as usize;
    let mut train = idx[..cut].to_vec();
    let mut test = idx[cut..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}
