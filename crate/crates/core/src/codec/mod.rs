//! From dense latent vectors to `SLC1` byte blobs and back.
//!
//! Compression runs `encode → threshold (in the selector's domain) → delta
//! indices → range coding`, alongside binary16 quantisation of the surviving
//! weights. Decompression inverts each stage and runs the decoder network.

mod arith;
mod container;
mod delta;
mod model;
mod quant;

pub use arith::{ac_decode, ac_encode};
pub use container::{CompressedBlob, BLOB_MAGIC, BLOB_VERSION};
pub use delta::{delta_decode, delta_encode};
pub use model::{build_model, distance_mass, terminator_mass, SymbolModel, FREQ_BITS, FREQ_TOTAL};
pub use quant::{dequantize_weights, quantize, quantize_weights};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{decode, encode, ModelParams, NetworkSpec};
use crate::objective::{Selector, SelectorKind};

/// Magnitudes at or below this are treated as zero.
pub const DEFAULT_TAU: f64 = 1e-5;
pub const DEFAULT_SIGMA2: f64 = 1e3;
pub const DEFAULT_C0: f64 = 1e-3;

/// The end-of-list symbol ι.
pub const TERMINATOR: u32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CodeDomain {
    /// Nonzeros of `z` itself.
    LatentZ,
    /// Nonzeros of the forward differences of `z`, plus `z₁` as an anchor.
    SelectorGradZ,
}

impl CodeDomain {
    pub fn code(self) -> u8 {
        match self {
            CodeDomain::LatentZ => 0,
            CodeDomain::SelectorGradZ => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CodeDomain::LatentZ),
            1 => Some(CodeDomain::SelectorGradZ),
            _ => None,
        }
    }

    pub fn for_selector(kind: SelectorKind) -> Self {
        match kind {
            SelectorKind::Identity => CodeDomain::LatentZ,
            SelectorKind::ForwardDifference => CodeDomain::SelectorGradZ,
        }
    }

    /// Number of index positions `L` for a latent of width `latent_dim`.
    pub fn support_len(self, latent_dim: usize) -> usize {
        match self {
            CodeDomain::LatentZ => latent_dim,
            CodeDomain::SelectorGradZ => latent_dim.saturating_sub(1),
        }
    }
}

/// Nonzero positions and values of a latent (or of its differences).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCode {
    pub latent_dim: usize,
    pub domain: CodeDomain,
    pub anchor: Option<f64>,
    pub indices: Vec<u32>,
    pub weights: Vec<f64>,
}

impl SparseCode {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn support_len(&self) -> usize {
        self.domain.support_len(self.latent_dim)
    }

    pub fn validate(&self) -> Result<()> {
        let support = self.support_len();
        if self.indices.len() != self.weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} indices but {} weights",
                self.indices.len(),
                self.weights.len()
            )));
        }
        if self.anchor.is_some() != (self.domain == CodeDomain::SelectorGradZ) {
            return Err(Error::InvalidArgument(
                "anchor must be present exactly for difference-domain codes".into(),
            ));
        }
        if self.domain == CodeDomain::SelectorGradZ && self.latent_dim < 2 {
            return Err(Error::Degenerate("difference domain needs latent_dim >= 2".into()));
        }
        for (k, w) in self.indices.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::InvalidArgument(format!(
                    "indices not strictly ascending at position {}",
                    k + 1
                )));
            }
        }
        if let Some(&last) = self.indices.last() {
            if last as usize >= support {
                return Err(Error::InvalidArgument(format!(
                    "index {last} outside support length {support}"
                )));
            }
        }
        if let Some(k) = self.weights.iter().position(|w| *w == 0.0 || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight {} at position {k} is zero or non-finite",
                self.weights[k]
            )));
        }
        Ok(())
    }

    /// The dense vector in the code's own domain (length `L`).
    pub fn densify(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.support_len()];
        for (&i, &w) in self.indices.iter().zip(&self.weights) {
            out[i as usize] = w;
        }
        out
    }
}

/// Keeps the entries of `z` with `|z_i| > tau`.
pub fn sparsify(z: &[f64], tau: f64) -> SparseCode {
    let (indices, weights) = z
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tau)
        .map(|(i, &v)| (i as u32, v))
        .unzip();
    SparseCode {
        latent_dim: z.len(),
        domain: CodeDomain::LatentZ,
        anchor: None,
        indices,
        weights,
    }
}

/// Stores `z₁` plus the thresholded unit-step forward differences of `z`.
pub fn selector_encode(z: &[f64], tau: f64) -> Result<SparseCode> {
    let diffs = Selector::new(SelectorKind::ForwardDifference).apply(z)?;
    let mut code = sparsify(&diffs, tau);
    code.latent_dim = z.len();
    code.domain = CodeDomain::SelectorGradZ;
    code.anchor = Some(z[0]);
    Ok(code)
}

/// Rebuilds `z` from a difference-domain code by prefix sums.
pub fn selector_decode(code: &SparseCode) -> Result<Vec<f64>> {
    let anchor = match (code.domain, code.anchor) {
        (CodeDomain::SelectorGradZ, Some(a)) => a,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "expected a difference-domain code, got {:?}",
                code.domain
            )))
        }
    };
    let diffs = code.densify();
    let mut z = Vec::with_capacity(code.latent_dim);
    let mut acc = anchor;
    z.push(acc);
    for d in diffs {
        acc += d;
        z.push(acc);
    }
    Ok(z)
}

/// Dense latent `z` for a code in either domain.
pub fn latent_from_code(code: &SparseCode) -> Result<Vec<f64>> {
    match code.domain {
        CodeDomain::LatentZ => Ok(code.densify()),
        CodeDomain::SelectorGradZ => selector_decode(code),
    }
}

/// `n / nnz`, infinite when nothing survives.
pub fn compression_ratio(n: usize, nnz: usize) -> f64 {
    if nnz == 0 {
        f64::INFINITY
    } else {
        n as f64 / nnz as f64
    }
}

/// Integer display of [`compression_ratio`]: `"120:1"`, or `"n:0"`.
pub fn format_ratio(n: usize, nnz: usize) -> String {
    match n.checked_div(nnz) {
        Some(r) => format!("{r}:1"),
        None => format!("{n}:0"),
    }
}

/// Blob size relative to storing each nonzero as a 64-bit index plus a
/// 16-bit weight.
pub fn bit_ratio(blob: &CompressedBlob) -> f64 {
    blob.byte_len() as f64 / (blob.nnz() * (8 + 2)) as f64
}

/// Coded index stream size relative to 64-bit indices.
pub fn index_stream_ratio(blob: &CompressedBlob) -> f64 {
    blob.coded.len() as f64 / (blob.nnz() * 8) as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodecConfig {
    pub tau: f64,
    pub sigma2: f64,
    pub c0: f64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            tau: DEFAULT_TAU,
            sigma2: DEFAULT_SIGMA2,
            c0: DEFAULT_C0,
        }
    }
}

type ModelKey = (usize, u64, u64);

/// Compressor with a cache of symbol models keyed by `(L, σ², c0)`.
#[derive(Debug, Default)]
pub struct Codec {
    config: CodecConfig,
    models: Mutex<HashMap<ModelKey, Arc<SymbolModel>>>,
}

impl Codec {
    pub fn new(config: CodecConfig) -> Self {
        Codec {
            config,
            models: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_tau(tau: f64) -> Self {
        Codec::new(CodecConfig {
            tau,
            ..CodecConfig::default()
        })
    }

    pub fn config(&self) -> &CodecConfig {
        &self.config
    }

    pub fn model(&self, support: usize, sigma2: f64, c0: f64) -> Result<Arc<SymbolModel>> {
        let key = (support, sigma2.to_bits(), c0.to_bits());
        let mut cache = self.models.lock().expect("model cache poisoned");
        if let Some(m) = cache.get(&key) {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(build_model(support, sigma2, c0)?);
        cache.insert(key, Arc::clone(&m));
        Ok(m)
    }

    /// Thresholds a latent in the domain matching `selector`.
    pub fn sparse_code(&self, z: &[f64], selector: SelectorKind) -> Result<SparseCode> {
        match selector {
            SelectorKind::Identity => Ok(sparsify(z, self.config.tau)),
            SelectorKind::ForwardDifference => selector_encode(z, self.config.tau),
        }
    }

    /// Entropy-codes indices and quantises weights. Entries whose weight
    /// rounds to zero in binary16 are dropped.
    pub fn pack(&self, code: &SparseCode, n: usize, model_hash: u64) -> Result<CompressedBlob> {
        code.validate()?;
        let mut indices = Vec::with_capacity(code.nnz());
        let mut weights = Vec::with_capacity(code.nnz());
        for (&i, &w) in code.indices.iter().zip(&code.weights) {
            let q = quantize(w);
            if q & 0x7FFF != 0 {
                indices.push(i);
                weights.push(q);
            }
        }
        let support = code.support_len();
        let coded = if support == 0 {
            Vec::new()
        } else {
            let model = self.model(support, self.config.sigma2, self.config.c0)?;
            ac_encode(&delta_encode(&indices, support)?, &model)?
        };
        Ok(CompressedBlob {
            domain: code.domain,
            n: n as u32,
            latent_dim: code.latent_dim as u32,
            sigma2: self.config.sigma2,
            c0: self.config.c0,
            model_hash,
            anchor: code.anchor,
            coded,
            weights,
        })
    }

    /// Inverts [`Codec::pack`] using the blob's own model parameters.
    pub fn unpack(&self, blob: &CompressedBlob) -> Result<SparseCode> {
        let latent_dim = blob.latent_dim as usize;
        let support = blob.domain.support_len(latent_dim);
        let indices = if support == 0 {
            if !blob.coded.is_empty() || blob.nnz() != 0 {
                return Err(Error::CorruptStream("empty support with coded data".into()));
            }
            Vec::new()
        } else {
            let model = self.model(support, blob.sigma2, blob.c0).map_err(|e| match e {
                Error::InvalidArgument(msg) => Error::CorruptStream(msg),
                other => other,
            })?;
            delta_decode(&ac_decode(&blob.coded, &model)?, support)?
        };
        if indices.len() != blob.nnz() {
            return Err(Error::CorruptStream(format!(
                "{} coded indices but {} weights",
                indices.len(),
                blob.nnz()
            )));
        }
        let code = SparseCode {
            latent_dim,
            domain: blob.domain,
            anchor: blob.anchor,
            indices,
            weights: dequantize_weights(&blob.weights),
        };
        code.validate().map_err(|e| Error::CorruptStream(e.to_string()))?;
        Ok(code)
    }

    /// Compresses one sample.
    pub fn compress(&self, x: &[f64], params: &ModelParams, spec: &NetworkSpec) -> Result<CompressedBlob> {
        params.check_shapes(spec)?;
        let z = encode(&Matrix::column_vector(x), params)?;
        self.compress_latent(z.as_slice(), spec, params.content_hash())
    }

    /// Compresses the columns of an `n x b` batch, encoding them together.
    pub fn compress_batch(&self, x: &Matrix, params: &ModelParams, spec: &NetworkSpec) -> Result<Vec<CompressedBlob>> {
        params.check_shapes(spec)?;
        let z = encode(x, params)?;
        let hash = params.content_hash();
        (0..z.cols())
            .map(|j| self.compress_latent(&z.column(j), spec, hash))
            .collect()
    }

    fn compress_latent(&self, z: &[f64], spec: &NetworkSpec, model_hash: u64) -> Result<CompressedBlob> {
        let code = self.sparse_code(z, spec.selector)?;
        self.pack(&code, spec.n, model_hash)
    }

    /// Latent `ẑ` recovered from a blob after checking it belongs to `params`.
    pub fn decode_latent(&self, blob: &CompressedBlob, params: &ModelParams) -> Result<Vec<f64>> {
        self.decode_latent_with_hash(blob, params, params.content_hash())
    }

    fn decode_latent_with_hash(&self, blob: &CompressedBlob, params: &ModelParams, hash: u64) -> Result<Vec<f64>> {
        if blob.model_hash != hash {
            return Err(Error::ModelHashMismatch {
                blob: blob.model_hash,
                params: hash,
            });
        }
        if blob.n as usize != params.input_dim() || blob.latent_dim as usize != params.latent_dim() {
            return Err(Error::Dimension(format!(
                "blob is for n={}, latent={}; params have n={}, latent={}",
                blob.n,
                blob.latent_dim,
                params.input_dim(),
                params.latent_dim()
            )));
        }
        latent_from_code(&self.unpack(blob)?)
    }

    pub fn decompress(&self, blob: &CompressedBlob, params: &ModelParams) -> Result<Vec<f64>> {
        let z = self.decode_latent(blob, params)?;
        Ok(decode(&Matrix::column_vector(&z), params)?.into_vec())
    }

    /// Decompresses many blobs into the columns of an `n x b` matrix.
    pub fn decompress_batch(&self, blobs: &[CompressedBlob], params: &ModelParams) -> Result<Matrix> {
        let hash = params.content_hash();
        let latents = blobs
            .iter()
            .map(|b| self.decode_latent_with_hash(b, params, hash))
            .collect::<Result<Vec<_>>>()?;
        if latents.is_empty() {
            return Ok(Matrix::zeros(params.input_dim(), 0));
        }
        decode(&Matrix::from_columns(&latents)?, params)
    }
}

/// One-shot [`Codec::compress`] with default model parameters.
pub fn compress(x: &[f64], params: &ModelParams, spec: &NetworkSpec, tau: f64) -> Result<CompressedBlob> {
    Codec::with_tau(tau).compress(x, params, spec)
}

/// One-shot [`Codec::decompress`].
pub fn decompress(blob: &CompressedBlob, params: &ModelParams) -> Result<Vec<f64>> {
    Codec::default().decompress(blob, params)
}
