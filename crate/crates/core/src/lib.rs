//! Sparse overcomplete autoencoders for lossy compression of scientific
//! image data.
//!
//! An encoder maps each sample into a latent space wider than the data; an L1
//! penalty on a structure selector of that latent drives most entries to zero.
//! The surviving entries are stored as delta-coded indices under an integer
//! arithmetic coder plus binary16 weights.
//!
//! Module map:
//!
//! - [`network`]: the five-layer autoencoder and its exact gradients
//! - [`objective`]: selectors and L1/L0 functionals
//! - [`train`]: Adam mini-batch training
//! - [`codec`]: sparse codes, entropy coding, the `SLC1` container
//! - [`data`]: IDX loading, the synthetic scattering generator, `SLCP` params files
//! - [`eval`] and [`knn`]: reports, histograms and latent-space classification

pub mod codec;
pub mod data;
pub mod error;
pub mod eval;
pub mod knn;
pub mod matrix;
pub mod network;
pub mod objective;
pub mod train;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use network::{decode, encode, forward_backward, init_params, ModelParams, NetworkSpec};
pub use objective::{l0_count, l1_norm, Selector, SelectorKind};
