//! Compress synthetic scattering images to SLC1 blobs and back.
//!
//! cargo run --release --example compress_roundtrip

use slc::codec::{compression_ratio, format_ratio, Codec, CompressedBlob};
use slc::data::gen_sas;
use slc::eval::recon_error;
use slc::train::{train, TrainConfig};
use slc::{NetworkSpec, SelectorKind};

fn main() -> slc::Result<()> {
    let side = 16;
    let data = gen_sas(600, side, 4)?;
    let (train_set, test_set) = data.split(0.8, 0)?;
    let spec = NetworkSpec::from_ratios(side * side, 1.0, 2.0, 0.003, SelectorKind::ForwardDifference, 1)?;
    let config = TrainConfig {
        epochs: 150,
        batch_size: 64,
        shuffle_seed: 2,
        ..TrainConfig::default()
    };
    println!("training {} images of {side}x{side} ...", train_set.len());
    let (params, _) = train(&train_set, &spec, &config)?;

    let codec = Codec::default();
    for i in 0..5 {
        let x = test_set.sample(i);
        let blob = codec.compress(x, &params, &spec)?;
        let bytes = blob.to_bytes();
        let back = CompressedBlob::from_bytes(&bytes)?;
        let x_hat = codec.decompress(&back, &params)?;
        println!(
            "test image {i}: {} nonzeros, ratio {} ({:.1}), {} bytes vs {} raw, error {:.3e}",
            blob.nnz(),
            format_ratio(spec.n, blob.nnz()),
            compression_ratio(spec.n, blob.nnz()),
            bytes.len(),
            8 * spec.n,
            recon_error(x, &x_hat)?
        );
    }
    Ok(())
}
