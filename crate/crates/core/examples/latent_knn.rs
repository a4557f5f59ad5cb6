//! Cosine KNN in pixel space and in a trained latent space.
//!
//! cargo run --release --example latent_knn -- [epochs]

use std::env;
use std::path::Path;

use slc::data::load_idx;
use slc::knn::{knn_benchmark, Representation};
use slc::train::{train, TrainConfig};
use slc::{NetworkSpec, SelectorKind};

fn main() -> slc::Result<()> {
    let epochs = env::args().nth(1).map_or(Ok(10), |s| s.parse()).expect("epochs");
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let data = load_idx(
        &dir.join("mnist5k-images-idx3-ubyte.gz"),
        Some(&dir.join("mnist5k-labels-idx1-ubyte.gz")),
    )?
    .head(2000);

    let spec = NetworkSpec::from_ratios(data.dim(), 1.0, 1.0, 0.1, SelectorKind::Identity, 7)?;
    let config = TrainConfig {
        epochs,
        batch_size: 128,
        shuffle_seed: 1,
        ..TrainConfig::default()
    };
    let (params, _) = train(&data, &spec, &config)?;

    let reps = [
        ("pixels".to_string(), Representation::Pixels),
        (
            format!("latent ({} wide)", spec.latent_dim),
            Representation::Latent(&params),
        ),
    ];
    let table = knn_benchmark(&data, &reps, 0.2, 3, 5, 11)?;
    print!("{table}");
    Ok(())
}
