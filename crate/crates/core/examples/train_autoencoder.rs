//! Train a sparse overcomplete autoencoder on the bundled MNIST subset.
//!
//! cargo run --release --example train_autoencoder -- [epochs] [samples] [out.slcp]

use std::env;
use std::path::{Path, PathBuf};

use slc::data::{load_idx, save_params};
use slc::train::{mean_l0, train_with_observer, TrainConfig};
use slc::{NetworkSpec, SelectorKind};

fn main() -> slc::Result<()> {
    let args: Vec<String> = env::args().collect();
    let epochs = args.get(1).map_or(Ok(20), |s| s.parse()).expect("epochs");
    let samples = args.get(2).map_or(Ok(1000), |s| s.parse()).expect("samples");
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let data = load_idx(&dir.join("mnist5k-images-idx3-ubyte.gz"), None)?.head(samples);

    // (m/n, ℓ/n, λ, f) = (1, 2, 0.1, z)
    let spec = NetworkSpec::from_ratios(data.dim(), 1.0, 2.0, 0.1, SelectorKind::Identity, 7)?;
    println!(
        "{} parameters, latent width {}",
        spec.parameter_count(),
        spec.latent_dim
    );
    let config = TrainConfig {
        epochs,
        batch_size: 128,
        shuffle_seed: 3,
        ..TrainConfig::default()
    };
    let (params, history) = train_with_observer(&data, &spec, &config, |r| {
        println!(
            "epoch {:>3}  recon {:>8.4}  l1 {:>8.4}  l0 {:>7.1}  {:.1}s",
            r.epoch, r.reconstruction, r.l1, r.l0, r.seconds
        );
    })?;
    let l0 = mean_l0(&data, &params, &spec, config.tau)?;
    println!(
        "final: recon {:.4}, mean l0 {l0:.1} of {} -> {:.1}:1",
        history.last().expect("epochs > 0").reconstruction,
        spec.latent_dim,
        spec.n as f64 / l0
    );
    if let Some(out) = args.get(3) {
        save_params(&params, &spec, &PathBuf::from(out))?;
        println!("saved {out}");
    }
    Ok(())
}
