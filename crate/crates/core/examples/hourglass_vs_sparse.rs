//! An hourglass autoencoder against a sparse overcomplete one of similar
//! reconstruction error.
//!
//! cargo run --release --example hourglass_vs_sparse -- [epochs] [lambda]

use std::env;
use std::path::Path;

use slc::data::load_idx;
use slc::eval::evaluate;
use slc::train::{train, TrainConfig};
use slc::{NetworkSpec, SelectorKind};

fn main() -> slc::Result<()> {
    let args: Vec<String> = env::args().collect();
    let epochs = args.get(1).map_or(Ok(30), |s| s.parse()).expect("epochs");
    let lambda = args.get(2).map_or(Ok(0.1), |s| s.parse()).expect("lambda");
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let data = load_idx(&dir.join("mnist5k-images-idx3-ubyte.gz"), None)?.head(1000);
    let config = TrainConfig {
        epochs,
        batch_size: 128,
        shuffle_seed: 1,
        ..TrainConfig::default()
    };

    for (name, m, l, lam) in [("hourglass", 0.5, 0.25, 0.0), ("sparse", 1.0, 2.0, lambda)] {
        let spec = NetworkSpec::from_ratios(data.dim(), m, l, lam, SelectorKind::Identity, 7)?;
        let (params, _) = train(&data, &spec, &config)?;
        let report = evaluate(&data, &params, &spec, 1e-5)?;
        let mse = report.rows.iter().map(|r| r.error * r.error).sum::<f64>() / report.rows.len() as f64;
        println!(
            "{name:<10} latent {:>5}  mse {mse:>7.3}  mean l0 {:>6.1}  mean ratio {:>6.1}  fixed ratio {:.1}",
            spec.latent_dim,
            report.l0.mean,
            report.ratio.mean,
            spec.n as f64 / spec.latent_dim as f64
        );
    }
    Ok(())
}
