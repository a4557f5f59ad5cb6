//! Delta + range coding of sparse index lists under the distance model.
//!
//! cargo run --release --example entropy_coding

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slc::codec::{ac_decode, ac_encode, build_model, delta_decode, delta_encode, DEFAULT_C0, DEFAULT_SIGMA2};

fn main() -> slc::Result<()> {
    let support = 8192;
    let model = build_model(support, DEFAULT_SIGMA2, DEFAULT_C0)?;
    println!(
        "alphabet {} symbols, model entropy {:.3} bits/symbol",
        model.alphabet_size(),
        model.entropy_bits()
    );
    for s in [0u32, 1, 10, 40, 100, 1000] {
        println!("  p({s:>4}) = {:.3e}", model.probability(s));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for nnz in [0usize, 10, 60, 400] {
        // nonzeros clustered the way a trained latent tends to be
        let mut indices: Vec<u32> = Vec::new();
        let mut at = rng.random_range(0..200u32);
        while indices.len() < nnz && (at as usize) < support {
            indices.push(at);
            at += rng.random_range(1..60);
        }
        let symbols = delta_encode(&indices, support)?;
        let bytes = ac_encode(&symbols, &model)?;
        assert_eq!(delta_decode(&ac_decode(&bytes, &model)?, support)?, indices);
        println!(
            "{:>3} indices: {:>4} bytes coded, {:>6.1} bits information, {:>4} bytes as u64",
            indices.len(),
            bytes.len(),
            model.information_bits(&symbols),
            8 * indices.len()
        );
    }
    Ok(())
}
