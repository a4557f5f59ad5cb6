//! Identity vs forward-difference selectors on a piecewise-constant latent.
//!
//! cargo run --release --example selectors

use slc::codec::{selector_decode, selector_encode, sparsify, Codec};
use slc::{l0_count, l1_norm, Selector, SelectorKind};

fn main() -> slc::Result<()> {
    let z: Vec<f64> = (0..256)
        .map(|i| match i {
            0..=79 => 0.0,
            80..=159 => 1.5,
            160..=199 => 0.25,
            _ => 0.0,
        })
        .collect();

    for kind in [SelectorKind::Identity, SelectorKind::ForwardDifference] {
        let fz = Selector::new(kind).apply(&z)?;
        println!(
            "{kind:?}: ||f(z)||_1 = {:.2}, l0 = {}",
            l1_norm(&fz),
            l0_count(&fz, 1e-5)
        );
    }

    let codec = Codec::with_tau(1e-5);
    let plain = codec.pack(&sparsify(&z, 1e-5), z.len(), 0)?;
    let diff = selector_encode(&z, 1e-5)?;
    let packed = codec.pack(&diff, z.len(), 0)?;
    println!(
        "blob with z:        {} bytes ({} entries)",
        plain.byte_len(),
        plain.nnz()
    );
    println!(
        "blob with diff(z):  {} bytes ({} entries)",
        packed.byte_len(),
        packed.nnz()
    );
    assert_eq!(selector_decode(&codec.unpack(&packed)?)?, z);
    Ok(())
}
