//! Helpers shared by the integration tests: a scalar-loop reference model and
//! a central-difference gradient checker built on it.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slc::data::{load_idx, Dataset};
use slc::{forward_backward, init_params, Matrix, ModelParams, NetworkSpec, SelectorKind};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn mnist5k() -> Dataset {
    let dir = data_dir();
    load_idx(
        &dir.join("mnist5k-images-idx3-ubyte.gz"),
        Some(&dir.join("mnist5k-labels-idx1-ubyte.gz")),
    )
    .expect("bundled MNIST subset")
}

fn dense(w: &Matrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    (0..w.rows())
        .map(|i| b[i] + (0..w.cols()).map(|j| w.get(i, j) * x[j]).sum::<f64>())
        .collect()
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&a| if a > 0.0 { a } else { 0.0 }).collect()
}

fn select(z: &[f64], kind: SelectorKind) -> Vec<f64> {
    match kind {
        SelectorKind::Identity => z.to_vec(),
        SelectorKind::ForwardDifference => (1..z.len()).map(|i| z[i] - z[i - 1]).collect(),
    }
}

/// Pre-activations of the three relu layers and `f(z)` for one sample.
pub struct Trace {
    pub pre: Vec<f64>,
    pub fz: Vec<f64>,
    pub loss: f64,
}

pub fn reference_trace(x: &[f64], p: &ModelParams, kind: SelectorKind, lambda: f64) -> Trace {
    let [l1, l2, l3, l4] = &p.layers;
    let a1 = dense(&l1.weight, &l1.bias, x);
    let h1 = relu(&a1);
    let a2 = dense(&l2.weight, &l2.bias, &h1);
    let z = relu(&a2);
    let a3 = dense(&l3.weight, &l3.bias, &z);
    let h3 = relu(&a3);
    let out = dense(&l4.weight, &l4.bias, &h3);
    let fz = select(&z, kind);
    let recon: f64 = out.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    let l1n: f64 = fz.iter().map(|v| v.abs()).sum();
    Trace {
        pre: [a1, a2, a3].concat(),
        fz,
        loss: recon + lambda * l1n,
    }
}

/// Mean loss over the columns of `x`.
pub fn reference_loss(x: &Matrix, p: &ModelParams, kind: SelectorKind, lambda: f64) -> f64 {
    let b = x.cols();
    (0..b)
        .map(|j| reference_trace(&x.column(j), p, kind, lambda).loss)
        .sum::<f64>()
        / b as f64
}

const KINK_MARGIN: f64 = 1e-3;
pub const FD_STEP: f64 = 1e-6;
/// Gradient magnitudes below this are compared absolutely.
pub const REL_FLOOR: f64 = 1e-4;

fn near_kink(x: &Matrix, p: &ModelParams, kind: SelectorKind) -> bool {
    (0..x.cols()).any(|j| {
        let t = reference_trace(&x.column(j), p, kind, 0.0);
        t.pre.iter().any(|a| a.abs() < KINK_MARGIN) || t.fz.iter().any(|v| *v != 0.0 && v.abs() < KINK_MARGIN)
    })
}

pub struct GradCheck {
    pub spec: NetworkSpec,
    pub parameters: usize,
    pub max_rel_err: f64,
}

/// Random small net and batch; `None` when the sample sits near a kink.
pub fn gradient_check(seed: u64) -> Option<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=8);
    let m = rng.random_range(1..=12);
    let l = rng.random_range(2..=16);
    let kind = if seed.is_multiple_of(2) {
        SelectorKind::Identity
    } else {
        SelectorKind::ForwardDifference
    };
    let lambda = [0.0, 1.0, 10.0][(seed / 2 % 3) as usize];
    let spec = NetworkSpec {
        n,
        m_hidden: m,
        latent_dim: l,
        lambda,
        selector: kind,
        seed,
    };
    let mut params = init_params(&spec).unwrap();
    for layer in params.layers.iter_mut() {
        for b in layer.bias.iter_mut() {
            *b = rng.random_range(0.05..0.3);
        }
    }
    let batch = rng.random_range(1..=4);
    let x = Matrix::from_vec(n, batch, (0..n * batch).map(|_| rng.random::<f64>()).collect()).unwrap();
    if near_kink(&x, &params, kind) {
        return None;
    }
    let analytic = forward_backward(&x, &params, &spec).unwrap();
    let ref_loss = reference_loss(&x, &params, kind, lambda);
    assert!((ref_loss - analytic.loss.total).abs() <= 1e-12 * ref_loss.abs().max(1.0));

    let mut max_rel: f64 = 0.0;
    let mut count = 0;
    for t in 0..8 {
        let len = params.tensors()[t].len();
        for k in 0..len {
            let orig = params.tensors()[t][k];
            params.tensors_mut()[t][k] = orig + FD_STEP;
            let up = reference_loss(&x, &params, kind, lambda);
            params.tensors_mut()[t][k] = orig - FD_STEP;
            let down = reference_loss(&x, &params, kind, lambda);
            params.tensors_mut()[t][k] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic.grads.tensors()[t][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            max_rel = max_rel.max(rel);
            count += 1;
        }
    }
    Some(GradCheck {
        spec,
        parameters: count,
        max_rel_err: max_rel,
    })
}

/// Runs seeds from `start` until `wanted` kink-free checks are collected.
pub fn gradient_checks(start: u64, wanted: usize) -> Vec<GradCheck> {
    let mut out = Vec::new();
    let mut seed = start;
    while out.len() < wanted {
        if let Some(c) = gradient_check(seed) {
            out.push(c);
        }
        seed += 1;
        assert!(seed - start < 100 * wanted as u64, "too many samples near kinks");
    }
    out
}

/// Random valid code in either domain with binary16-representable weights,
/// so pack/unpack must reproduce it exactly. Covers `nnz = 0` and `nnz = L`
/// with boosted probability.
pub fn random_sparse_code(rng: &mut ChaCha8Rng, max_support: usize) -> slc::codec::SparseCode {
    use slc::codec::{CodeDomain, SparseCode};
    let log_max = (max_support as f64).ln();
    let support = ((rng.random::<f64>() * log_max).exp() as usize).clamp(1, max_support);
    let domain = if rng.random::<bool>() {
        CodeDomain::LatentZ
    } else {
        CodeDomain::SelectorGradZ
    };
    let latent_dim = match domain {
        CodeDomain::LatentZ => support,
        CodeDomain::SelectorGradZ => support + 1,
    };
    let nnz = match rng.random_range(0..10) {
        0 => 0,
        1 => support,
        _ => rng.random_range(0..=support.min(400)),
    };
    let mut indices: Vec<u32> = rand::seq::index::sample(rng, support, nnz)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    indices.sort_unstable();
    let weights = (0..nnz)
        .map(|_| loop {
            let h = half::f16::from_bits(rng.random());
            if h.is_finite() && h.to_f64() != 0.0 {
                break h.to_f64();
            }
        })
        .collect();
    let anchor = match domain {
        CodeDomain::LatentZ => None,
        CodeDomain::SelectorGradZ => Some(rng.random_range(-10.0..10.0)),
    };
    SparseCode {
        latent_dim,
        domain,
        anchor,
        indices,
        weights,
    }
}

/// Packs, serialises, parses and unpacks `code` with a fresh codec.
pub fn roundtrip_code(code: &slc::codec::SparseCode) -> slc::codec::SparseCode {
    use slc::codec::{Codec, CompressedBlob};
    let codec = Codec::with_tau(0.0);
    let blob = codec.pack(code, 1, 0).expect("pack");
    let bytes = blob.to_bytes();
    let parsed = CompressedBlob::from_bytes(&bytes).expect("parse");
    assert_eq!(parsed.to_bytes(), bytes);
    codec.unpack(&parsed).expect("unpack")
}
