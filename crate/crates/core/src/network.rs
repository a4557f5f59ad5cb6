//! The symmetric five-layer fully connected autoencoder.
//!
//! Layout, for input dimension `n`, hidden width `m` and latent width `ℓ`:
//!
//! ```text
//! x (n) -> relu(W1 x + b1) (m) -> relu(W2 h + b2) = z (ℓ)
//! z (ℓ) -> relu(W3 z + b3) (m) -> W4 h + b4 = x̂ (n)
//! ```
//!
//! Batches are matrices with one sample per column. The training loss is the
//! per-sample mean of `‖x̂ - x‖² + λ‖f(z)‖₁`, where `f` is the configured
//! [`Selector`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{add_row_bias, gemm, matmul, relu, relu_backward, row_sums, Matrix, Op};
use crate::objective::{sign, Selector, SelectorKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetworkSpec {
    pub n: usize,
    pub m_hidden: usize,
    pub latent_dim: usize,
    pub lambda: f64,
    pub selector: SelectorKind,
    pub seed: u64,
}

impl NetworkSpec {
    /// Builds a spec from the `(m/n, ℓ/n, λ, f)` shorthand, rounding widths to
    /// the nearest integer (at least 1).
    pub fn from_ratios(
        n: usize,
        m_ratio: f64,
        latent_ratio: f64,
        lambda: f64,
        selector: SelectorKind,
        seed: u64,
    ) -> Result<Self> {
        let width = |r: f64| -> Result<usize> {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("width ratio {r} must be positive")));
            }
            Ok(((n as f64 * r).round() as usize).max(1))
        };
        let spec = NetworkSpec {
            n,
            m_hidden: width(m_ratio)?,
            latent_dim: width(latent_ratio)?,
            lambda,
            selector,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m_hidden == 0 || self.latent_dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "layer widths must be positive (n={}, m={}, l={})",
                self.n, self.m_hidden, self.latent_dim
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if self.selector == SelectorKind::ForwardDifference && self.latent_dim < 2 {
            return Err(Error::Degenerate(
                "forward-difference selector needs a latent width of at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn selector(&self) -> Selector {
        Selector::new(self.selector)
    }

    pub fn is_overcomplete(&self) -> bool {
        self.latent_dim > self.n
    }

    /// Total number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        let (n, m, l) = (self.n, self.m_hidden, self.latent_dim);
        2 * (m * n + l * m) + 2 * m + l + n
    }
}

/// One affine layer: `weight` is `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(out: usize, inp: usize) -> Self {
        Dense {
            weight: Matrix::zeros(out, inp),
            bias: vec![0.0; out],
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut y = matmul(&self.weight, Op::N, x, Op::N)?;
        add_row_bias(&mut y, &self.bias);
        Ok(y)
    }
}

/// Encoder layers `[W1, W2]` followed by decoder layers `[W3, W4]`.
///
/// Gradients use the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub layers: [Dense; 4],
}

impl ModelParams {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let (n, m, l) = (spec.n, spec.m_hidden, spec.latent_dim);
        ModelParams {
            layers: [
                Dense::zeros(m, n),
                Dense::zeros(l, m),
                Dense::zeros(m, l),
                Dense::zeros(n, m),
            ],
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            layers: self.layers.clone().map(|d| Dense::zeros(d.out_dim(), d.in_dim())),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.layers[0].out_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[1].out_dim()
    }

    /// Checks that layer shapes chain together and match `spec`.
    pub fn check_shapes(&self, spec: &NetworkSpec) -> Result<()> {
        let want = [
            (spec.m_hidden, spec.n),
            (spec.latent_dim, spec.m_hidden),
            (spec.m_hidden, spec.latent_dim),
            (spec.n, spec.m_hidden),
        ];
        for (i, (layer, &(o, inp))) in self.layers.iter().zip(&want).enumerate() {
            if layer.out_dim() != o || layer.in_dim() != inp || layer.bias.len() != o {
                return Err(Error::Dimension(format!(
                    "layer {} is {}x{} (bias {}), spec wants {o}x{inp}",
                    i + 1,
                    layer.out_dim(),
                    layer.in_dim(),
                    layer.bias.len()
                )));
            }
        }
        Ok(())
    }

    /// The eight parameter arrays in storage order `W1, b1, …, W4, b4`.
    pub fn tensors(&self) -> [&[f64]; 8] {
        let [l1, l2, l3, l4] = &self.layers;
        [
            l1.weight.as_slice(),
            &l1.bias,
            l2.weight.as_slice(),
            &l2.bias,
            l3.weight.as_slice(),
            &l3.bias,
            l4.weight.as_slice(),
            &l4.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 8] {
        let [l1, l2, l3, l4] = &mut self.layers;
        [
            l1.weight.as_mut_slice(),
            &mut l1.bias,
            l2.weight.as_mut_slice(),
            &mut l2.bias,
            l3.weight.as_mut_slice(),
            &mut l3.bias,
            l4.weight.as_mut_slice(),
            &mut l4.bias,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// 64-bit content hash over the layer shapes and little-endian values.
    pub fn content_hash(&self) -> u64 {
        let mut h = xxhash_rust::xxh3::Xxh3::new();
        for layer in &self.layers {
            h.update(&(layer.out_dim() as u64).to_le_bytes());
            h.update(&(layer.in_dim() as u64).to_le_bytes());
        }
        for t in self.tensors() {
            for v in t {
                h.update(&v.to_le_bytes());
            }
        }
        h.digest()
    }
}

/// Uniform fan-in initialisation on `±sqrt(6 / fan_in)`, zero biases.
///
/// Each layer draws from its own ChaCha8 stream keyed by `spec.seed`.
pub fn init_params(spec: &NetworkSpec) -> Result<ModelParams> {
    spec.validate()?;
    let mut params = ModelParams::zeros(spec);
    for (i, layer) in params.layers.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(i as u64);
        let bound = (6.0 / layer.in_dim() as f64).sqrt();
        for w in layer.weight.as_mut_slice() {
            *w = rng.random_range(-bound..bound);
        }
    }
    Ok(params)
}

fn check_rows(x: &Matrix, rows: usize, what: &str) -> Result<()> {
    if x.rows() != rows {
        return Err(Error::Dimension(format!(
            "{what} has {} rows, network expects {rows}",
            x.rows()
        )));
    }
    Ok(())
}

/// Encodes each column of `x` (`n x b`) to a latent column (`ℓ x b`).
pub fn encode(x: &Matrix, params: &ModelParams) -> Result<Matrix> {
    check_rows(x, params.input_dim(), "input")?;
    let h1 = relu(&params.layers[0].forward(x)?);
    Ok(relu(&params.layers[1].forward(&h1)?))
}

/// Decodes latent columns back to data space. The output layer is affine.
pub fn decode(z: &Matrix, params: &ModelParams) -> Result<Matrix> {
    check_rows(z, params.latent_dim(), "latent")?;
    let h3 = relu(&params.layers[2].forward(z)?);
    params.layers[3].forward(&h3)
}

pub fn reconstruct(x: &Matrix, params: &ModelParams) -> Result<Matrix> {
    decode(&encode(x, params)?, params)
}

/// Per-sample means of the loss terms over one batch.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossTerms {
    /// `reconstruction + λ · l1`.
    pub total: f64,
    /// Mean of `‖x̂ - x‖²`.
    pub reconstruction: f64,
    /// Mean of `‖f(z)‖₁` (without λ).
    pub l1: f64,
}

/// Result of one forward/backward pass.
#[derive(Clone, Debug)]
pub struct GradientPass {
    pub loss: LossTerms,
    pub grads: ModelParams,
    /// The batch latents `z`, kept so callers can track sparsity for free.
    pub latent: Matrix,
}

/// Loss and exact (sub)gradients of the generalized-lasso objective.
///
/// Uses `relu'(0) = 0` and `∂|x|/∂x (0) = 0`.
pub fn forward_backward(x: &Matrix, params: &ModelParams, spec: &NetworkSpec) -> Result<GradientPass> {
    forward_backward_with_lambda(x, params, spec, spec.lambda)
}

/// As [`forward_backward`] but with an explicit sparsity weight, which the
/// trainer uses for scheduled λ.
pub fn forward_backward_with_lambda(
    x: &Matrix,
    params: &ModelParams,
    spec: &NetworkSpec,
    lambda: f64,
) -> Result<GradientPass> {
    params.check_shapes(spec)?;
    check_rows(x, spec.n, "input")?;
    let b = x.cols();
    if b == 0 {
        return Err(Error::Degenerate("empty batch".into()));
    }
    let selector = spec.selector();
    let [l1, l2, l3, l4] = &params.layers;

    let a1 = l1.forward(x)?;
    let h1 = relu(&a1);
    let a2 = l2.forward(&h1)?;
    let z = relu(&a2);
    let a3 = l3.forward(&z)?;
    let h3 = relu(&a3);
    let xhat = l4.forward(&h3)?;

    let inv_b = 1.0 / b as f64;
    let mut residual = xhat;
    for (r, &t) in residual.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *r -= t;
    }
    let recon_sum: f64 = residual.as_slice().iter().map(|r| r * r).sum();
    let fz = selector.apply_columns(&z)?;
    let l1_sum: f64 = fz.as_slice().iter().map(|v| v.abs()).sum();

    let loss = LossTerms {
        total: (recon_sum + lambda * l1_sum) * inv_b,
        reconstruction: recon_sum * inv_b,
        l1: l1_sum * inv_b,
    };
    if !loss.total.is_finite() {
        return Err(Error::NonFiniteLoss(loss.total));
    }

    let mut grads = params.zeros_like();

    // d/dx̂ of the mean squared residual
    let mut d_out = residual;
    d_out.as_mut_slice().iter_mut().for_each(|r| *r *= 2.0 * inv_b);
    gemm(1.0, &d_out, Op::N, &h3, Op::T, 0.0, &mut grads.layers[3].weight)?;
    grads.layers[3].bias = row_sums(&d_out);

    let mut d_a3 = matmul(&l4.weight, Op::T, &d_out, Op::N)?;
    drop(d_out);
    relu_backward(&mut d_a3, &a3);
    gemm(1.0, &d_a3, Op::N, &z, Op::T, 0.0, &mut grads.layers[2].weight)?;
    grads.layers[2].bias = row_sums(&d_a3);

    let mut d_z = matmul(&l3.weight, Op::T, &d_a3, Op::N)?;
    drop(d_a3);
    if lambda != 0.0 {
        let mut signs = fz;
        signs.as_mut_slice().iter_mut().for_each(|v| *v = sign(*v));
        let penalty = selector.adjoint_columns(&signs)?;
        let scale = lambda * inv_b;
        for (d, &p) in d_z.as_mut_slice().iter_mut().zip(penalty.as_slice()) {
            *d += scale * p;
        }
    }
    relu_backward(&mut d_z, &a2);
    gemm(1.0, &d_z, Op::N, &h1, Op::T, 0.0, &mut grads.layers[1].weight)?;
    grads.layers[1].bias = row_sums(&d_z);

    let mut d_a1 = matmul(&l2.weight, Op::T, &d_z, Op::N)?;
    relu_backward(&mut d_a1, &a1);
    gemm(1.0, &d_a1, Op::N, x, Op::T, 0.0, &mut grads.layers[0].weight)?;
    grads.layers[0].bias = row_sums(&d_a1);

    Ok(GradientPass { loss, grads, latent: z })
}

/// Loss of a batch without gradients.
pub fn loss(x: &Matrix, params: &ModelParams, spec: &NetworkSpec) -> Result<LossTerms> {
    params.check_shapes(spec)?;
    let z = encode(x, params)?;
    let xhat = decode(&z, params)?;
    let b = x.cols() as f64;
    let recon: f64 = xhat
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(a, t)| (a - t) * (a - t))
        .sum();
    let l1: f64 = spec
        .selector()
        .apply_columns(&z)?
        .as_slice()
        .iter()
        .map(|v| v.abs())
        .sum();
    Ok(LossTerms {
        total: (recon + spec.lambda * l1) / b,
        reconstruction: recon / b,
        l1: l1 / b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(selector: SelectorKind, lambda: f64) -> NetworkSpec {
        NetworkSpec {
            n: 4,
            m_hidden: 6,
            latent_dim: 8,
            lambda,
            selector,
            seed: 11,
        }
    }

    fn batch(n: usize, b: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * b).map(|_| rng.random_range(0.0..1.0)).collect();
        Matrix::from_vec(n, b, data).unwrap()
    }

    /// Straight-line scalar evaluation of the same network for one sample.
    fn scalar_forward(x: &[f64], p: &ModelParams) -> (Vec<f64>, Vec<f64>) {
        let layer = |d: &Dense, v: &[f64], act: bool| -> Vec<f64> {
            let mut out = Vec::with_capacity(d.out_dim());
            for i in 0..d.out_dim() {
                let mut s = d.bias[i];
                for (j, vj) in v.iter().enumerate() {
                    s += d.weight.get(i, j) * vj;
                }
                out.push(if act && s < 0.0 { 0.0 } else { s });
            }
            out
        };
        let h1 = layer(&p.layers[0], x, true);
        let z = layer(&p.layers[1], &h1, true);
        let h3 = layer(&p.layers[2], &z, true);
        let xh = layer(&p.layers[3], &h3, false);
        (z, xh)
    }

    #[test]
    fn init_shapes_for_full_sized_nets() {
        let sas = NetworkSpec {
            n: 4096,
            m_hidden: 4096,
            latent_dim: 8192,
            lambda: 10.0,
            selector: SelectorKind::Identity,
            seed: 0,
        };
        // shape bookkeeping only; avoid allocating the 100M-entry net
        let p = ModelParams::zeros(&NetworkSpec {
            n: 1,
            m_hidden: 1,
            latent_dim: 1,
            ..sas
        });
        assert_eq!(p.latent_dim(), 1);
        assert_eq!(
            sas.parameter_count(),
            2 * (4096 * 4096 + 8192 * 4096) + 2 * 4096 + 8192 + 4096
        );

        let mnist = NetworkSpec::from_ratios(784, 8.0, 16.0, 0.0, SelectorKind::Identity, 1).unwrap();
        assert_eq!((mnist.m_hidden, mnist.latent_dim), (6272, 12544));
        let small = NetworkSpec::from_ratios(64, 1.0, 2.0, 0.0, SelectorKind::Identity, 1).unwrap();
        let p = init_params(&small).unwrap();
        assert_eq!((p.layers[1].weight.rows(), p.layers[1].weight.cols()), (128, 64));
        assert_eq!(p.layers[2].bias.len(), 64);
        p.check_shapes(&small).unwrap();
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let spec = small_spec(SelectorKind::Identity, 0.0);
        let a = init_params(&spec).unwrap();
        let b = init_params(&spec).unwrap();
        assert_eq!(a, b);
        let c = init_params(&NetworkSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a, c);
        for layer in &a.layers {
            let bound = (6.0 / layer.in_dim() as f64).sqrt();
            assert!(layer.weight.as_slice().iter().all(|w| w.abs() <= bound));
            assert!(layer.bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn zero_params_give_zero_latent_and_output() {
        let spec = small_spec(SelectorKind::Identity, 0.0);
        let p = ModelParams::zeros(&spec);
        let x = batch(4, 3, 1);
        assert!(encode(&x, &p).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let z = Matrix::zeros(8, 2);
        assert!(decode(&z, &p).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn decode_of_zero_latent_is_bias_path() {
        let spec = small_spec(SelectorKind::Identity, 0.0);
        let mut p = init_params(&spec).unwrap();
        p.layers[2].bias = vec![0.5, -0.5, 0.25, -1.0, 2.0, 0.0];
        p.layers[3].bias = vec![0.1, 0.2, 0.3, 0.4];
        let out = decode(&Matrix::zeros(8, 1), &p).unwrap();
        for i in 0..4 {
            let mut want = p.layers[3].bias[i];
            for j in 0..6 {
                want += p.layers[3].weight.get(i, j) * p.layers[2].bias[j].max(0.0);
            }
            assert!((out.get(i, 0) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_scalar_oracle() {
        let spec = small_spec(SelectorKind::Identity, 0.0);
        let mut p = init_params(&spec).unwrap();
        for (k, t) in p.tensors_mut().into_iter().enumerate() {
            for (i, v) in t.iter_mut().enumerate() {
                *v += 0.01 * ((k * 31 + i) % 7) as f64 - 0.03;
            }
        }
        let x = batch(4, 5, 3);
        let z = encode(&x, &p).unwrap();
        let xh = decode(&z, &p).unwrap();
        for j in 0..5 {
            let (zs, xs) = scalar_forward(&x.column(j), &p);
            for (a, b) in z.column(j).iter().zip(&zs) {
                assert!((a - b).abs() < 1e-13);
            }
            for (a, b) in xh.column(j).iter().zip(&xs) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn batch_equals_columnwise_bitwise() {
        let spec = small_spec(SelectorKind::Identity, 0.0);
        let p = init_params(&spec).unwrap();
        let x = batch(4, 7, 5);
        let z = encode(&x, &p).unwrap();
        let xh = decode(&z, &p).unwrap();
        for j in 0..7 {
            let col = Matrix::column_vector(&x.column(j));
            let zj = encode(&col, &p).unwrap();
            assert_eq!(zj.as_slice(), z.column(j).as_slice());
            assert_eq!(decode(&zj, &p).unwrap().as_slice(), xh.column(j).as_slice());
        }
    }

    #[test]
    fn latent_is_nonnegative() {
        let spec = small_spec(SelectorKind::Identity, 0.0);
        let p = init_params(&spec).unwrap();
        let z = encode(&batch(4, 20, 9), &p).unwrap();
        assert!(z.as_slice().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn shape_errors() {
        let spec = small_spec(SelectorKind::Identity, 0.0);
        let p = init_params(&spec).unwrap();
        assert!(matches!(encode(&batch(5, 1, 0), &p), Err(Error::Dimension(_))));
        assert!(matches!(decode(&batch(4, 1, 0), &p), Err(Error::Dimension(_))));
        let other = NetworkSpec { latent_dim: 9, ..spec };
        assert!(forward_backward(&batch(4, 1, 0), &p, &other).is_err());
    }

    /// Network whose encoder copies x into the first n latent slots and whose
    /// decoder reads them back, so reconstruction is exact for x >= 0.
    fn identity_net(spec: &NetworkSpec) -> ModelParams {
        let mut p = ModelParams::zeros(spec);
        for i in 0..spec.n {
            p.layers[0].weight.set(i, i, 1.0);
            p.layers[1].weight.set(i, i, 1.0);
            p.layers[2].weight.set(i, i, 1.0);
            p.layers[3].weight.set(i, i, 1.0);
        }
        p
    }

    #[test]
    fn perfect_reconstruction_has_zero_loss_and_gradient() {
        let spec = small_spec(SelectorKind::Identity, 0.0);
        let p = identity_net(&spec);
        let x = batch(4, 3, 2);
        let pass = forward_backward(&x, &p, &spec).unwrap();
        assert_eq!(pass.loss.total, 0.0);
        assert!(pass.grads.tensors().iter().all(|t| t.iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn lambda_times_l1_of_single_latent() {
        let spec = NetworkSpec {
            n: 1,
            m_hidden: 1,
            latent_dim: 3,
            lambda: 10.0,
            selector: SelectorKind::Identity,
            seed: 0,
        };
        let mut p = ModelParams::zeros(&spec);
        p.layers[0].weight.set(0, 0, 1.0);
        p.layers[1].weight.set(0, 0, 1.0);
        p.layers[2].weight.set(0, 0, 1.0);
        p.layers[3].weight.set(0, 0, 1.0);
        let x = Matrix::column_vector(&[0.5]);
        let pass = forward_backward(&x, &p, &spec).unwrap();
        assert_eq!(pass.latent.column(0), vec![0.5, 0.0, 0.0]);
        assert_eq!(pass.loss.reconstruction, 0.0);
        assert_eq!(pass.loss.total, 5.0);
    }

    #[test]
    fn loss_helper_agrees_with_forward_backward() {
        for sel in [SelectorKind::Identity, SelectorKind::ForwardDifference] {
            let spec = small_spec(sel, 3.0);
            let p = init_params(&spec).unwrap();
            let x = batch(4, 6, 4);
            let a = loss(&x, &p, &spec).unwrap();
            let b = forward_backward(&x, &p, &spec).unwrap().loss;
            assert!((a.total - b.total).abs() < 1e-12 * (1.0 + a.total));
        }
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let spec = small_spec(SelectorKind::Identity, 0.0);
        let mut p = init_params(&spec).unwrap();
        p.layers[3].bias[0] = f64::INFINITY;
        assert!(matches!(
            forward_backward(&batch(4, 2, 0), &p, &spec),
            Err(Error::NonFiniteLoss(_))
        ));
    }

    #[test]
    fn content_hash_tracks_values() {
        let spec = small_spec(SelectorKind::Identity, 0.0);
        let p = init_params(&spec).unwrap();
        let mut q = p.clone();
        assert_eq!(p.content_hash(), q.content_hash());
        q.layers[2].bias[1] = 1e-300;
        assert_ne!(p.content_hash(), q.content_hash());
    }
}
