//! Mini-batch Adam training of the generalized-lasso objective.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::DEFAULT_TAU;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::{forward_backward_with_lambda, init_params, ModelParams, NetworkSpec};
use crate::objective::l0_count;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaSchedule {
    Fixed,
    /// λ grows linearly from 0 at epoch 0 to its target at `warmup_epochs`.
    LinearWarmup {
        warmup_epochs: usize,
    },
}

impl LambdaSchedule {
    pub fn lambda_at(&self, target: f64, epoch: usize) -> f64 {
        match *self {
            LambdaSchedule::Fixed => target,
            LambdaSchedule::LinearWarmup { warmup_epochs } => {
                if warmup_epochs == 0 || epoch >= warmup_epochs {
                    target
                } else {
                    target * epoch as f64 / warmup_epochs as f64
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam: AdamConfig,
    pub lambda_schedule: LambdaSchedule,
    pub shuffle_seed: u64,
    /// Threshold used for the per-epoch L0 statistic.
    pub tau: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 512,
            learning_rate: 1e-3,
            adam: AdamConfig::default(),
            lambda_schedule: LambdaSchedule::Fixed,
            shuffle_seed: 0,
            tau: DEFAULT_TAU,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs and batch size must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Sample-weighted means over one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lambda: f64,
    pub total: f64,
    pub reconstruction: f64,
    pub l1: f64,
    pub l0: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub const CSV_HEADER: &'static str =
        "epoch,lambda,mean_total_loss,mean_reconstruction,mean_l1,mean_l0,wall_seconds";

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// One row per epoch under [`TrainHistory::CSV_HEADER`]. Wall time is the
    /// only column that varies between identical runs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.epochs {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{:e},{:.3}",
                r.epoch, r.lambda, r.total, r.reconstruction, r.l1, r.l0, r.seconds
            )?;
        }
        Ok(())
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

/// One Adam update with bias correction; `t` counts from 1.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdamState,
    t: u64,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidArgument("adam step index starts at 1".into()));
    }
    let c1 = 1.0 - cfg.beta1.powi(t.min(i32::MAX as u64) as i32);
    let c2 = 1.0 - cfg.beta2.powi(t.min(i32::MAX as u64) as i32);
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let ps = params.tensors_mut();
    let gs = grads.tensors();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
        if p.len() != g.len() || p.len() != m.len() || p.len() != v.len() {
            return Err(Error::Dimension("adam state does not match parameters".into()));
        }
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

/// Trains a fresh network initialised from `spec.seed`.
pub fn train(dataset: &Dataset, spec: &NetworkSpec, config: &TrainConfig) -> Result<(ModelParams, TrainHistory)> {
    train_with_observer(dataset, spec, config, |_| {})
}

/// As [`train`], calling `observe` after every epoch.
pub fn train_with_observer<F: FnMut(&EpochRecord)>(
    dataset: &Dataset,
    spec: &NetworkSpec,
    config: &TrainConfig,
    observe: F,
) -> Result<(ModelParams, TrainHistory)> {
    let params = init_params(spec)?;
    train_from(params, dataset, spec, config, observe)
}

/// Continues training from existing parameters with fresh optimizer state.
pub fn train_from<F: FnMut(&EpochRecord)>(
    mut params: ModelParams,
    dataset: &Dataset,
    spec: &NetworkSpec,
    config: &TrainConfig,
    mut observe: F,
) -> Result<(ModelParams, TrainHistory)> {
    config.validate()?;
    spec.validate()?;
    params.check_shapes(spec)?;
    if dataset.is_empty() {
        return Err(Error::Degenerate("cannot train on an empty dataset".into()));
    }
    if dataset.dim() != spec.n {
        return Err(Error::Dimension(format!(
            "dataset samples have dimension {}, network expects {}",
            dataset.dim(),
            spec.n
        )));
    }

    let selector = spec.selector();
    let mut state = AdamState::new(&params);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut step: u64 = 0;
    let count = dataset.len() as f64;

    for epoch in 0..config.epochs {
        let started = Instant::now();
        let lambda = config.lambda_schedule.lambda_at(spec.lambda, epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
        rng.set_stream(epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut rng);

        let (mut total, mut recon, mut l1, mut l0) = (0.0, 0.0, 0.0, 0.0);
        for (batch_index, chunk) in order.chunks(config.batch_size).enumerate() {
            let x = dataset.batch(chunk);
            let pass = forward_backward_with_lambda(&x, &params, spec, lambda).map_err(|e| match e {
                Error::NonFiniteLoss(loss) => Error::Divergence {
                    epoch,
                    step: batch_index,
                    loss,
                },
                other => other,
            })?;
            let b = chunk.len() as f64;
            total += pass.loss.total * b;
            recon += pass.loss.reconstruction * b;
            l1 += pass.loss.l1 * b;
            let fz = selector.apply_columns(&pass.latent)?;
            let rows = fz.rows();
            for j in 0..fz.cols() {
                l0 += (0..rows).filter(|&i| fz.get(i, j).abs() > config.tau).count() as f64;
            }
            step += 1;
            adam_step(
                &mut params,
                &pass.grads,
                &mut state,
                step,
                config.learning_rate,
                &config.adam,
            )?;
        }
        if !params.is_finite() {
            return Err(Error::Divergence {
                epoch,
                step: order.len().div_ceil(config.batch_size),
                loss: f64::NAN,
            });
        }
        let record = EpochRecord {
            epoch,
            lambda,
            total: total / count,
            reconstruction: recon / count,
            l1: l1 / count,
            l0: l0 / count,
            seconds: started.elapsed().as_secs_f64(),
        };
        observe(&record);
        history.epochs.push(record);
    }
    Ok((params, history))
}

/// Mean L0 of `f(z)` over a dataset, evaluated in batches.
pub fn mean_l0(dataset: &Dataset, params: &ModelParams, spec: &NetworkSpec, tau: f64) -> Result<f64> {
    let selector = spec.selector();
    let mut sum = 0usize;
    let idx: Vec<usize> = (0..dataset.len()).collect();
    for chunk in idx.chunks(512) {
        let z = crate::network::encode(&dataset.batch(chunk), params)?;
        for j in 0..z.cols() {
            sum += l0_count(&selector.apply(&z.column(j))?, tau);
        }
    }
    Ok(sum as f64 / dataset.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Dense;
    use crate::Matrix;

    fn scalar_params(value: f64) -> ModelParams {
        let mk = |v: f64| Dense {
            weight: Matrix::from_vec(1, 1, vec![v]).unwrap(),
            bias: vec![0.0],
        };
        ModelParams {
            layers: [mk(value), mk(0.0), mk(0.0), mk(0.0)],
        }
    }

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut p = scalar_params(0.3);
        let g = scalar_params(0.0);
        let mut s = AdamState::new(&p);
        s.m.layers[0].weight.set(0, 0, 0.5);
        s.v.layers[0].weight.set(0, 0, 0.25);
        let mut fresh = AdamState::new(&p);
        let before = p.clone();
        adam_step(&mut p, &g, &mut fresh, 1, 1e-3, &AdamConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(fresh, AdamState::new(&p));

        let mut q = scalar_params(0.3);
        adam_step(&mut q, &g, &mut s, 2, 1e-3, &AdamConfig::default()).unwrap();
        assert_eq!(s.m.layers[0].weight.get(0, 0), 0.9 * 0.5);
        assert_eq!(s.v.layers[0].weight.get(0, 0), 0.999 * 0.25);
    }

    #[test]
    fn first_step_hand_trace() {
        // m = 0.1, v = 0.001; m̂ = 1, v̂ = 1; Δ = -lr / (1 + eps)
        let mut p = scalar_params(0.0);
        let g = scalar_params(1.0);
        let mut s = AdamState::new(&p);
        let cfg = AdamConfig::default();
        adam_step(&mut p, &g, &mut s, 1, 1e-3, &cfg).unwrap();
        let m: f64 = (1.0 - 0.9) * 1.0;
        let v: f64 = (1.0 - 0.999) * 1.0;
        let want = -1e-3 * (m / 0.1) / ((v / 0.001).sqrt() + 1e-8);
        let got = p.layers[0].weight.get(0, 0);
        assert!((got - want).abs() < 1e-18, "{got} vs {want}");
        assert!((want + 1e-3 / (1.0 + 1e-8)).abs() < 1e-18);
    }

    #[test]
    fn constant_gradient_steps_approach_lr() {
        let mut p = scalar_params(0.0);
        let g = scalar_params(-4.0);
        let mut s = AdamState::new(&p);
        let mut prev = 0.0;
        for t in 1..=2000 {
            adam_step(&mut p, &g, &mut s, t, 1e-3, &AdamConfig::default()).unwrap();
            let now = p.layers[0].weight.get(0, 0);
            if t > 100 {
                assert!(((now - prev) - 1e-3).abs() < 1e-6);
            }
            prev = now;
        }
    }

    #[test]
    fn step_index_zero_rejected() {
        let mut p = scalar_params(0.0);
        let g = scalar_params(1.0);
        let mut s = AdamState::new(&p);
        assert!(adam_step(&mut p, &g, &mut s, 0, 1e-3, &AdamConfig::default()).is_err());
    }

    #[test]
    fn warmup_schedule() {
        let s = LambdaSchedule::LinearWarmup { warmup_epochs: 4 };
        assert_eq!(s.lambda_at(8.0, 0), 0.0);
        assert_eq!(s.lambda_at(8.0, 2), 4.0);
        assert_eq!(s.lambda_at(8.0, 4), 8.0);
        assert_eq!(s.lambda_at(8.0, 40), 8.0);
        assert_eq!(LambdaSchedule::Fixed.lambda_at(8.0, 0), 8.0);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig {
            epochs: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            batch_size: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert_eq!(TrainConfig::default().epochs, 1000);
        assert_eq!(TrainConfig::default().batch_size, 512);
    }
}
