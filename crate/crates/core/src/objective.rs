//! Sparse structure selectors and the sparsity functionals built on them.
//!
//! A selector `f` maps a latent vector to the quantity whose L1 norm is
//! penalised during training: the latent itself (plain lasso) or its forward
//! differences (a total-variation style generalized lasso).

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SelectorKind {
    Identity,
    ForwardDifference,
}

impl SelectorKind {
    pub fn code(self) -> u8 {
        match self {
            SelectorKind::Identity => 0,
            SelectorKind::ForwardDifference => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SelectorKind::Identity),
            1 => Some(SelectorKind::ForwardDifference),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selector {
    kind: SelectorKind,
    step: f64,
}

impl Default for Selector {
    fn default() -> Self {
        Selector::new(SelectorKind::Identity)
    }
}

impl From<SelectorKind> for Selector {
    fn from(kind: SelectorKind) -> Self {
        Selector::new(kind)
    }
}

impl Selector {
    /// Selector with unit grid step.
    pub fn new(kind: SelectorKind) -> Self {
        Selector { kind, step: 1.0 }
    }

    pub fn with_step(kind: SelectorKind, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "selector step must be positive, got {step}"
            )));
        }
        Ok(Selector { kind, step })
    }

    pub fn kind(&self) -> SelectorKind {
        self.kind
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Output length for a latent of length `latent_len`.
    pub fn output_len(&self, latent_len: usize) -> usize {
        match self.kind {
            SelectorKind::Identity => latent_len,
            SelectorKind::ForwardDifference => latent_len.saturating_sub(1),
        }
    }

    fn check_latent_len(&self, latent_len: usize) -> Result<()> {
        if self.kind == SelectorKind::ForwardDifference && latent_len < 2 {
            return Err(Error::Degenerate(format!(
                "forward difference needs at least 2 latent entries, got {latent_len}"
            )));
        }
        Ok(())
    }

    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_latent_len(z.len())?;
        Ok(match self.kind {
            SelectorKind::Identity => z.to_vec(),
            SelectorKind::ForwardDifference => z.windows(2).map(|w| (w[1] - w[0]) / self.step).collect(),
        })
    }

    /// `Dᵀ g`: the adjoint of [`Selector::apply`].
    ///
    /// For the forward difference this is the negative divergence with
    /// zero-flux ends, so its output is one entry longer than `g`.
    pub fn adjoint(&self, g: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            SelectorKind::Identity => Ok(g.to_vec()),
            SelectorKind::ForwardDifference => {
                if g.is_empty() {
                    return Err(Error::Degenerate(
                        "forward-difference adjoint of an empty vector".into(),
                    ));
                }
                let h = self.step;
                let len = g.len() + 1;
                let mut out = vec![0.0; len];
                out[0] = -g[0] / h;
                for i in 1..len - 1 {
                    out[i] = (g[i - 1] - g[i]) / h;
                }
                out[len - 1] = g[len - 2] / h;
                Ok(out)
            }
        }
    }

    /// Applies the selector to every column of an `ℓ x b` batch.
    pub fn apply_columns(&self, z: &Matrix) -> Result<Matrix> {
        self.check_latent_len(z.rows())?;
        match self.kind {
            SelectorKind::Identity => Ok(z.clone()),
            SelectorKind::ForwardDifference => {
                let (rows, cols) = (z.rows() - 1, z.cols());
                let mut out = Matrix::zeros(rows, cols);
                for i in 0..rows {
                    let (lo, hi) = (z.row(i), z.row(i + 1));
                    for (o, (&a, &b)) in out.row_mut(i).iter_mut().zip(lo.iter().zip(hi)) {
                        *o = (b - a) / self.step;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Column-wise adjoint; `g` has [`Selector::output_len`] rows.
    pub fn adjoint_columns(&self, g: &Matrix) -> Result<Matrix> {
        match self.kind {
            SelectorKind::Identity => Ok(g.clone()),
            SelectorKind::ForwardDifference => {
                if g.rows() == 0 {
                    return Err(Error::Degenerate("forward-difference adjoint of an empty batch".into()));
                }
                let h = self.step;
                let (len, cols) = (g.rows() + 1, g.cols());
                let mut out = Matrix::zeros(len, cols);
                for c in 0..cols {
                    out.set(0, c, -g.get(0, c) / h);
                    out.set(len - 1, c, g.get(len - 2, c) / h);
                }
                for i in 1..len - 1 {
                    for c in 0..cols {
                        out.set(i, c, (g.get(i - 1, c) - g.get(i, c)) / h);
                    }
                }
                Ok(out)
            }
        }
    }
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Number of entries with magnitude strictly above `tau`.
pub fn l0_count(v: &[f64], tau: f64) -> usize {
    v.iter().filter(|x| x.abs() > tau).count()
}

/// Subgradient of `|x|` with the convention `sign(0) = 0`.
#[inline]
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
