//! Probabilistic feed-forward network: one ReLU hidden layer mapping a
//! normalized feature vector to the parameters of a predictive law.

mod adam;
pub mod gradcheck;
mod loss;
mod model;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{BivariateNormalParams, Marginal, SkewNormalParams};
use crate::error::{Error, Result};

pub use adam::Adam;
pub use loss::{nll, nll_raw, sigmoid, softplus, softplus_inv, RHO_SCALE, SIGMA_FLOOR};
pub use model::{Model, MODEL_FORMAT, MODEL_VERSION};
pub use train::{batch_gradient, mean_nll, train, Dataset, EpochStats, TrainConfig, TrainReport, GRAD_CHUNK};

pub const DEFAULT_HIDDEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HeadKind {
    Gaussian,
    SkewGaussian,
    BivariateGaussian,
}

impl HeadKind {
    /// Raw output width: `[μ, rσ]`, `[μ, rσ, α]` or `[μ₁, μ₂, rσ₁, rσ₂, rρ]`.
    pub fn output_dim(self) -> usize {
        match self {
            HeadKind::Gaussian => 2,
            HeadKind::SkewGaussian => 3,
            HeadKind::BivariateGaussian => 5,
        }
    }

    /// Number of target columns.
    pub fn target_dim(self) -> usize {
        match self {
            HeadKind::BivariateGaussian => 2,
            _ => 1,
        }
    }

    /// Maps raw outputs onto the distribution's domain.
    pub fn theta(self, raw: &[f64]) -> Theta {
        match self {
            HeadKind::Gaussian => Theta::Gaussian { mu: raw[0], sigma: softplus(raw[1]) + SIGMA_FLOOR },
            HeadKind::SkewGaussian => Theta::Skew(SkewNormalParams {
                mu: raw[0],
                sigma: softplus(raw[1]) + SIGMA_FLOOR,
                alpha: raw[2],
            }),
            HeadKind::BivariateGaussian => Theta::Bivariate(BivariateNormalParams {
                mu1: raw[0],
                mu2: raw[1],
                sigma1: softplus(raw[2]) + SIGMA_FLOOR,
                sigma2: softplus(raw[3]) + SIGMA_FLOOR,
                rho: RHO_SCALE * raw[4].tanh(),
            }),
        }
    }
}

impl std::str::FromStr for HeadKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" => Ok(HeadKind::Gaussian),
            "skew" | "skew_gaussian" => Ok(HeadKind::SkewGaussian),
            "bivariate" | "bivariate_gaussian" => Ok(HeadKind::BivariateGaussian),
            other => Err(Error::Config(format!("unknown head {other:?}"))),
        }
    }
}

/// Predicted distribution parameters Θ(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Theta {
    Gaussian { mu: f64, sigma: f64 },
    Skew(SkewNormalParams),
    Bivariate(BivariateNormalParams),
}

impl Theta {
    /// Marginal law of asset `i` (0 or 1; only 0 for univariate heads).
    pub fn marginal(&self, i: usize) -> Marginal {
        match *self {
            Theta::Gaussian { mu, sigma } => Marginal::Gaussian { mu, sigma },
            Theta::Skew(p) => Marginal::Skew(p),
            Theta::Bivariate(p) if i == 0 => Marginal::Gaussian { mu: p.mu1, sigma: p.sigma1 },
            Theta::Bivariate(p) => Marginal::Gaussian { mu: p.mu2, sigma: p.sigma2 },
        }
    }

    /// Mean and variance of the primary asset's move.
    pub fn mean_var(&self) -> (f64, f64) {
        self.marginal(0).mean_var()
    }

    /// Standardized average E/√V of the primary asset's move.
    pub fn sharpe(&self) -> f64 {
        self.marginal(0).sharpe()
    }
}

/// Reusable buffers for allocation-free inference.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    pub z: Vec<f64>,
    pub hidden: Vec<f64>,
    pub raw: Vec<f64>,
}

/// Single-hidden-layer perceptron with flat parameter storage
/// `[W₁ (hidden × input, row-major), b₁, W₂ (out × hidden), b₂]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub head: HeadKind,
    pub input_dim: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn zeros(head: HeadKind, input_dim: usize, hidden: usize) -> Self {
        let n = hidden * input_dim + hidden + head.output_dim() * hidden + head.output_dim();
        Self { head, input_dim, hidden, params: vec![0.0; n] }
    }

    /// Kaiming-uniform hidden weights; output weights shrunk by 10 so the
    /// initial law is close to the bias-only fit.
    pub fn init<R: Rng>(head: HeadKind, input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(head, input_dim, hidden);
        let a1 = (6.0 / input_dim as f64).sqrt();
        let a2 = 0.1 * (6.0 / hidden as f64).sqrt();
        let (w1, _, w2, _) = m.split_mut();
        for w in w1 {
            *w = rng.random_range(-a1..a1);
        }
        for w in w2 {
            *w = rng.random_range(-a2..a2);
        }
        m
    }

    pub fn output_dim(&self) -> usize {
        self.head.output_dim()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn offsets(&self) -> [usize; 4] {
        let w1 = self.hidden * self.input_dim;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.output_dim() * self.hidden;
        [w1, b1, w2, self.params.len()]
    }

    pub fn split(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let [o1, o2, o3, _] = self.offsets();
        let (w1, rest) = self.params.split_at(o1);
        let (b1, rest) = rest.split_at(o2 - o1);
        let (w2, b2) = rest.split_at(o3 - o2);
        (w1, b1, w2, b2)
    }

    pub fn split_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64], &mut [f64]) {
        let [o1, o2, o3, _] = self.offsets();
        let (w1, rest) = self.params.split_at_mut(o1);
        let (b1, rest) = rest.split_at_mut(o2 - o1);
        let (w2, b2) = rest.split_at_mut(o3 - o2);
        (w1, b1, w2, b2)
    }

    /// Raw head outputs; `hidden` receives the post-ReLU activations.
    #[inline]
    pub fn forward_raw(&self, z: &[f64], hidden: &mut [f64], raw: &mut [f64]) {
        let (w1, b1, w2, b2) = self.split();
        let d = self.input_dim;
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &w1[j * d..(j + 1) * d];
            let pre = b1[j] + row.iter().zip(z).map(|(w, x)| w * x).sum::<f64>();
            *h = pre.max(0.0);
        }
        for (k, r) in raw.iter_mut().enumerate() {
            let row = &w2[k * self.hidden..(k + 1) * self.hidden];
            *r = b2[k] + row.iter().zip(hidden.iter()).map(|(w, h)| w * h).sum::<f64>();
        }
    }

    pub fn forward_with(&self, z: &[f64], scratch: &mut Scratch) -> Result<Theta> {
        if z.len() != self.input_dim {
            return Err(Error::Dimension { expected: self.input_dim, got: z.len() });
        }
        scratch.hidden.resize(self.hidden, 0.0);
        scratch.raw.resize(self.output_dim(), 0.0);
        self.forward_raw(z, &mut scratch.hidden, &mut scratch.raw);
        Ok(self.head.theta(&scratch.raw))
    }

    pub fn forward(&self, z: &[f64]) -> Result<Theta> {
        self.forward_with(z, &mut Scratch::default())
    }
}
