//! Minibatch training with early stopping.
//!
//! Gradients are accumulated over fixed chunks of [`GRAD_CHUNK`] samples and
//! the chunk sums are added in chunk order, so a run is bit-identical with or
//! without the thread pool.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{nll_raw, softplus_inv, SIGMA_FLOOR};
use super::{HeadKind, Mlp, DEFAULT_HIDDEN};
use crate::error::{Error, Result};
use crate::par::Parallelism;

pub const GRAD_CHUNK: usize = 512;

/// Row-major normalized inputs and targets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub dim: usize,
    pub ydim: usize,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, ydim: usize) -> Self {
        Self { dim, ydim, z: Vec::new(), y: Vec::new() }
    }

    pub fn with_capacity(dim: usize, ydim: usize, n: usize) -> Self {
        Self { dim, ydim, z: Vec::with_capacity(n * dim), y: Vec::with_capacity(n * ydim) }
    }

    pub fn push(&mut self, z: &[f64], y: &[f64]) {
        debug_assert_eq!(z.len(), self.dim);
        debug_assert_eq!(y.len(), self.ydim);
        self.z.extend_from_slice(z);
        self.y.extend_from_slice(y);
    }

    pub fn len(&self) -> usize {
        self.y.len().checked_div(self.ydim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[f64], &[f64]) {
        (&self.z[i * self.dim..(i + 1) * self.dim], &self.y[i * self.ydim..(i + 1) * self.ydim])
    }

    /// Contiguous rows `[start, end)` as a new dataset.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            dim: self.dim,
            ydim: self.ydim,
            z: self.z[start * self.dim..end * self.dim].to_vec(),
            y: self.y[start * self.ydim..end * self.ydim].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub hidden: usize,
    #[serde(skip, default)]
    pub parallelism: Parallelism,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 4096,
            learning_rate: 1e-3,
            max_epochs: 1000,
            patience: 100,
            seed: 0,
            hidden: DEFAULT_HIDDEN,
            parallelism: Parallelism::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 || self.hidden == 0 {
            return Err(Error::Config("batch size, epochs, patience and hidden width must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config("patience cannot exceed max epochs".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Sample-weighted mean of the epoch's minibatch losses.
    pub train_nll: f64,
    pub val_nll: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_nll: f64,
    pub stopped_early: bool,
    pub n_train: usize,
    pub n_val: usize,
}

/// Summed NLL and summed gradient over rows `idx` of one chunk.
fn chunk_gradient(mlp: &Mlp, data: &Dataset, idx: &[usize]) -> (f64, Vec<f64>) {
    let d = mlp.input_dim;
    let nh = mlp.hidden;
    let no = mlp.output_dim();
    let mut grad = vec![0.0; mlp.n_params()];
    let mut hidden = vec![0.0; nh];
    let mut raw = vec![0.0; no];
    let mut g_raw = vec![0.0; no];
    let mut dh = vec![0.0; nh];
    let (_, _, w2, _) = mlp.split();
    let o_b1 = nh * d;
    let o_w2 = o_b1 + nh;
    let o_b2 = o_w2 + no * nh;
    let mut loss = 0.0;
    for &i in idx {
        let (z, y) = data.row(i);
        mlp.forward_raw(z, &mut hidden, &mut raw);
        loss += nll_raw(mlp.head, &raw, y, &mut g_raw);
        dh.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..no {
            let g = g_raw[k];
            grad[o_b2 + k] += g;
            let row = &w2[k * nh..(k + 1) * nh];
            let gw = &mut grad[o_w2 + k * nh..o_w2 + (k + 1) * nh];
            for j in 0..nh {
                gw[j] += g * hidden[j];
                dh[j] += row[j] * g;
            }
        }
        for j in 0..nh {
            // subgradient 0 at the kink
            if hidden[j] <= 0.0 {
                continue;
            }
            let g = dh[j];
            grad[o_b1 + j] += g;
            for (gw, x) in grad[j * d..(j + 1) * d].iter_mut().zip(z) {
                *gw += g * x;
            }
        }
    }
    (loss, grad)
}

/// Mean NLL over rows `idx`, gradient written to `grad`.
pub fn batch_gradient(mlp: &Mlp, data: &Dataset, idx: &[usize], par: Parallelism, grad: &mut [f64]) -> f64 {
    let parts = par.map_chunks(idx, GRAD_CHUNK, |_, c| chunk_gradient(mlp, data, c));
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let inv = 1.0 / idx.len() as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    loss * inv
}

/// Mean NLL over the whole dataset.
pub fn mean_nll(mlp: &Mlp, data: &Dataset, par: Parallelism) -> f64 {
    let n = data.len();
    let parts = par.map_range(n.div_ceil(GRAD_CHUNK), |c| {
        let mut hidden = vec![0.0; mlp.hidden];
        let mut raw = vec![0.0; mlp.output_dim()];
        let mut g = vec![0.0; mlp.output_dim()];
        (c * GRAD_CHUNK..((c + 1) * GRAD_CHUNK).min(n))
            .map(|i| {
                let (z, y) = data.row(i);
                mlp.forward_raw(z, &mut hidden, &mut raw);
                nll_raw(mlp.head, &raw, y, &mut g)
            })
            .sum::<f64>()
    });
    parts.into_iter().sum::<f64>() / n as f64
}

fn column_mean_std(data: &Dataset, col: usize, n: usize) -> (f64, f64) {
    let mean = (0..n).map(|i| data.row(i).1[col]).sum::<f64>() / n as f64;
    let var = (0..n).map(|i| (data.row(i).1[col] - mean).powi(2)).sum::<f64>() / n.saturating_sub(1).max(1) as f64;
    (mean, var.sqrt())
}

/// Trains on the first half of `data` and early-stops on the second half
/// (chronological split). Returns the best-validation weights.
pub fn train(head: HeadKind, data: &Dataset, cfg: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    cfg.validate()?;
    if data.ydim != head.target_dim() {
        return Err(Error::Dimension { expected: head.target_dim(), got: data.ydim });
    }
    let n = data.len();
    let n_train = n / 2;
    if n_train == 0 || n - n_train == 0 {
        return Err(Error::Config(format!("need at least 2 observations to split, got {n}")));
    }
    let train_set = data.slice(0, n_train);
    let val_set = data.slice(n_train, n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mlp = Mlp::init(head, data.dim, cfg.hidden, &mut rng);
    {
        let b2 = mlp.split_mut().3;
        let sp = |s: f64| softplus_inv((s - SIGMA_FLOOR).max(1e-6));
        match head {
            HeadKind::Gaussian | HeadKind::SkewGaussian => {
                let (m, s) = column_mean_std(&train_set, 0, n_train);
                b2[0] = m;
                b2[1] = sp(s);
            }
            HeadKind::BivariateGaussian => {
                let (m1, s1) = column_mean_std(&train_set, 0, n_train);
                let (m2, s2) = column_mean_std(&train_set, 1, n_train);
                b2[0] = m1;
                b2[1] = m2;
                b2[2] = sp(s1);
                b2[3] = sp(s2);
            }
        }
    }
    let mut adam = Adam::new(mlp.n_params());
    let mut grad = vec![0.0; mlp.n_params()];
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut best = (f64::INFINITY, 0usize, mlp.params.clone());
    let mut epochs = Vec::new();
    let mut stopped_early = false;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let l = batch_gradient(&mlp, &train_set, batch, cfg.parallelism, &mut grad);
            total += l * batch.len() as f64;
            adam.step(&mut mlp.params, &grad, cfg.learning_rate);
        }
        let train_nll = total / n_train as f64;
        let val_nll = mean_nll(&mlp, &val_set, cfg.parallelism);
        log::debug!("epoch {epoch}: train {train_nll:.6} val {val_nll:.6}");
        epochs.push(EpochStats { epoch, train_nll, val_nll });
        if val_nll < best.0 {
            best = (val_nll, epoch, mlp.params.clone());
        } else if epoch - best.1 >= cfg.patience {
            stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    mlp.params = best.2;
    let report = TrainReport {
        epochs,
        best_epoch: best.1,
        best_val_nll: best.0,
        stopped_early,
        n_train,
        n_val: n - n_train,
    };
    Ok((mlp, report))
}
