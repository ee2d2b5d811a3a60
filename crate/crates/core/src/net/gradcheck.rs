//! Central finite-difference check of the reverse-mode gradient.

use super::loss::nll_raw;
use super::train::{batch_gradient, Dataset};
use super::Mlp;
use crate::par::Parallelism;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// max |a − b| / max(|a|, |b|, 1e-6) over checked coordinates.
    pub max_rel_err: f64,
    pub checked: usize,
    /// Coordinates skipped because a ±step move would cross a ReLU kink.
    pub skipped_kinks: usize,
}

fn mean_loss(mlp: &Mlp, data: &Dataset, idx: &[usize]) -> f64 {
    let mut hidden = vec![0.0; mlp.hidden];
    let mut raw = vec![0.0; mlp.output_dim()];
    let mut g = vec![0.0; mlp.output_dim()];
    idx.iter()
        .map(|&i| {
            let (z, y) = data.row(i);
            mlp.forward_raw(z, &mut hidden, &mut raw);
            nll_raw(mlp.head, &raw, y, &mut g)
        })
        .sum::<f64>()
        / idx.len() as f64
}

/// Compares every coordinate of the analytic gradient of the mean NLL over
/// rows `idx` with a central difference of half-width `step`.
pub fn check_gradient(mlp: &Mlp, data: &Dataset, idx: &[usize], step: f64) -> GradCheck {
    let mut analytic = vec![0.0; mlp.n_params()];
    batch_gradient(mlp, data, idx, Parallelism::Sequential, &mut analytic);
    let d = mlp.input_dim;
    let nh = mlp.hidden;
    let (w1, b1, _, _) = mlp.split();
    // hidden pre-activations per sample
    let pre: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let z = data.row(i).0;
            (0..nh).map(|j| b1[j] + w1[j * d..(j + 1) * d].iter().zip(z).map(|(w, x)| w * x).sum::<f64>()).collect()
        })
        .collect();
    let mut probe = mlp.clone();
    let mut out = GradCheck { max_rel_err: 0.0, checked: 0, skipped_kinks: 0 };
    for k in 0..mlp.n_params() {
        let crosses = if k < nh * d {
            let (j, c) = (k / d, k % d);
            idx.iter().zip(&pre).any(|(&i, p)| p[j].abs() <= step * data.row(i).0[c].abs() * 1.01 + 1e-300)
        } else if k < nh * d + nh {
            let j = k - nh * d;
            pre.iter().any(|p| p[j].abs() <= step * 1.01)
        } else {
            false
        };
        if crosses {
            out.skipped_kinks += 1;
            continue;
        }
        let base = probe.params[k];
        probe.params[k] = base + step;
        let fp = mean_loss(&probe, data, idx);
        probe.params[k] = base - step;
        let fm = mean_loss(&probe, data, idx);
        probe.params[k] = base;
        let fd = (fp - fm) / (2.0 * step);
        let a = analytic[k];
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
        out.max_rel_err = out.max_rel_err.max(rel);
        out.checked += 1;
    }
    out
}
