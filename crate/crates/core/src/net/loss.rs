//! Negative log-likelihoods of the three heads and their gradients with
//! respect to the raw network outputs.

use std::f64::consts::LN_2;

use super::{HeadKind, Theta};
use crate::dist::normal::{log_std_normal_cdf, pdf_over_cdf, LN_2PI, LN_SQRT_2PI};
use crate::dist::{bvn_logpdf, sn_logpdf};

/// Added to softplus so σ stays strictly positive.
pub const SIGMA_FLOOR: f64 = 1e-6;
/// ρ = RHO_SCALE · tanh(raw) keeps the 2×2 covariance well conditioned.
pub const RHO_SCALE: f64 = 0.999;

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// −log density of `y` under Θ.
pub fn nll(theta: &Theta, y: &[f64]) -> f64 {
    match theta {
        Theta::Gaussian { mu, sigma } => {
            let z = (y[0] - mu) / sigma;
            LN_SQRT_2PI + sigma.ln() + 0.5 * z * z
        }
        Theta::Skew(p) => -sn_logpdf(p, y[0]),
        Theta::Bivariate(p) => -bvn_logpdf(p, y[0], y[1]),
    }
}

/// NLL at raw outputs `raw`, writing ∂NLL/∂raw into `grad`.
pub fn nll_raw(head: HeadKind, raw: &[f64], y: &[f64], grad: &mut [f64]) -> f64 {
    match head {
        HeadKind::Gaussian => {
            let (mu, sigma) = (raw[0], softplus(raw[1]) + SIGMA_FLOOR);
            let z = (y[0] - mu) / sigma;
            grad[0] = -z / sigma;
            grad[1] = (1.0 - z * z) / sigma * sigmoid(raw[1]);
            LN_SQRT_2PI + sigma.ln() + 0.5 * z * z
        }
        HeadKind::SkewGaussian => {
            let (mu, sigma, alpha) = (raw[0], softplus(raw[1]) + SIGMA_FLOOR, raw[2]);
            let z = (y[0] - mu) / sigma;
            let u = alpha * z;
            let r = pdf_over_cdf(u);
            let dz = z - alpha * r;
            grad[0] = -dz / sigma;
            grad[1] = (1.0 - z * dz) / sigma * sigmoid(raw[1]);
            grad[2] = -z * r;
            -LN_2 + sigma.ln() + LN_SQRT_2PI + 0.5 * z * z - log_std_normal_cdf(u)
        }
        HeadKind::BivariateGaussian => {
            let s1 = softplus(raw[2]) + SIGMA_FLOOR;
            let s2 = softplus(raw[3]) + SIGMA_FLOOR;
            let t = raw[4].tanh();
            let rho = RHO_SCALE * t;
            let z1 = (y[0] - raw[0]) / s1;
            let z2 = (y[1] - raw[1]) / s2;
            let s = 1.0 - rho * rho;
            let q = z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2;
            let d1 = (z1 - rho * z2) / s;
            let d2 = (z2 - rho * z1) / s;
            grad[0] = -d1 / s1;
            grad[1] = -d2 / s2;
            grad[2] = (1.0 - z1 * d1) / s1 * sigmoid(raw[2]);
            grad[3] = (1.0 - z2 * d2) / s2 * sigmoid(raw[3]);
            let drho = -rho / s - z1 * z2 / s + rho * q / (s * s);
            grad[4] = drho * RHO_SCALE * (1.0 - t * t);
            LN_2PI + s1.ln() + s2.ln() + 0.5 * s.ln() + 0.5 * q / s
        }
    }
}
