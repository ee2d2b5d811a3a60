//! A trained network bundled with everything needed to score raw features,
//! and its versioned JSON file format.
//!
//! ```json
//! {
//!   "format": "lobguard-model",
//!   "version": 1,
//!   "head": "SKEW_GAUSSIAN",
//!   "input_dim": 31, "hidden": 64, "output_dim": 3,
//!   "feature_fingerprint": "layout-v1;f=identity;betas=...;etas=...",
//!   "feature_names": ["spread_bps", "L_bid_b10_e0.001", "..."],
//!   "kernel": {"betas": [...], "etas": [...]},
//!   "assets": ["BTC-USD"],
//!   "horizon_s": 1.0,
//!   "transform": {"features": [{"lambda": .., "mean": .., "std": .., "degenerate": false}], "fitted_on": "fnv1a64:..."},
//!   "w1": [[...input_dim...], ...hidden rows], "b1": [...],
//!   "w2": [[...hidden...], ...output rows], "b2": [...]
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HeadKind, Mlp, Scratch, Theta};
use crate::error::{Error, Result};
use crate::flow::KernelConfig;
use crate::preprocess::FeatureTransform;

pub const MODEL_FORMAT: &str = "lobguard-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub mlp: Mlp,
    pub transform: FeatureTransform,
    pub kernel: KernelConfig,
    pub assets: Vec<String>,
    pub horizon_s: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    head: HeadKind,
    input_dim: usize,
    hidden: usize,
    output_dim: usize,
    feature_fingerprint: String,
    feature_names: Vec<String>,
    kernel: KernelConfig,
    assets: Vec<String>,
    horizon_s: f64,
    transform: FeatureTransform,
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
}

fn feature_fingerprint(kernel: &KernelConfig, n_assets: usize) -> String {
    format!("{};assets={n_assets}", kernel.fingerprint())
}

impl Model {
    pub fn new(mlp: Mlp, transform: FeatureTransform, kernel: KernelConfig, assets: Vec<String>, horizon_s: f64) -> Result<Self> {
        kernel.validate()?;
        let dim = kernel.layout().len() * assets.len();
        for got in [mlp.input_dim, transform.dim()] {
            if got != dim {
                return Err(Error::Dimension { expected: dim, got });
            }
        }
        Ok(Self { mlp, transform, kernel, assets, horizon_s })
    }

    pub fn head(&self) -> HeadKind {
        self.mlp.head
    }

    pub fn input_dim(&self) -> usize {
        self.mlp.input_dim
    }

    pub fn fingerprint(&self) -> String {
        feature_fingerprint(&self.kernel, self.assets.len())
    }

    /// Refuses to run with a kernel configuration other than the trained one.
    pub fn check_kernel(&self, kernel: &KernelConfig) -> Result<()> {
        let want = self.fingerprint();
        let got = feature_fingerprint(kernel, self.assets.len());
        if want != got {
            return Err(Error::Model(format!("feature fingerprint mismatch: model {want}, run {got}")));
        }
        Ok(())
    }

    /// Normalizes raw features and runs the network.
    pub fn predict_with(&self, x_raw: &[f64], scratch: &mut Scratch) -> Result<Theta> {
        let mut z = std::mem::take(&mut scratch.z);
        z.resize(self.input_dim(), 0.0);
        let out = self.transform.apply_into(x_raw, &mut z).and_then(|_| self.mlp.forward_with(&z, scratch));
        scratch.z = z;
        out
    }

    pub fn predict(&self, x_raw: &[f64]) -> Result<Theta> {
        self.predict_with(x_raw, &mut Scratch::default())
    }

    pub fn to_json(&self) -> Result<String> {
        let (w1, b1, w2, b2) = self.mlp.split();
        let rows = |w: &[f64], width: usize| w.chunks(width).map(|r| r.to_vec()).collect::<Vec<_>>();
        let names = self
            .assets
            .iter()
            .flat_map(|a| self.kernel.layout().names(&self.kernel, &if self.assets.len() > 1 { format!("{a}:") } else { String::new() }))
            .collect();
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            head: self.mlp.head,
            input_dim: self.mlp.input_dim,
            hidden: self.mlp.hidden,
            output_dim: self.mlp.output_dim(),
            feature_fingerprint: self.fingerprint(),
            feature_names: names,
            kernel: self.kernel.clone(),
            assets: self.assets.clone(),
            horizon_s: self.horizon_s,
            transform: self.transform.clone(),
            w1: rows(w1, self.mlp.input_dim),
            b1: b1.to_vec(),
            w2: rows(w2, self.mlp.hidden),
            b2: b2.to_vec(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| Error::Model(format!("unreadable model file: {e}")))?;
        if f.format != MODEL_FORMAT {
            return Err(Error::Model(format!("not a model file (format {:?})", f.format)));
        }
        if f.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported model version {} (expected {MODEL_VERSION})", f.version)));
        }
        let expected = feature_fingerprint(&f.kernel, f.assets.len());
        if f.feature_fingerprint != expected {
            return Err(Error::Model(format!(
                "feature fingerprint mismatch: file {}, this build {expected}",
                f.feature_fingerprint
            )));
        }
        if f.output_dim != f.head.output_dim()
            || f.w1.len() != f.hidden
            || f.b1.len() != f.hidden
            || f.w2.len() != f.output_dim
            || f.b2.len() != f.output_dim
            || f.w1.iter().any(|r| r.len() != f.input_dim)
            || f.w2.iter().any(|r| r.len() != f.hidden)
        {
            return Err(Error::Model("weight shapes disagree with declared dimensions".into()));
        }
        let mut mlp = Mlp::zeros(f.head, f.input_dim, f.hidden);
        mlp.params = f.w1.into_iter().flatten().chain(f.b1).chain(f.w2.into_iter().flatten()).chain(f.b2).collect();
        Model::new(mlp, f.transform, f.kernel, f.assets, f.horizon_s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
