//! Run configuration: one JSON document describing the data source, matrix
//! options, network, training and evaluation. Unknown keys are rejected.
//! Command-line flags override values read from the file.

use std::fs;
use std::path::{Path, PathBuf};

use nepdf_core::eval::{BenchmarkSetup, EvalConfig};
use nepdf_core::nepdf::NepdfOptions;
use nepdf_core::net::{default_arch, LayerSpec, TrainConfig};
use nepdf_core::simgen::{SemParams, Structure, SynthPairConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub structure: Structure,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "default_systems")]
    pub systems: usize,
    /// Pair observations are `(a_{t-lag}, b_t)`.
    #[serde(default)]
    pub lag: usize,
}

fn default_steps() -> usize {
    1000
}

fn default_systems() -> usize {
    2000
}

impl SimulateConfig {
    pub fn params(&self, seed: u64) -> SemParams {
        SemParams { burn_in: self.burn_in, ..SemParams::new(self.structure, self.alpha, self.beta, self.gamma, self.steps, seed) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub arch: Vec<LayerSpec>,
    pub train: TrainConfig,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig { arch: default_arch(), train: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Path to a pair dataset file.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Generate structural-equation data instead of reading a file.
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    /// Generate spline-mechanism pairs instead of reading a file.
    #[serde(default)]
    pub synth: Option<SynthPairConfig>,
    #[serde(default)]
    pub nepdf: NepdfOptions,
    #[serde(default)]
    pub net: NetConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            simulate: None,
            synth: None,
            nepdf: NepdfOptions::default(),
            net: NetConfig::default(),
            eval: EvalConfig::default(),
            seed: 0,
            output_dir: default_output_dir(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, UsageError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| UsageError(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| UsageError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, UsageError> {
        path.map(Self::load).unwrap_or_else(|| Ok(RunConfig::default()))
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let bad = |m: String| Err(UsageError(m));
        let sources = [self.data.is_some(), self.simulate.is_some(), self.synth.is_some()];
        if sources.iter().filter(|&&s| s).count() > 1 {
            return bad("at most one of data, simulate, synth may be given".into());
        }
        if self.nepdf.k < 2 {
            return bad(format!("nepdf.k must be at least 2, got {}", self.nepdf.k));
        }
        self.net.train.validate().map_err(|e| UsageError(e.to_string()))?;
        if self.eval.folds < 2 {
            return bad(format!("eval.folds must be at least 2, got {}", self.eval.folds));
        }
        if self.eval.fit_degree == 0 {
            return bad("eval.fit_degree must be positive".into());
        }
        if let Some(s) = &self.simulate {
            s.params(self.seed).validate().map_err(|e| UsageError(e.to_string()))?;
            if s.systems == 0 {
                return bad("simulate.systems must be positive".into());
            }
            if s.lag >= s.steps {
                return bad(format!("simulate.lag {} must be smaller than steps {}", s.lag, s.steps));
            }
        }
        if let Some(s) = &self.synth {
            s.validate().map_err(|e| UsageError(e.to_string()))?;
        }
        Ok(())
    }

    /// Canonical JSON of the effective configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`RunConfig::canonical_json`], hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn setup(&self, dataset_digest: String) -> BenchmarkSetup {
        BenchmarkSetup {
            nepdf: self.nepdf,
            arch: self.net.arch.clone(),
            train: self.net.train,
            eval: self.eval,
            seed: self.seed,
            config_digest: self.digest(),
            dataset_digest,
        }
    }
}
