//! Experiment configuration: one TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use frameprobe::recurrent::{BiLstmConfig, EsnConfig};
use frameprobe::{Error, HeadKind, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_LEARNING_RATES: [f64; 3] = [1e-5, 5e-5, 1e-4];
pub const DEFAULT_SNR_DB: [f64; 4] = [0.0, -5.0, -10.0, -20.0];
pub const DEFAULT_PITCH_FACTORS: [f64; 4] = [0.125, 0.25, 0.5, 1.0];
pub const DEFAULT_ABLATION_TEMPLATE: &str = "ablations/{kind}_{level}/layer{layer}.prbe";

fn default_head() -> HeadKind {
    HeadKind::LinearTa
}
fn default_learning_rates() -> Vec<f64> {
    DEFAULT_LEARNING_RATES.to_vec()
}
fn default_epochs() -> usize {
    100
}
fn default_batch_size() -> usize {
    64
}
fn default_weight_decay() -> f64 {
    1e-4
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    /// One container per layer; the layer index comes from the file name.
    pub containers: Vec<PathBuf>,
    #[serde(default = "default_head")]
    pub head: HeadKind,
    #[serde(default = "default_learning_rates")]
    pub learning_rates: Vec<f64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 means one per physical core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub esn: EsnConfig,
    #[serde(default)]
    pub bilstm: BiLstmConfig,
    #[serde(default)]
    pub ablation: Option<AblationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationConfig {
    pub layer: u32,
    #[serde(default = "snr_levels")]
    pub noise_snr_db: Vec<f64>,
    #[serde(default = "pitch_levels")]
    pub pitch_factors: Vec<f64>,
    /// Path template with `{kind}`, `{level}` and `{layer}` placeholders.
    #[serde(default = "ablation_template")]
    pub containers: String,
    /// Raw audio the ablated embeddings are derived from; only used to
    /// print the commands that create missing containers.
    #[serde(default)]
    pub audio_dir: Option<PathBuf>,
    #[serde(default)]
    pub noise_dir: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<String>,
}

fn snr_levels() -> Vec<f64> {
    DEFAULT_SNR_DB.to_vec()
}
fn pitch_levels() -> Vec<f64> {
    DEFAULT_PITCH_FACTORS.to_vec()
}
fn ablation_template() -> String {
    DEFAULT_ABLATION_TEMPLATE.to_string()
}

/// Command-line values that replace file settings.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub head: Option<HeadKind>,
    pub learning_rates: Option<Vec<f64>>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Minimal config over the given files, all other settings default.
    pub fn new(manifest: PathBuf, containers: Vec<PathBuf>, output_dir: PathBuf) -> Self {
        Self {
            manifest,
            containers,
            head: default_head(),
            learning_rates: default_learning_rates(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            weight_decay: default_weight_decay(),
            seed: 0,
            output_dir,
            workers: 0,
            esn: EsnConfig::default(),
            bilstm: BiLstmConfig::default(),
            ablation: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Validation(format!("invalid config: {e}")))
    }

    /// Reads a config file; relative paths are taken from the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.manifest);
        self.containers.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
        if let Some(a) = &mut self.ablation {
            if Path::new(&a.containers).is_relative() {
                a.containers = base.join(&a.containers).to_string_lossy().into_owned();
            }
            if let Some(d) = &mut a.audio_dir {
                fix(d);
            }
            if let Some(d) = &mut a.noise_dir {
                fix(d);
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
        if let Some(v) = o.head {
            self.head = v;
        }
        if let Some(v) = &o.learning_rates {
            self.learning_rates = v.clone();
        }
        if let Some(v) = o.epochs {
            self.epochs = v;
        }
        if let Some(v) = o.batch_size {
            self.batch_size = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.workers {
            self.workers = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.containers.is_empty() {
            return Err(Error::Validation("config lists no layer containers".into()));
        }
        if self.learning_rates.is_empty() {
            return Err(Error::Validation("learning-rate grid is empty".into()));
        }
        if let Some(lr) = self.learning_rates.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Validation(format!("learning rate {lr} is not positive")));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Validation("epochs and batch_size must be positive".into()));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Validation("weight_decay must be non-negative".into()));
        }
        if self.head == HeadKind::Esn {
            self.esn.validate()?;
        }
        if let Some(a) = &self.ablation {
            if a.noise_snr_db.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation("SNR levels must be finite".into()));
            }
            if a.pitch_factors.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
                return Err(Error::Validation("pitch factors must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }

    /// Learning rates actually swept. The ESN readout is solved in closed
    /// form, so its grid collapses to a single cell reported with rate 0.
    pub fn effective_learning_rates(&self) -> Vec<f64> {
        if self.head == HeadKind::Esn {
            vec![0.0]
        } else {
            self.learning_rates.clone()
        }
    }

    pub fn worker_count(&self) -> usize {
        if self.workers == 0 {
            num_cpus::get_physical().max(1)
        } else {
            self.workers
        }
    }
}
