use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::dataio::{MprsConfig, PlantSpec};
use crate::error::{Error, Result};
use crate::netcore::ArchKind;
use crate::optimize::{TrainConfig, TrainMode};

/// Network shape. Input and output widths come from the dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    pub kind: ArchKind,
    pub layer_sizes: Vec<usize>,
    /// Past inputs appended to each input vector (0 = none).
    pub n_lags: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            kind: ArchKind::Mgu,
            layer_sizes: vec![5],
            n_lags: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Simulate the benchmark plant under an MPRS excitation.
    Generate,
    /// Read one or more sequences from a CSV file.
    Csv,
    /// Reuse a dataset written by `generate-data` (splits and normalization included).
    Manifest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// CSV file or manifest, for the `csv` and `manifest` sources.
    pub path: Option<PathBuf>,
    pub mprs: MprsConfig,
    pub plant: PlantSpec,
    /// Output signal-to-noise variance ratio; absent means noise-free.
    pub snr: Option<f64>,
    /// Noise stream seed; defaults to the run seed.
    pub noise_seed: Option<u64>,
    /// Window length in samples (0 keeps whole sequences).
    pub window: usize,
    pub washout: usize,
    /// Number of train, validation and test sequences.
    pub split: [usize; 3],
    /// Min-max scale every channel to [-1, 1] using all sequences.
    pub normalize: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Generate,
            path: None,
            mprs: MprsConfig::default(),
            plant: PlantSpec::default(),
            snr: None,
            noise_seed: None,
            window: 250,
            washout: 25,
            split: [8, 2, 0],
            normalize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    /// Trajectory pairs for the empirical probe (0 disables it).
    pub probe_trials: usize,
    pub probe_horizon: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            probe_trials: 10,
            probe_horizon: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub hidden_sizes: Vec<usize>,
    pub n_u: usize,
    pub n_y: usize,
    /// Steps per timed rollout.
    pub steps: usize,
    /// Timed rollouts per configuration; the median is reported.
    pub repetitions: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![5, 7, 9, 11, 13, 15],
            n_u: 1,
            n_y: 1,
            steps: 200,
            repetitions: 101,
        }
    }
}

/// Everything a command needs, read from one TOML file plus `key=value`
/// overrides. Unknown keys anywhere are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds the signal, the split, the initialization and training.
    pub seed: u64,
    /// Training variant; sets the loss-augmentation, warm-start and projection flags.
    pub mode: TrainMode,
    pub arch: ArchConfig,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub stability: StabilityConfig,
    pub compare: CompareConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut c = Self {
            seed: 0,
            mode: TrainMode::Ws,
            arch: ArchConfig::default(),
            data: DataConfig::default(),
            train: TrainConfig::default(),
            stability: StabilityConfig::default(),
            compare: CompareConfig::default(),
        };
        c.resolve();
        c
    }
}

fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Sets a dotted key such as `train.lr=0.002` in `table`.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{p}' is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

impl RunConfig {
    /// Parses TOML text, applies overrides, then validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let given: Vec<String> = table
            .get("train")
            .and_then(Value::as_table)
            .map(|t| t.keys().cloned().collect())
            .unwrap_or_default();
        let mut cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        // The seed and the mode flags are derived; an explicit value must agree.
        let derived = {
            let mut c = cfg.clone();
            c.resolve();
            c.train
        };
        for key in given {
            let clash = match key.as_str() {
                "seed" => cfg.train.seed != derived.seed,
                "loss_augmentation" => cfg.train.loss_augmentation != derived.loss_augmentation,
                "warm_start" => cfg.train.warm_start != derived.warm_start,
                "pgm" => cfg.train.pgm != derived.pgm,
                _ => false,
            };
            if clash {
                return Err(Error::Config(format!(
                    "train.{key} conflicts with the top-level seed/mode; set those instead"
                )));
            }
        }
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (or starts from defaults) and applies overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    fn resolve(&mut self) {
        self.train.set_mode(self.mode);
        self.train.seed = self.seed;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.arch.layer_sizes.is_empty() || self.arch.layer_sizes.contains(&0) {
            return bad("arch.layer_sizes must be a nonempty list of positive sizes".into());
        }
        self.train.validate()?;
        let d = &self.data;
        if matches!(d.source, DataSource::Csv | DataSource::Manifest) && d.path.is_none() {
            return bad(format!("data.path is required for the {:?} source", d.source).to_lowercase());
        }
        if let Some(snr) = d.snr {
            if !(snr > 0.0 && snr.is_finite()) {
                return bad("data.snr must be positive".into());
            }
        }
        if d.window != 0 && d.window <= d.washout {
            return bad(format!("data.window ({}) must exceed data.washout ({})", d.window, d.washout));
        }
        if d.split[0] == 0 {
            return bad("data.split needs at least one training sequence".into());
        }
        if self.compare.repetitions < 100 {
            return bad("compare.repetitions must be at least 100".into());
        }
        if self.compare.hidden_sizes.is_empty() || self.compare.steps == 0 {
            return bad("compare needs hidden sizes and a positive step count".into());
        }
        Ok(())
    }

    /// The merged configuration as TOML, echoed into every output.
    pub fn effective_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of [`effective_toml`](Self::effective_toml), hex encoded.
    pub fn config_hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.effective_toml()?.as_bytes())))
    }

    /// Header lines for CSV outputs: tool version and config hash.
    pub fn stamp(&self) -> Result<Vec<String>> {
        Ok(vec![format!("mgu {}", crate::VERSION), format!("config_hash {}", self.config_hash()?)])
    }

    /// Writes the effective config (prefixed by the stamp) into `dir/config.toml`.
    pub fn write_effective(&self, dir: &Path) -> Result<PathBuf> {
        let mut text: String = self.stamp()?.iter().map(|l| format!("# {l}\n")).collect();
        text.push_str(&self.effective_toml()?);
        let path = dir.join("config.toml");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
