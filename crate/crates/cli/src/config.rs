//! Run configuration: a versioned TOML file plus command-line/env overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fxarb::backtest::{BacktestConfig, StrategySet};
use fxarb::market_data::{CleaningConfig, SyntheticConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Generate the market in memory from `data.synthetic`.
    #[default]
    Synthetic,
    /// Read `data.fx_path` and `data.ir_path`.
    Files,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub source: DataSource,
    pub fx_path: Option<PathBuf>,
    pub ir_path: Option<PathBuf>,
    /// The generator's own `seed` field is replaced by the run seed.
    pub synthetic: SyntheticConfig,
    pub cleaning: CleaningConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            fx_path: None,
            ir_path: None,
            synthetic: SyntheticConfig::default(),
            cleaning: CleaningConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub backtest: BacktestConfig,
}

fn default_seed() -> u64 {
    7
}

fn default_out() -> PathBuf {
    PathBuf::from("fxarb-out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: default_seed(),
            threads: 0,
            output_dir: default_out(),
            data: DataConfig::default(),
            backtest: BacktestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub strategy: Option<StrategySet>,
}

/// A validated configuration with the bytes it was read from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    /// The file exactly as read; empty when running on defaults.
    pub raw: Vec<u8>,
    /// SHA-256 of the effective settings that can change results.
    pub hash: String,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        // Check the version before the schema so an old file gets a clear message.
        let table: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
        match table.get("schema_version").and_then(|v| v.as_integer()) {
            Some(v) if v == SCHEMA_VERSION as i64 => {}
            Some(v) => bail!("unsupported schema_version {v} (this build reads {SCHEMA_VERSION})"),
            None => bail!("config is missing schema_version"),
        }
        toml::from_str(text).context("config does not match the schema")
    }

    pub fn validate(&self) -> Result<()> {
        self.data.synthetic.validate()?;
        self.data.cleaning.validate()?;
        self.backtest.validate()?;
        if self.data.source == DataSource::Files && (self.data.fx_path.is_none() || self.data.ir_path.is_none()) {
            bail!("data.source = \"files\" needs data.fx_path and data.ir_path");
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.out {
            self.output_dir = p.clone();
        }
        if let Some(t) = o.threads {
            self.threads = t;
        }
        if let Some(s) = o.strategy {
            self.backtest.strategy = s;
        }
        self.data.synthetic.seed = self.seed;
    }

    /// Canonical TOML of the effective settings.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing the effective config")
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Loaded> {
        let (mut config, raw) = match path {
            Some(p) => {
                let raw = std::fs::read(p).with_context(|| format!("reading config {}", p.display()))?;
                let text = std::str::from_utf8(&raw).context("config is not UTF-8")?;
                (Self::parse(text).with_context(|| format!("in {}", p.display()))?, raw)
            }
            None => (Self::default(), Vec::new()),
        };
        config.apply(overrides);
        config.validate()?;
        let hash = config.result_hash()?;
        Ok(Loaded { config, raw, hash })
    }

    /// Hash over everything but the thread count and output location, which
    /// do not affect any result.
    pub fn result_hash(&self) -> Result<String> {
        let canonical = Self {
            threads: 0,
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        Ok(hex(&Sha256::digest(canonical.to_toml()?.as_bytes())))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
