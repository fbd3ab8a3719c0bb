//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wickns_core::noise::{bessel_operator, sample_white_noise_field, NoiseOperator};
use wickns_core::norms::{fl_norm, XsbParams};
use wickns_core::rng::{Channel, NoiseStream, StreamKey};
use wickns_core::wick::SolverConfig;
use wickns_core::SpectralField;

use crate::error::CliError;

pub const OUT_ENV: &str = "WICKNS_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub initial: InitialBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<XsbParams>,
    #[serde(default)]
    pub lab: LabBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseBlock {
    #[default]
    Zero,
    Identity,
    Bessel {
        alpha: f64,
    },
    Multiplier {
        phi: Vec<f64>,
    },
    /// CSV in the operator schema; relative paths are taken from the config
    /// file's directory.
    File {
        path: PathBuf,
    },
}

impl NoiseBlock {
    pub fn build(&self, cutoff: usize, base: &Path) -> Result<NoiseOperator, CliError> {
        let op = match self {
            Self::Zero => NoiseOperator::zero(cutoff),
            Self::Identity => NoiseOperator::identity(cutoff),
            Self::Bessel { alpha } => bessel_operator(cutoff, *alpha),
            Self::Multiplier { phi } => NoiseOperator::multiplier(cutoff, phi.clone()).map_err(CliError::config)?,
            Self::File { path } => {
                let text = read(&base.join(path))?;
                NoiseOperator::from_csv(&text).map_err(CliError::config)?
            }
        };
        if op.cutoff() != cutoff {
            return Err(CliError::Config(format!(
                "noise operator has cutoff {}, solver uses {cutoff}",
                op.cutoff()
            )));
        }
        Ok(op)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialBlock {
    #[default]
    Zero,
    WhiteNoise {
        variance: f64,
    },
    Mode {
        n: i64,
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// Gaussian coefficients rescaled to `‖u₀‖_{FL^{s,p}} = size`.
    Scaled {
        size: f64,
        s: f64,
        p: f64,
    },
    File {
        path: PathBuf,
    },
}

impl InitialBlock {
    pub fn build(&self, cutoff: usize, seed: u64, base: &Path) -> Result<SpectralField, CliError> {
        let mut stream = NoiseStream::new(StreamKey::new(seed, 0, Channel::InitialData));
        let f = match self {
            Self::Zero => SpectralField::zeros(cutoff),
            Self::WhiteNoise { variance } => {
                sample_white_noise_field(cutoff, *variance, &mut stream).map_err(CliError::config)?
            }
            Self::Mode { n, re, im } => {
                SpectralField::mode(cutoff, *n, num_complex::Complex64::new(*re, *im)).map_err(CliError::config)?
            }
            Self::Scaled { size, s, p } => {
                let g = SpectralField::from_fn(cutoff, |_| stream.complex_gaussian()).map_err(CliError::config)?;
                g.scaled((size / fl_norm(&g, *s, *p)).into())
            }
            Self::File { path } => SpectralField::from_csv(&read(&base.join(path))?).map_err(CliError::config)?,
        };
        if f.cutoff() != cutoff {
            return Err(CliError::Config(format!(
                "initial data has cutoff {}, solver uses {cutoff}",
                f.cutoff()
            )));
        }
        Ok(f)
    }
}

/// Parameters of the lab experiments; each command reads what it needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier_cutoffs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_multiples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dts: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_cutoff: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nmax: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<u32>,
    /// Lebesgue exponent; TOML `inf` is accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_per_sign: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub command: String,
    /// Dotted key into this config, e.g. `noise.alpha`.
    pub axis: String,
    pub values: Vec<toml::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values2: Option<Vec<toml::Value>>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn solver(&self) -> Result<&SolverConfig, CliError> {
        self.solver
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [solver] section".into()))
    }

    pub fn norm(&self) -> Result<XsbParams, CliError> {
        let n = self.norm.ok_or_else(|| CliError::Config("missing [norm] section".into()))?;
        n.validate().map_err(CliError::config)?;
        Ok(n)
    }

    /// Applies command-line overrides; the environment variable wins over the
    /// file for the output directory and `--out` wins over both.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Ok(dir) = std::env::var(OUT_ENV) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
        if let Some(o) = out {
            self.output_dir = o;
        }
        if let Some(solver) = self.solver.as_mut() {
            solver.seed = self.seed;
        }
        self
    }

    /// Makes input file paths absolute so the resolved config can be rerun
    /// from any directory.
    pub fn absolutize(mut self, base: &Path) -> Self {
        if let NoiseBlock::File { path } = &mut self.noise {
            *path = base.join(&*path);
        }
        if let InitialBlock::File { path } = &mut self.initial {
            *path = base.join(&*path);
        }
        self
    }

    /// Replaces the value at a dotted key, keeping every other field.
    pub fn with_value(&self, key: &str, value: &toml::Value) -> Result<Self, CliError> {
        let mut doc = toml::Value::try_from(self).map_err(|e| CliError::Config(e.to_string()))?;
        let mut slot = &mut doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let table = slot
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("sweep axis {key}: {part} is not inside a table")))?;
            if i + 1 == parts.len() {
                table.insert((*part).to_string(), value.clone());
                break;
            }
            slot = table
                .entry((*part).to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()));
        }
        doc.try_into().map_err(|e: toml::de::Error| CliError::Config(format!("sweep axis {key}: {e}")))
    }
}
