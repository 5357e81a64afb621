//! Run configuration: a flat JSON file whose keys mirror the command-line
//! flags. Flags win over the file, `BVLAB_OUT` wins over the file's
//! `output_dir`.

use std::path::{Path, PathBuf};

use bvlab_core::constructions::Rho0;
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// A frequency cap given either as an integer or in scientific notation
/// (`1e12`); it must denote an exact integer that fits 64 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct MaxFreq(pub u64);

impl std::str::FromStr for MaxFreq {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(v) = s.parse::<u64>() {
            return MaxFreq::checked(v as f64, Some(v));
        }
        let x: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
        MaxFreq::checked(x, None)
    }
}

impl MaxFreq {
    fn checked(x: f64, exact: Option<u64>) -> Result<Self, String> {
        if let Some(v) = exact {
            return if v == 0 { Err("max_freq must be positive".into()) } else { Ok(MaxFreq(v)) };
        }
        // 2^64 is the first value that does not fit
        if !(1.0..18446744073709551616.0).contains(&x) || x.fract() != 0.0 {
            return Err(format!("max_freq {x} is not a positive integer below 2^64"));
        }
        Ok(MaxFreq(x as u64))
    }
}

impl<'de> Deserialize<'de> for MaxFreq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Float(f64),
            Str(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Int(v) => MaxFreq::checked(v as f64, Some(v)),
            Raw::Float(x) => MaxFreq::checked(x, None),
            Raw::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Contents of `--config`. Every key is optional; unknown keys are an
/// error.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub precision: Option<usize>,

    pub target: Option<String>,
    pub d: Option<u64>,
    pub rho0: Option<Rho0>,
    pub n0: Option<u64>,
    pub shells: Option<usize>,
    pub max_freq: Option<MaxFreq>,
    pub method: Option<String>,
    pub tolerance: Option<f64>,
    pub terms: Option<u32>,
    pub refine: Option<bool>,

    pub grid_d: Option<Vec<u64>>,
    pub grid_rho0: Option<Vec<Rho0>>,
    pub grid_n0: Option<Vec<u64>>,

    pub d_min: Option<u64>,
    pub d_max: Option<u64>,

    pub k: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,

    pub series: Option<PathBuf>,
    pub excess_min: Option<f64>,
    pub excess_max: Option<f64>,
    pub points: Option<usize>,

    pub mu: Option<PathBuf>,
    pub rho_in: Option<f64>,
    pub rho_out: Option<f64>,
    pub blocks: Option<u64>,
    pub r1: Option<f64>,
    pub eps: Option<f64>,
    pub rescale: Option<bool>,

    pub n: Option<usize>,
    pub samples: Option<u64>,
    pub blaschke: Option<Vec<[f64; 2]>>,
    pub degree: Option<u64>,
    pub phi: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Settings shared by every command after resolution.
#[derive(Debug, Clone, Serialize)]
pub struct Common {
    pub output_dir: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub precision: usize,
}

pub const DEFAULT_OUTPUT_DIR: &str = "bvlab-out";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PRECISION: usize = 4;

#[derive(Debug, Clone, Default, clap::Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for outputs and manifests.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Digits shown on stdout; files always carry full precision.
    #[arg(long, global = true)]
    pub precision: Option<usize>,
}

impl GlobalArgs {
    pub fn resolve(&self, file: &ConfigFile, default_format: Format) -> Common {
        let env_dir = std::env::var_os("BVLAB_OUT").map(PathBuf::from);
        Common {
            output_dir: self
                .output_dir
                .clone()
                .or(env_dir)
                .or_else(|| file.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            format: self.format.or(file.format).unwrap_or(default_format),
            seed: self.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            precision: self.precision.or(file.precision).unwrap_or(DEFAULT_PRECISION),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_freq_forms() {
        assert_eq!("1e12".parse::<MaxFreq>().unwrap(), MaxFreq(1_000_000_000_000));
        assert_eq!("18446744073709551615".parse::<MaxFreq>().unwrap(), MaxFreq(u64::MAX));
        assert!("1.5".parse::<MaxFreq>().is_err());
        assert!("2e19".parse::<MaxFreq>().is_err());
        assert!("0".parse::<MaxFreq>().is_err());
        let v: MaxFreq = serde_json::from_str("1e9").unwrap();
        assert_eq!(v, MaxFreq(1_000_000_000));
        let v: MaxFreq = serde_json::from_str("\"1e3\"").unwrap();
        assert_eq!(v, MaxFreq(1000));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"dd": 3}"#).is_err());
        let c: ConfigFile = serde_json::from_str(r#"{"d": 3, "rho0": "optimal", "max_freq": 1e6}"#).unwrap();
        assert_eq!(c.d, Some(3));
        assert_eq!(c.rho0, Some(Rho0::Optimal));
    }
}
