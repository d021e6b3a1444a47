//! Run configuration: a single JSON document, overridden key by key from the command line.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file, command-line flags.

use std::path::{Path, PathBuf};

use harper_core::arithmetic::{continued_fraction, liouville_frequency, Frequency};
use harper_core::operator::Coupling;
use harper_core::spectrum::MAX_CLOUD_SAMPLES;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA: &str = "v1";
/// Largest Liouville construction depth accepted in a config.
pub const MAX_LIOUVILLE_DEPTH: usize = 12;
/// Continued-fraction depth used for literal and golden frequencies.
pub const EXPANSION_DEPTH: usize = 30;

/// How the frequency is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FrequencySpec {
    /// `(sqrt 5 - 1) / 2`.
    Golden,
    Value(f64),
    CfCoeffs(Vec<u64>),
    Liouville { target_beta: f64, depth: usize },
}

impl FrequencySpec {
    pub fn resolve(&self) -> Result<Frequency, CliError> {
        let r = match self {
            Self::Golden => Frequency::golden(EXPANSION_DEPTH),
            Self::Value(v) => {
                if !(*v > 0.0 && *v < 1.0) {
                    return Err(CliError::config("frequency.value", format!("must lie in (0, 1), got {v}")));
                }
                continued_fraction(*v, EXPANSION_DEPTH)
            }
            Self::CfCoeffs(c) => Frequency::from_coefficients(c),
            Self::Liouville { target_beta, depth } => {
                if *depth > MAX_LIOUVILLE_DEPTH {
                    return Err(CliError::config(
                        "frequency.liouville.depth",
                        format!("must be at most {MAX_LIOUVILLE_DEPTH}, got {depth}"),
                    ));
                }
                liouville_frequency(*target_beta, *depth)
            }
        };
        r.map_err(|e| CliError::config(self.key(), e.to_string()))
    }

    fn key(&self) -> &'static str {
        match self {
            Self::Golden => "frequency",
            Self::Value(_) => "frequency.value",
            Self::CfCoeffs(_) => "frequency.cf_coeffs",
            Self::Liouville { .. } => "frequency.liouville",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub coupling: [f64; 3],
    pub frequency: FrequencySpec,
    pub n: usize,
    pub phase_count: usize,
    pub fourier_cutoff: usize,
    pub m: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub cache: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA.into(),
            coupling: [0.0, 2.0, 0.0],
            frequency: FrequencySpec::Golden,
            n: 500,
            phase_count: 32,
            fourier_cutoff: 64,
            m: 400,
            seed: 0,
            output_dir: PathBuf::from("harper-out"),
            cache: true,
        }
    }
}

/// Command-line values that replace config keys when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub coupling: Option<[f64; 3]>,
    pub frequency: Option<FrequencySpec>,
    pub n: Option<usize>,
    pub phase_count: Option<usize>,
    pub fourier_cutoff: Option<usize>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub cache: Option<bool>,
}

/// A validated configuration with its frequency expanded.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub coupling: Coupling,
    pub frequency: Frequency,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config: cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: Overrides) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { self.$f = v; })* };
        }
        set!(coupling, frequency, n, phase_count, fourier_cutoff, m, seed, output_dir, cache);
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        if self.schema != SCHEMA {
            return Err(CliError::config("schema", format!("expected \"{SCHEMA}\", got \"{}\"", self.schema)));
        }
        let [l1, l2, l3] = self.coupling;
        let coupling = Coupling::new(l1, l2, l3).map_err(|e| CliError::config("coupling", e.to_string()))?;
        for (key, v) in [("n", self.n), ("phase_count", self.phase_count), ("fourier_cutoff", self.fourier_cutoff), ("m", self.m)] {
            if v == 0 {
                return Err(CliError::config(key, "must be positive"));
            }
        }
        if self.n.saturating_mul(self.phase_count) > MAX_CLOUD_SAMPLES {
            return Err(CliError::config("phase_count", format!("n * phase_count must not exceed {MAX_CLOUD_SAMPLES}")));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(CliError::config("output_dir", "must not be empty"));
        }
        let frequency = self.frequency.resolve()?;
        Ok(Resolved { config: self, coupling, frequency })
    }
}
