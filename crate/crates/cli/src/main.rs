//! `harper`: desk-scale experiments on the extended Harper model.
//!
//! Settings come from built-in defaults, then the `--config` JSON document, then flags.
//! Exit codes: 0 success, 2 configuration error, 3 numeric guard tripped, 1 anything else.

mod commands;
mod config;
mod error;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use harper_core::spectrum::DEFAULT_MAX_LABEL;
use serde::Serialize;
use serde_json::Value;

use crate::commands::{Context, EnergyGrid};
use crate::config::{FrequencySpec, Overrides, RunConfig, SCHEMA};
use crate::error::CliError;
use crate::store::{json_bytes, sha256_hex, CloudCache, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "harper", version, about = "Spectral and reducibility numerics for the extended Harper model")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Each replaces the config key of the same name.
#[derive(Debug, clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// `l1,l2,l3`.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    coupling: Option<Vec<f64>>,
    /// Literal frequency in (0, 1).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Golden-mean frequency.
    #[arg(long, global = true)]
    golden: bool,
    /// Continued-fraction coefficients `a1,a2,...`.
    #[arg(long, global = true, value_delimiter = ',')]
    cf_coeffs: Option<Vec<u64>>,
    /// Liouville frequency `target_beta,depth`.
    #[arg(long, global = true, value_delimiter = ',')]
    liouville: Option<Vec<f64>>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    phase_count: Option<usize>,
    #[arg(long, global = true)]
    fourier_cutoff: Option<usize>,
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Enable or disable the cloud cache.
    #[arg(long, global = true)]
    cache: Option<bool>,
    /// Worker threads; defaults to one per core. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Eigenvalue cloud (cloud.csv) and labelled gaps (gaps.json).
    Spectrum {
        #[arg(long, default_value_t = DEFAULT_MAX_LABEL)]
        max_label: i64,
    },
    /// Integrated density of states on an energy grid (ids.csv).
    Ids {
        #[command(flatten)]
        grid: EnergyGrid,
    },
    /// Lyapunov exponents and Thouless residuals on an energy grid (lyapunov.csv).
    Lyapunov {
        #[command(flatten)]
        grid: EnergyGrid,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 64)]
        lyap_phases: usize,
    },
    /// Hölder fit of the IDS modulus of continuity (holder.json).
    Holder {
        #[arg(long, default_value_t = 400)]
        pairs: usize,
        #[arg(long, default_value_t = 1e-4)]
        delta_min: f64,
        #[arg(long, default_value_t = 1e-2)]
        delta_max: f64,
    },
    /// Window measures at sampled spectral energies (homogeneity.json).
    Homogeneity {
        /// Comma-separated window half-widths.
        #[arg(long, value_delimiter = ',', default_value = "1e-3")]
        sigma: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        samples: usize,
    },
    /// Distance between the spectrum and the scaled dual spectrum (duality.json).
    Duality {
        /// Number of times `n` is doubled for the trend.
        #[arg(long, default_value_t = 1)]
        doublings: usize,
    },
    /// Almost-reducibility pipeline at one energy (reduce.json).
    Reduce {
        #[arg(long, allow_negative_numbers = true)]
        energy: f64,
        #[arg(long, default_value_t = 4096)]
        theta_grid: usize,
    },
    /// Eigenvalues over a frequency sweep (butterfly.csv).
    Butterfly {
        #[arg(long, default_value_t = 0.01)]
        alpha_min: f64,
        #[arg(long, default_value_t = 0.99)]
        alpha_max: f64,
        #[arg(long, default_value_t = 99)]
        alpha_count: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Spectrum { .. } => "spectrum",
            Self::Ids { .. } => "ids",
            Self::Lyapunov { .. } => "lyapunov",
            Self::Holder { .. } => "holder",
            Self::Homogeneity { .. } => "homogeneity",
            Self::Duality { .. } => "duality",
            Self::Reduce { .. } => "reduce",
            Self::Butterfly { .. } => "butterfly",
        }
    }
}

impl Common {
    fn overrides(&self) -> Result<Overrides, CliError> {
        let coupling = match &self.coupling {
            None => None,
            Some(v) => Some(<[f64; 3]>::try_from(v.as_slice()).map_err(|_| CliError::config("coupling", "need three values"))?),
        };
        let mut freqs = Vec::new();
        if self.golden {
            freqs.push(FrequencySpec::Golden);
        }
        if let Some(a) = self.alpha {
            freqs.push(FrequencySpec::Value(a));
        }
        if let Some(c) = &self.cf_coeffs {
            freqs.push(FrequencySpec::CfCoeffs(c.clone()));
        }
        if let Some(l) = &self.liouville {
            let [beta, depth] = <[f64; 2]>::try_from(l.as_slice())
                .map_err(|_| CliError::config("frequency.liouville", "need target_beta,depth"))?;
            if !(depth >= 0.0 && depth.fract() == 0.0) {
                return Err(CliError::config("frequency.liouville.depth", "must be a non-negative integer"));
            }
            freqs.push(FrequencySpec::Liouville { target_beta: beta, depth: depth as usize });
        }
        if freqs.len() > 1 {
            return Err(CliError::config("frequency", "give at most one of --golden, --alpha, --cf-coeffs, --liouville"));
        }
        Ok(Overrides {
            coupling,
            frequency: freqs.pop(),
            n: self.n,
            phase_count: self.phase_count,
            fourier_cutoff: self.fourier_cutoff,
            m: self.m,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
            cache: self.cache,
        })
    }
}

/// Everything that determines the numeric outputs; its digest is the run's content hash.
#[derive(Serialize)]
struct Hashed<'a> {
    schema: &'static str,
    command: &'a Command,
    coupling: [f64; 3],
    frequency: &'a FrequencySpec,
    n: usize,
    phase_count: usize,
    fourier_cutoff: usize,
    m: usize,
    seed: u64,
    outputs: &'a std::collections::BTreeMap<String, String>,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    schema: &'static str,
    command: &'static str,
    arguments: &'a Command,
    config: &'a RunConfig,
    frequency: &'a harper_core::arithmetic::Frequency,
    summary: Value,
    outputs: &'a std::collections::BTreeMap<String, String>,
    content_hash: String,
    /// Seconds since the Unix epoch; not part of `content_hash`.
    timestamp: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(cli.common.overrides()?);
    let resolved = cfg.resolve()?;
    if resolved.frequency.precision_warning() {
        eprintln!("warning: convergent denominators exceed the reliable precision range");
    }
    let cache = CloudCache::new(resolved.config.cache, &resolved.config.output_dir);
    let out = OutputDir::create(&resolved.config.output_dir)?;
    let mut ctx = Context { run: resolved, cache, out };

    let summary = match &cli.command {
        Command::Spectrum { max_label } => commands::spectrum(&mut ctx, *max_label),
        Command::Ids { grid } => commands::ids_grid(&mut ctx, grid),
        Command::Lyapunov { grid, steps, lyap_phases } => commands::lyapunov(&mut ctx, grid, *steps, *lyap_phases),
        Command::Holder { pairs, delta_min, delta_max } => commands::holder(&mut ctx, *pairs, *delta_min, *delta_max),
        Command::Homogeneity { sigma, samples } => commands::homogeneity_sweep(&mut ctx, sigma, *samples),
        Command::Duality { doublings } => commands::duality(&mut ctx, *doublings),
        Command::Reduce { energy, theta_grid } => commands::reduce_at(&mut ctx, *energy, *theta_grid),
        Command::Butterfly { alpha_min, alpha_max, alpha_count } => {
            commands::butterfly(&mut ctx, *alpha_min, *alpha_max, *alpha_count)
        }
    }?;

    let c = &ctx.run.config;
    let hashed = Hashed {
        schema: SCHEMA,
        command: &cli.command,
        coupling: c.coupling,
        frequency: &c.frequency,
        n: c.n,
        phase_count: c.phase_count,
        fourier_cutoff: c.fourier_cutoff,
        m: c.m,
        seed: c.seed,
        outputs: &ctx.out.digests,
    };
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let record = RunRecord {
        schema: SCHEMA,
        command: cli.command.name(),
        arguments: &cli.command,
        config: c,
        frequency: &ctx.run.frequency,
        summary,
        outputs: &ctx.out.digests,
        content_hash: sha256_hex(&json_bytes(&hashed)),
        timestamp,
    };
    ctx.out.write_record(&record)?;
    println!("{}", record.content_hash);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.common.workers {
        if w == 0 {
            eprintln!("error: workers: must be positive");
            return ExitCode::from(2);
        }
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
