//! Subcommand bodies. Each writes its outputs and returns a JSON summary for `run.json`.

use harper_core::arithmetic::Frequency;
use harper_core::cocycle::{lyapunov_closed_form, lyapunov_numeric, CocycleKind, HarperCocycle};
use harper_core::operator::{dual_coupling, eigenvalues, Coupling};
use harper_core::par::{try_map_range, Execution};
use harper_core::reducibility::{reduce, ReduceSettings};
use harper_core::spectrum::{
    detect_gaps, duality_from_clouds, gap_decay_report, holder_modulus, homogeneity, ids, thouless_residual,
    DualityReport, EmpiricalSpectrum, GapDecay, GapReport, HolderFit, HomogeneityReport, SpectrumCloud,
    DEFAULT_MAX_LABEL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Resolved, SCHEMA};
use crate::error::CliError;
use crate::store::{CacheOutcome, CloudCache, OutputDir};

pub struct Context {
    pub run: Resolved,
    pub cache: CloudCache,
    pub out: OutputDir,
}

impl Context {
    fn cloud_for(&self, coupling: &Coupling, n: usize, phase_count: usize) -> Result<SpectrumCloud, CliError> {
        let spec = &self.run.config.frequency;
        let (cloud, outcome) = self.cache.cloud(coupling, spec, &self.run.frequency, n, phase_count)?;
        if outcome == CacheOutcome::Hit {
            eprintln!("cloud n={n} P={phase_count}: cache hit");
        }
        Ok(cloud)
    }

    fn cloud(&self) -> Result<SpectrumCloud, CliError> {
        self.cloud_for(&self.run.coupling, self.run.config.n, self.run.config.phase_count)
    }

    fn freq(&self) -> &Frequency {
        &self.run.frequency
    }
}

/// Equispaced grid, or the explicit list when given. Bounds default to the cloud hull widened
/// by a quarter of its width on each side.
#[derive(Debug, Clone, clap::Args, Serialize)]
pub struct EnergyGrid {
    #[arg(long, allow_negative_numbers = true)]
    pub e_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub e_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub e_count: usize,
    /// Comma-separated energies; replaces the grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub energies: Option<Vec<f64>>,
}

impl EnergyGrid {
    fn points(&self, cloud: &SpectrumCloud) -> Result<Vec<f64>, CliError> {
        if let Some(list) = &self.energies {
            if list.is_empty() || list.iter().any(|e| !e.is_finite()) {
                return Err(CliError::config("energies", "need finite values"));
            }
            return Ok(list.clone());
        }
        let (lo, hi) = (cloud.ids_curve.min(), cloud.ids_curve.max());
        let pad = 0.25 * (hi - lo);
        let (a, b) = (self.e_min.unwrap_or(lo - pad), self.e_max.unwrap_or(hi + pad));
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(CliError::config("e-min", format!("need finite e-min <= e-max, got {a}, {b}")));
        }
        if self.e_count == 0 || (self.e_count == 1 && a != b) {
            return Err(CliError::config("e-count", "need at least 2 points for a proper interval"));
        }
        let step = if self.e_count > 1 { (b - a) / (self.e_count - 1) as f64 } else { 0.0 };
        Ok((0..self.e_count).map(|i| if i + 1 == self.e_count { b } else { a + step * i as f64 }).collect())
    }
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

#[derive(Serialize)]
struct GapsFile<'a> {
    schema: &'static str,
    report: &'a GapReport,
    /// Absent when fewer than five gaps were labelled.
    decay: Option<GapDecay>,
}

pub fn spectrum(ctx: &mut Context, max_label: i64) -> Result<Value, CliError> {
    let cloud = ctx.cloud()?;
    let report = detect_gaps(&cloud, max_label, None)?;
    let decay = gap_decay_report(&report.gaps, &ctx.run.coupling).ok();
    ctx.out.write("cloud.csv", &crate::store::cloud_csv(&cloud))?;
    ctx.out.write_json("gaps.json", &GapsFile { schema: SCHEMA, report: &report, decay })?;
    Ok(json!({ "gap_count": report.gaps.len(), "decay": decay, "min": cloud.ids_curve.min(), "max": cloud.ids_curve.max() }))
}

pub fn ids_grid(ctx: &mut Context, grid: &EnergyGrid) -> Result<Value, CliError> {
    let cloud = ctx.cloud()?;
    let points = grid.points(&cloud)?;
    let rows: Vec<(f64, f64)> = points.iter().map(|&e| (e, ids(&cloud, e))).collect();
    ctx.out.write("ids.csv", &csv_bytes(&["E", "ids"], &rows))?;
    Ok(json!({ "points": rows.len() }))
}

pub fn lyapunov(ctx: &mut Context, grid: &EnergyGrid, steps: usize, phases: usize) -> Result<Value, CliError> {
    let cloud = ctx.cloud()?;
    let lam = ctx.run.coupling;
    let alpha = ctx.freq().value;
    let closed = lyapunov_closed_form(&lam).ok();
    let points = grid.points(&cloud)?;
    let mut rows = Vec::with_capacity(points.len());
    for e in points {
        let coc = HarperCocycle::new(lam, alpha, e, CocycleKind::Renormalized);
        let numeric = lyapunov_numeric(&coc, steps, phases, Execution::Parallel)?.value;
        let residual = thouless_residual(&cloud, &lam, e, numeric)?.residual;
        rows.push((e, numeric, closed, residual));
    }
    let worst = rows.iter().map(|r| r.3.abs()).fold(0.0, f64::max);
    ctx.out.write("lyapunov.csv", &csv_bytes(&["E", "numeric", "closed_form", "thouless_residual"], &rows))?;
    Ok(json!({ "points": rows.len(), "closed_form": closed, "max_abs_thouless_residual": worst }))
}

#[derive(Serialize)]
struct HolderFile<'a> {
    schema: &'static str,
    pairs: usize,
    delta_range: (f64, f64),
    seed: u64,
    energy_resolution: f64,
    fit: &'a HolderFit,
}

pub fn holder(ctx: &mut Context, pairs: usize, delta_min: f64, delta_max: f64) -> Result<Value, CliError> {
    let cloud = ctx.cloud()?;
    let seed = ctx.run.config.seed;
    let fit = holder_modulus(&cloud, pairs, (delta_min, delta_max), seed)?;
    let file = HolderFile {
        schema: SCHEMA,
        pairs,
        delta_range: (delta_min, delta_max),
        seed,
        energy_resolution: cloud.energy_resolution(),
        fit: &fit,
    };
    ctx.out.write_json("holder.json", &file)?;
    Ok(json!({ "exponent": fit.exponent, "constant": fit.constant, "r2": fit.r2 }))
}

/// `count` energies drawn uniformly from the empirical spectrum (hull minus labelled gaps).
pub fn sample_energies(cloud: &SpectrumCloud, gaps: &GapReport, count: usize, seed: u64) -> Vec<f64> {
    let spec = EmpiricalSpectrum::from_gaps(cloud.ids_curve.min(), cloud.ids_curve.max(), gaps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| spec.point_at_fraction(rng.gen::<f64>())).collect()
}

#[derive(Serialize)]
struct HomogeneityFile {
    schema: &'static str,
    seed: u64,
    sigmas: Vec<f64>,
    min_ratio: f64,
    reports: Vec<HomogeneityReport>,
}

pub fn homogeneity_sweep(ctx: &mut Context, sigmas: &[f64], samples: usize) -> Result<Value, CliError> {
    if sigmas.is_empty() || samples == 0 {
        return Err(CliError::config("sigma", "need at least one sigma and one sample"));
    }
    let cloud = ctx.cloud()?;
    let gaps = detect_gaps(&cloud, DEFAULT_MAX_LABEL, None)?;
    let seed = ctx.run.config.seed;
    let energies = sample_energies(&cloud, &gaps, samples, seed);
    let mut reports = Vec::with_capacity(energies.len() * sigmas.len());
    for &e in &energies {
        for &s in sigmas {
            reports.push(homogeneity(&cloud, &gaps, e, s)?);
        }
    }
    let min_ratio = reports.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    ctx.out.write_json("homogeneity.json", &HomogeneityFile { schema: SCHEMA, seed, sigmas: sigmas.to_vec(), min_ratio, reports })?;
    Ok(json!({ "min_ratio": min_ratio }))
}

#[derive(Serialize)]
struct DualityFile {
    schema: &'static str,
    /// Distance at the configured `n`.
    distance: f64,
    /// One report per `n, 2n, 4n, ...`.
    trend: Vec<DualityReport>,
    decreasing: bool,
}

pub fn duality(ctx: &mut Context, doublings: usize) -> Result<Value, CliError> {
    let lam = ctx.run.coupling;
    let dual = dual_coupling(&lam)?;
    let p = ctx.run.config.phase_count;
    let mut trend = Vec::with_capacity(doublings + 1);
    for i in 0..=doublings {
        let n = ctx.run.config.n.checked_shl(i as u32).ok_or_else(|| CliError::config("doublings", "too many"))?;
        let primal = ctx.cloud_for(&lam, n, p)?;
        let dual_cloud = ctx.cloud_for(&dual, n, p)?;
        trend.push(duality_from_clouds(&primal, &dual_cloud)?);
    }
    let decreasing = trend.windows(2).all(|w| w[1].distance <= w[0].distance);
    let distance = trend[0].distance;
    ctx.out.write_json("duality.json", &DualityFile { schema: SCHEMA, distance, trend, decreasing })?;
    Ok(json!({ "distance": distance, "decreasing": decreasing }))
}

pub fn reduce_at(ctx: &mut Context, energy: f64, theta_grid: usize) -> Result<Value, CliError> {
    let settings = ReduceSettings {
        m: ctx.run.config.m,
        fourier_cutoff: ctx.run.config.fourier_cutoff,
        theta_grid,
        ..ReduceSettings::default()
    };
    let chain = reduce(&ctx.run.coupling, ctx.freq(), energy, &settings, Execution::Parallel)?;
    ctx.out.write_json("reduce.json", &json!({ "schema": SCHEMA, "settings": settings, "chain": chain }))?;
    Ok(json!({
        "theta": chain.search.wave.theta,
        "certificate_spread": chain.certificate_spread,
        "q_residual": chain.q_residual,
    }))
}

pub fn butterfly(ctx: &mut Context, alpha_min: f64, alpha_max: f64, count: usize) -> Result<Value, CliError> {
    if !(alpha_min > 0.0 && alpha_max < 1.0 && alpha_min <= alpha_max) {
        return Err(CliError::config("alpha-min", format!("need 0 < alpha-min <= alpha-max < 1, got {alpha_min}, {alpha_max}")));
    }
    if count == 0 || (count == 1 && alpha_min != alpha_max) {
        return Err(CliError::config("alpha-count", "need at least 2 points for a proper interval"));
    }
    let (lam, n, p) = (ctx.run.coupling, ctx.run.config.n, ctx.run.config.phase_count);
    let step = if count > 1 { (alpha_max - alpha_min) / (count - 1) as f64 } else { 0.0 };
    let alphas: Vec<f64> = (0..count).map(|i| if i + 1 == count { alpha_max } else { alpha_min + step * i as f64 }).collect();
    let spectra = try_map_range(Execution::Parallel, count * p, |k| {
        eigenvalues(&lam, alphas[k / p], (k % p) as f64 / p as f64, n)
    })?;
    let mut rows = Vec::with_capacity(count * p * n);
    for (i, &a) in alphas.iter().enumerate() {
        let mut pooled: Vec<f64> = spectra[i * p..(i + 1) * p].iter().flatten().copied().collect();
        pooled.sort_by(f64::total_cmp);
        rows.extend(pooled.into_iter().map(|e| (a, e)));
    }
    ctx.out.write("butterfly.csv", &csv_bytes(&["alpha", "eigenvalue"], &rows))?;
    Ok(json!({ "alphas": count, "rows": rows.len() }))
}
