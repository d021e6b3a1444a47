//! Files on disk: the content-addressed cloud cache and the per-run output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use harper_core::arithmetic::Frequency;
use harper_core::operator::Coupling;
use harper_core::par::Execution;
use harper_core::spectrum::{build_cloud, CloudParams, SpectrumCloud};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{FrequencySpec, SCHEMA};
use crate::error::CliError;

pub const CACHE_ENV: &str = "HARPER_CACHE_DIR";

#[must_use]
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pretty JSON with a trailing newline. Field order follows the struct definitions, so equal
/// values always give equal bytes.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serialisable value");
    out.push(b'\n');
    out
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(tmp.display(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path.display(), e))
}

/// CSV with header `phase_index,eigenvalue`, phases in order, eigenvalues ascending.
pub fn cloud_csv(cloud: &SpectrumCloud) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["phase_index", "eigenvalue"]).expect("in-memory write");
    for (j, values) in cloud.by_phase.iter().enumerate() {
        for v in values {
            w.serialize((j, v)).expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory flush")
}

pub fn parse_cloud_csv(bytes: &[u8], params: CloudParams) -> Result<SpectrumCloud, CliError> {
    let mut by_phase = vec![Vec::with_capacity(params.n); params.phase_count];
    let mut r = csv::Reader::from_reader(bytes);
    for row in r.deserialize::<(usize, f64)>() {
        let (j, v) = row.map_err(|e| CliError::io("cloud csv", e))?;
        by_phase.get_mut(j).ok_or_else(|| CliError::io("cloud csv", format!("phase index {j} out of range")))?.push(v);
    }
    Ok(SpectrumCloud::from_phases(params, by_phase)?)
}

#[derive(Serialize)]
struct CacheKey<'a> {
    schema: &'static str,
    coupling: [f64; 3],
    frequency: &'a FrequencySpec,
    n: usize,
    phase_count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    schema: String,
    key: String,
    params: CloudParams,
    csv_sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Miss,
    Disabled,
}

/// Clouds stored as `<key>.csv` plus a `<key>.json` sidecar, where `key` is the SHA-256 of the
/// canonical JSON of (coupling, frequency spec, n, phase_count).
#[derive(Debug, Clone)]
pub struct CloudCache {
    dir: Option<PathBuf>,
}

impl CloudCache {
    /// `$HARPER_CACHE_DIR` when set, otherwise `<output_dir>/cache`; `None` when disabled.
    #[must_use]
    pub fn new(enabled: bool, output_dir: &Path) -> Self {
        let dir = enabled.then(|| std::env::var_os(CACHE_ENV).map_or_else(|| output_dir.join("cache"), PathBuf::from));
        Self { dir }
    }

    #[must_use]
    pub fn key(coupling: &Coupling, spec: &FrequencySpec, n: usize, phase_count: usize) -> String {
        let k = CacheKey { schema: SCHEMA, coupling: coupling.as_array(), frequency: spec, n, phase_count };
        sha256_hex(&serde_json::to_vec(&k).expect("serialisable key"))
    }

    pub fn cloud(
        &self,
        coupling: &Coupling,
        spec: &FrequencySpec,
        freq: &Frequency,
        n: usize,
        phase_count: usize,
    ) -> Result<(SpectrumCloud, CacheOutcome), CliError> {
        let Some(dir) = &self.dir else {
            return Ok((build_cloud(coupling, freq, n, phase_count, Execution::Parallel)?, CacheOutcome::Disabled));
        };
        let key = Self::key(coupling, spec, n, phase_count);
        let params = CloudParams { coupling: *coupling, frequency: freq.clone(), n, phase_count };
        let (csv_path, meta_path) = (dir.join(format!("{key}.csv")), dir.join(format!("{key}.json")));
        if let Some(cloud) = load(&csv_path, &meta_path, &key, &params) {
            return Ok((cloud, CacheOutcome::Hit));
        }
        let cloud = build_cloud(coupling, freq, n, phase_count, Execution::Parallel)?;
        let csv = cloud_csv(&cloud);
        let meta = Sidecar { schema: SCHEMA.into(), key, params, csv_sha256: sha256_hex(&csv) };
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
        write_atomic(&csv_path, &csv)?;
        write_atomic(&meta_path, &json_bytes(&meta))?;
        Ok((cloud, CacheOutcome::Miss))
    }
}

/// A cache entry is used only if its sidecar matches the request and the CSV digest.
fn load(csv_path: &Path, meta_path: &Path, key: &str, params: &CloudParams) -> Option<SpectrumCloud> {
    let meta: Sidecar = serde_json::from_slice(&std::fs::read(meta_path).ok()?).ok()?;
    if meta.schema != SCHEMA || meta.key != key || &meta.params != params {
        return None;
    }
    let csv = std::fs::read(csv_path).ok()?;
    if sha256_hex(&csv) != meta.csv_sha256 {
        return None;
    }
    parse_cloud_csv(&csv, params.clone()).ok()
}

/// Files written by one run, with their digests.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    pub digests: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
        Ok(Self { dir: dir.to_path_buf(), digests: BTreeMap::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.digests.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, &json_bytes(value))
    }

    /// Writes `run.json` without recording it among the digests.
    pub fn write_record<T: Serialize>(&self, value: &T) -> Result<(), CliError> {
        write_atomic(&self.dir.join("run.json"), &json_bytes(value))
    }
}
