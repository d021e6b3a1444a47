//! Phase-averaged spectra and the integrated density of states.
//!
//! A [`SpectrumCloud`] holds the eigenvalues of Dirichlet truncations on an equispaced
//! phase grid; its [`IdsCurve`] is the empirical IDS `N(E) = #{eigenvalues <= E} / (n P)`.
//! Everything downstream (gaps, Hölder fits, homogeneity, duality) reads the sorted samples.

pub mod duality;
pub mod gaps;
pub mod holder;
pub mod homogeneity;
pub mod thouless;

use serde::{Deserialize, Serialize};

use crate::arithmetic::Frequency;
use crate::error::{HarperError, Result};
use crate::operator::{eigenvalues, norm_bound, Coupling};
use crate::par::{try_map_range, Execution};

pub use duality::{duality_check, duality_from_clouds, hausdorff_distance, DualityReport, EmpiricalSpectrum};
pub use gaps::{detect_gaps, detect_plateaus, gap_decay_report, GapDecay, GapRecord, GapReport, Plateau, DEFAULT_MAX_LABEL};
pub use holder::{holder_fit, holder_modulus, HolderBin, HolderFit};
pub use homogeneity::{homogeneity, HomogeneityReport};
pub use thouless::{thouless_residual, ThoulessReport, SINGULAR_WINDOW};

/// Largest `n * phase_count` accepted by [`build_cloud`].
pub const MAX_CLOUD_SAMPLES: usize = 100_000_000;

/// Parameters identifying a cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudParams {
    pub coupling: Coupling,
    pub frequency: Frequency,
    pub n: usize,
    pub phase_count: usize,
}

/// Empirical IDS: a right-continuous step function over sorted samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IdsCurve {
    samples: Vec<f64>,
}

impl IdsCurve {
    /// # Panics
    /// On an empty or non-finite sample list.
    #[must_use]
    pub fn new(mut samples: Vec<f64>) -> Self {
        assert!(!samples.is_empty(), "IDS needs samples");
        assert!(samples.iter().all(|s| s.is_finite()), "IDS samples must be finite");
        samples.sort_by(f64::total_cmp);
        Self { samples }
    }

    #[must_use]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    #[must_use]
    pub fn total(&self) -> usize {
        self.samples.len()
    }

    #[must_use]
    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    #[must_use]
    pub fn max(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    /// `#{s <= e}`.
    #[must_use]
    pub fn count_le(&self, e: f64) -> usize {
        self.samples.partition_point(|&s| s <= e)
    }

    /// Step-function value `#{s <= e} / total`.
    #[must_use]
    pub fn eval(&self, e: f64) -> f64 {
        self.count_le(e) as f64 / self.total() as f64
    }

    /// Monotone interpolation: linear between consecutive samples, matching
    /// [`IdsCurve::eval`] at every sample.
    #[must_use]
    pub fn eval_interpolated(&self, e: f64) -> f64 {
        let k = self.count_le(e);
        let t = self.total();
        if k == 0 || k == t {
            return k as f64 / t as f64;
        }
        let (a, b) = (self.samples[k - 1], self.samples[k]);
        let frac = if b > a { (e - a) / (b - a) } else { 0.0 };
        (k as f64 + frac) / t as f64
    }

    /// `max_E (N(E + delta) - N(E-))`: the largest fraction of samples in a closed window of
    /// length `delta`, with the left end of a maximising window.
    #[must_use]
    pub fn modulus(&self, delta: f64) -> (f64, f64) {
        let s = &self.samples;
        let mut best = 0usize;
        let mut at = s[0];
        let mut j = 0usize;
        for i in 0..s.len() {
            if j < i {
                j = i;
            }
            while j + 1 < s.len() && s[j + 1] <= s[i] + delta {
                j += 1;
            }
            if j + 1 - i > best {
                best = j + 1 - i;
                at = s[i];
            }
        }
        (best as f64 / s.len() as f64, at)
    }

    /// Median spacing of consecutive samples.
    #[must_use]
    pub fn median_spacing(&self) -> f64 {
        let mut d: Vec<f64> = self.samples.windows(2).map(|w| w[1] - w[0]).collect();
        if d.is_empty() {
            return 0.0;
        }
        let mid = d.len() / 2;
        *d.select_nth_unstable_by(mid, f64::total_cmp).1
    }
}

/// Eigenvalues of the truncations at phases `j / P`, with their IDS.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCloud {
    pub params: CloudParams,
    /// Ascending eigenvalues per phase index.
    pub by_phase: Vec<Vec<f64>>,
    pub ids_curve: IdsCurve,
}

impl SpectrumCloud {
    /// Reassembles a cloud from per-phase eigenvalues (e.g. read back from disk).
    pub fn from_phases(params: CloudParams, by_phase: Vec<Vec<f64>>) -> Result<Self> {
        if by_phase.len() != params.phase_count || by_phase.iter().any(|v| v.len() != params.n) {
            return Err(HarperError::invalid("per-phase eigenvalue lists do not match the cloud parameters"));
        }
        let all: Vec<f64> = by_phase.iter().flatten().copied().collect();
        if all.iter().any(|v| !v.is_finite()) {
            return Err(HarperError::guard("non-finite eigenvalue in cloud"));
        }
        Ok(Self { params, by_phase, ids_curve: IdsCurve::new(all) })
    }

    #[must_use]
    pub fn alpha(&self) -> f64 {
        self.params.frequency.value
    }

    #[must_use]
    pub fn samples(&self) -> &[f64] {
        self.ids_curve.samples()
    }

    /// `(E_max - E_min) / n`: level spacing of a single truncation, the scale on which
    /// plateaus of the IDS are resolved.
    #[must_use]
    pub fn level_spacing(&self) -> f64 {
        (self.ids_curve.max() - self.ids_curve.min()) / self.params.n as f64
    }

    /// `(E_max - E_min) / (n P)`: mean spacing of the pooled samples.
    #[must_use]
    pub fn energy_resolution(&self) -> f64 {
        (self.ids_curve.max() - self.ids_curve.min()) / self.ids_curve.total() as f64
    }
}

/// Diagonalises the truncation of size `n` at each phase `j / phase_count`.
pub fn build_cloud(lam: &Coupling, freq: &Frequency, n: usize, phase_count: usize, exec: Execution) -> Result<SpectrumCloud> {
    if n == 0 || phase_count == 0 {
        return Err(HarperError::invalid("n and phase_count must be positive"));
    }
    if n.saturating_mul(phase_count) > MAX_CLOUD_SAMPLES {
        return Err(HarperError::guard(format!("n * phase_count = {} exceeds {MAX_CLOUD_SAMPLES}", n * phase_count)));
    }
    let alpha = freq.value;
    let by_phase = try_map_range(exec, phase_count, |j| eigenvalues(lam, alpha, j as f64 / phase_count as f64, n))?;
    let bound = norm_bound(lam) + 1e-9;
    if by_phase.iter().flatten().any(|e| e.abs() > bound) {
        return Err(HarperError::guard("eigenvalue outside the operator norm bound"));
    }
    let params = CloudParams { coupling: *lam, frequency: freq.clone(), n, phase_count };
    SpectrumCloud::from_phases(params, by_phase)
}

/// `N(E)` for a cloud (step-function form).
#[must_use]
pub fn ids(cloud: &SpectrumCloud, e: f64) -> f64 {
    cloud.ids_curve.eval(e)
}
