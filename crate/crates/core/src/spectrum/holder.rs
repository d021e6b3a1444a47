//! Empirical Hölder modulus of the IDS.
//!
//! For each sampled scale `delta` the modulus `max_E (N(E + delta) - N(E))` is computed
//! exactly by a sliding window over the sorted samples. Scales are drawn log-uniformly,
//! grouped in log bins, and the per-bin maxima (the upper envelope) are fitted by
//! `ln dN = exponent * ln delta + intercept`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gaps::linear_fit;
use super::{IdsCurve, SpectrumCloud};
use crate::error::{HarperError, Result};

/// Number of log bins in the envelope fit.
pub const HOLDER_BINS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderBin {
    pub delta: f64,
    pub modulus: f64,
    /// Left end of a maximising window.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub exponent: f64,
    pub intercept: f64,
    /// `e^{intercept}`, the empirical Hölder constant.
    pub constant: f64,
    pub r2: f64,
    pub bins: Vec<HolderBin>,
}

/// Hölder fit on a cloud; requires `delta_min >= 10 * energy_resolution`.
pub fn holder_modulus(cloud: &SpectrumCloud, pair_count: usize, scale_range: (f64, f64), seed: u64) -> Result<HolderFit> {
    let res = cloud.energy_resolution();
    if scale_range.0 < 10.0 * res {
        return Err(HarperError::invalid(format!(
            "delta_min = {} is below 10x the cloud energy resolution {res}",
            scale_range.0
        )));
    }
    holder_fit(&cloud.ids_curve, pair_count, scale_range, seed)
}

/// Hölder fit on any IDS curve.
pub fn holder_fit(curve: &IdsCurve, pair_count: usize, scale_range: (f64, f64), seed: u64) -> Result<HolderFit> {
    let (lo, hi) = scale_range;
    if !(lo > 0.0 && hi > lo) || pair_count < HOLDER_BINS {
        return Err(HarperError::invalid(format!("need 0 < delta_min < delta_max and at least {HOLDER_BINS} scales")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ll, lh) = (lo.ln(), hi.ln());
    let width = (lh - ll) / HOLDER_BINS as f64;
    let mut bins: Vec<Option<HolderBin>> = vec![None; HOLDER_BINS];
    // Every bin gets its edge scales plus random interior scales.
    let mut scales: Vec<f64> = (0..=HOLDER_BINS).map(|b| (ll + width * b as f64).exp()).collect();
    scales.extend((0..pair_count).map(|_| rng.gen_range(ll..=lh).exp()));
    for delta in scales {
        let b = (((delta.ln() - ll) / width) as usize).min(HOLDER_BINS - 1);
        let (modulus, energy) = curve.modulus(delta);
        if modulus > 0.0 && bins[b].is_none_or(|c| modulus > c.modulus) {
            bins[b] = Some(HolderBin { delta, modulus, energy });
        }
    }
    let bins: Vec<HolderBin> = bins.into_iter().flatten().collect();
    if bins.len() < 3 {
        return Err(HarperError::guard("fewer than three scales with nonzero modulus"));
    }
    let pts: Vec<(f64, f64)> = bins.iter().map(|b| (b.delta.ln(), b.modulus.ln())).collect();
    let (exponent, intercept, r2) = linear_fit(&pts);
    Ok(HolderFit { exponent, intercept, constant: intercept.exp(), r2, bins })
}
