//! Window measure of the empirical spectrum around a point of the spectrum.

use serde::{Deserialize, Serialize};

use super::duality::EmpiricalSpectrum;
use super::gaps::GapReport;
use super::SpectrumCloud;
use crate::error::{HarperError, Result};

/// Overlap of the window with one labelled gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapOverlap {
    pub label: i64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub energy: f64,
    pub sigma: f64,
    /// `Leb((E - sigma, E + sigma) ∩ Σ)`.
    pub measure: f64,
    /// `measure / sigma`; Carleson homogeneity asks for a uniform lower bound.
    pub ratio: f64,
    /// Labels of the gaps the window meets, with the overlap lengths.
    pub overlaps: Vec<GapOverlap>,
    /// Overlap with `(-inf, E_min)`.
    pub below: f64,
    /// Overlap with `(E_max, inf)`.
    pub above: f64,
    /// `|measure + Σ overlaps + below + above - 2 sigma|`, with `measure` taken from the
    /// interval union rather than by subtraction.
    pub additivity_defect: f64,
}

fn overlap(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    (b.min(hi) - a.max(lo)).max(0.0)
}

/// Measures `(E - sigma, E + sigma)` against the hull of the cloud minus its labelled gaps.
pub fn homogeneity(cloud: &SpectrumCloud, gaps: &GapReport, energy: f64, sigma: f64) -> Result<HomogeneityReport> {
    let spec = EmpiricalSpectrum::from_gaps(cloud.ids_curve.min(), cloud.ids_curve.max(), gaps);
    if !(sigma > 0.0) || sigma > spec.diameter() {
        return Err(HarperError::invalid(format!("sigma must lie in (0, {}], got {sigma}", spec.diameter())));
    }
    if !spec.contains(energy) {
        return Err(HarperError::invalid(format!("E = {energy} is not in the empirical spectrum")));
    }
    let (lo, hi) = (energy - sigma, energy + sigma);
    let overlaps: Vec<GapOverlap> = gaps
        .gaps
        .iter()
        .map(|g| GapOverlap { label: g.label, length: overlap(g.lower, g.upper, lo, hi) })
        .filter(|o| o.length > 0.0)
        .collect();
    let below = overlap(f64::NEG_INFINITY, spec.min(), lo, hi);
    let above = overlap(spec.max(), f64::INFINITY, lo, hi);
    let measure = spec.measure_in(lo, hi);
    let removed: f64 = overlaps.iter().map(|o| o.length).sum::<f64>() + below + above;
    Ok(HomogeneityReport {
        energy,
        sigma,
        measure,
        ratio: measure / sigma,
        overlaps,
        below,
        above,
        additivity_defect: (measure + removed - 2.0 * sigma).abs(),
    })
}
