//! Aubry duality `Σ_λ = λ₂ Σ_σ(λ)` checked on empirical spectra.

use serde::{Deserialize, Serialize};

use super::gaps::{detect_gaps, GapReport, DEFAULT_MAX_LABEL};
use super::{build_cloud, SpectrumCloud};
use crate::arithmetic::Frequency;
use crate::error::{HarperError, Result};
use crate::operator::{dual_coupling, Coupling};
use crate::par::Execution;

/// A finite union of disjoint closed intervals, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectrum {
    intervals: Vec<(f64, f64)>,
}

impl EmpiricalSpectrum {
    /// Normalises arbitrary intervals into a sorted disjoint union.
    ///
    /// # Panics
    /// On an empty list or a reversed interval.
    #[must_use]
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Self {
        assert!(!intervals.is_empty(), "empirical spectrum needs an interval");
        assert!(intervals.iter().all(|(a, b)| a <= b), "interval ends out of order");
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Self { intervals: merged }
    }

    /// `[lo, hi]` minus the open labelled gaps.
    #[must_use]
    pub fn from_gaps(lo: f64, hi: f64, gaps: &GapReport) -> Self {
        let mut cuts: Vec<(f64, f64)> = gaps.gaps.iter().map(|g| (g.lower, g.upper)).collect();
        cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out = Vec::new();
        let mut start = lo;
        for (a, b) in cuts {
            if a > start {
                out.push((start, a.min(hi)));
            }
            start = start.max(b);
            if start >= hi {
                break;
            }
        }
        if start <= hi {
            out.push((start, hi));
        }
        if out.is_empty() {
            out.push((lo, lo));
        }
        Self::new(out)
    }

    #[must_use]
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    #[must_use]
    pub fn min(&self) -> f64 {
        self.intervals[0].0
    }

    #[must_use]
    pub fn max(&self) -> f64 {
        self.intervals[self.intervals.len() - 1].1
    }

    #[must_use]
    pub fn diameter(&self) -> f64 {
        self.max() - self.min()
    }

    #[must_use]
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Lebesgue measure of the intersection with `[lo, hi]`.
    #[must_use]
    pub fn measure_in(&self, lo: f64, hi: f64) -> f64 {
        self.intervals.iter().map(|&(a, b)| (b.min(hi) - a.max(lo)).max(0.0)).sum()
    }

    #[must_use]
    pub fn contains(&self, x: f64) -> bool {
        self.distance_to(x) == 0.0
    }

    /// Distance from `x` to the set.
    #[must_use]
    pub fn distance_to(&self, x: f64) -> f64 {
        let iv = &self.intervals;
        let k = iv.partition_point(|&(a, _)| a <= x);
        let mut d = f64::INFINITY;
        if k > 0 {
            d = d.min((x - iv[k - 1].1).max(0.0));
        }
        if k < iv.len() {
            d = d.min(iv[k].0 - x);
        }
        d
    }

    /// The point at which the measure of the set to its left equals `t * measure()`.
    /// Maps uniform `t` in `[0, 1]` to the uniform distribution on the set.
    #[must_use]
    pub fn point_at_fraction(&self, t: f64) -> f64 {
        let mut left = t.clamp(0.0, 1.0) * self.measure();
        for &(a, b) in &self.intervals {
            if left <= b - a {
                return a + left;
            }
            left -= b - a;
        }
        self.max()
    }

    /// Image under `x -> factor * x` for `factor > 0`.
    #[must_use]
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0, "scale factor must be positive");
        Self { intervals: self.intervals.iter().map(|&(a, b)| (a * factor, b * factor)).collect() }
    }

    /// Midpoints of the bounded gaps.
    fn gap_midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.intervals.windows(2).map(|w| 0.5 * (w[0].1 + w[1].0))
    }
}

/// `sup_{x in a} dist(x, b)`. On each interval of `a` the distance to `b` is piecewise
/// linear with maxima at the interval ends or at midpoints of the gaps of `b`.
fn directed(a: &EmpiricalSpectrum, b: &EmpiricalSpectrum) -> f64 {
    let mut worst = 0.0f64;
    for &(lo, hi) in a.intervals() {
        worst = worst.max(b.distance_to(lo)).max(b.distance_to(hi));
    }
    for m in b.gap_midpoints() {
        if a.contains(m) {
            worst = worst.max(b.distance_to(m));
        }
    }
    worst
}

/// Hausdorff distance between two finite interval unions.
#[must_use]
pub fn hausdorff_distance(a: &EmpiricalSpectrum, b: &EmpiricalSpectrum) -> f64 {
    directed(a, b).max(directed(b, a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub coupling: Coupling,
    pub dual: Coupling,
    pub n: usize,
    pub phase_count: usize,
    /// Hausdorff distance between `Σ_λ` and `λ₂ Σ_dual`.
    pub distance: f64,
    pub primal_gap_count: usize,
    pub dual_gap_count: usize,
    pub primal_measure: f64,
    /// Measure of the scaled dual spectrum.
    pub dual_measure: f64,
}

/// Compares the empirical spectrum of `primal` with `λ₂` times that of `dual`.
pub fn duality_from_clouds(primal: &SpectrumCloud, dual: &SpectrumCloud) -> Result<DualityReport> {
    let lam = primal.params.coupling;
    let expected = dual_coupling(&lam)?;
    let got = dual.params.coupling.as_array();
    if expected.as_array().iter().zip(got).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0)) {
        return Err(HarperError::invalid("second cloud is not built from the dual coupling"));
    }
    let gp = detect_gaps(primal, DEFAULT_MAX_LABEL, None)?;
    let gd = detect_gaps(dual, DEFAULT_MAX_LABEL, None)?;
    let sp = EmpiricalSpectrum::from_gaps(primal.ids_curve.min(), primal.ids_curve.max(), &gp);
    let sd = EmpiricalSpectrum::from_gaps(dual.ids_curve.min(), dual.ids_curve.max(), &gd).scaled(lam.l2);
    Ok(DualityReport {
        coupling: lam,
        dual: dual.params.coupling,
        n: primal.params.n,
        phase_count: primal.params.phase_count,
        distance: hausdorff_distance(&sp, &sd),
        primal_gap_count: gp.gaps.len(),
        dual_gap_count: gd.gaps.len(),
        primal_measure: sp.measure(),
        dual_measure: sd.measure(),
    })
}

/// Builds both clouds and compares them. Any coupling with `λ₂ > 0` is accepted: the identity
/// holds off region II as well.
pub fn duality_check(lam: &Coupling, freq: &Frequency, n: usize, phase_count: usize, exec: Execution) -> Result<DualityReport> {
    let dual = dual_coupling(lam)?;
    let primal_cloud = build_cloud(lam, freq, n, phase_count, exec)?;
    let dual_cloud = build_cloud(&dual, freq, n, phase_count, exec)?;
    duality_from_clouds(&primal_cloud, &dual_cloud)
}
