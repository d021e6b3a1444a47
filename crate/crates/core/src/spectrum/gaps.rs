//! Gap detection from IDS plateaus, gap labelling and gap-length decay.
//!
//! A plateau is a window `[s_i, s_{i+T+1}]` of consecutive samples with at most
//! `T = floor(tol * total)` samples strictly inside, so the IDS rises by less than `tol`
//! across it. Stray boundary eigenvalues inside a gap therefore do not split it.

use serde::{Deserialize, Serialize};

use super::{IdsCurve, SpectrumCloud};
use crate::arithmetic::{frac_mul, torus_norm};
use crate::cocycle::lyapunov_closed_form;
use crate::error::{HarperError, Result};
use crate::operator::Coupling;

/// Default label search bound `|m| <= 50`.
pub const DEFAULT_MAX_LABEL: i64 = 50;
/// Smallest truncation size accepted by [`detect_gaps`].
pub const MIN_GAP_SIZE: usize = 500;

/// An IDS plateau before labelling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub lower: f64,
    pub upper: f64,
    /// IDS value on the widest empty stretch of the plateau.
    pub ids_value: f64,
    /// Samples strictly inside the plateau.
    pub interior: usize,
}

/// A labelled spectral gap `(E_m^-, E_m^+)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub label: i64,
    pub lower: f64,
    pub upper: f64,
    pub length: f64,
    pub ids_value: f64,
    /// Circular distance between `ids_value` and `m alpha mod 1`.
    pub label_residual: f64,
}

/// Labelled gaps (ascending in energy) and the plateaus that found no label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub gaps: Vec<GapRecord>,
    pub unlabeled: Vec<Plateau>,
    pub plateau_tol: f64,
    pub min_width: f64,
    pub max_label: i64,
}

impl GapReport {
    /// Gaps whose label residual is below `tol`.
    pub fn within(&self, tol: f64) -> impl Iterator<Item = &GapRecord> {
        self.gaps.iter().filter(move |g| g.label_residual < tol)
    }

    #[must_use]
    pub fn find(&self, label: i64) -> Option<&GapRecord> {
        self.gaps.iter().find(|g| g.label == label)
    }
}

/// Gap detection on a cloud with the default tolerance `1/(2n)` and minimum width twice the
/// level spacing.
pub fn detect_gaps(cloud: &SpectrumCloud, max_label: i64, plateau_tol: Option<f64>) -> Result<GapReport> {
    if cloud.params.n < MIN_GAP_SIZE {
        return Err(HarperError::invalid(format!("gap detection needs n >= {MIN_GAP_SIZE}, got {}", cloud.params.n)));
    }
    let tol = plateau_tol.unwrap_or(0.5 / cloud.params.n as f64);
    detect_plateaus(&cloud.ids_curve, cloud.alpha(), max_label, tol, 2.0 * cloud.level_spacing())
}

/// Finds plateaus of width at least `min_width` and labels them by `|m| <= max_label`.
pub fn detect_plateaus(curve: &IdsCurve, alpha: f64, max_label: i64, tol: f64, min_width: f64) -> Result<GapReport> {
    if !(tol > 0.0 && tol < 0.5) || !(min_width > 0.0) || max_label < 1 {
        return Err(HarperError::invalid("need 0 < tol < 1/2, min_width > 0 and max_label >= 1"));
    }
    let s = curve.samples();
    let total = s.len();
    let allowed = (tol * total as f64).floor() as usize;
    let span = allowed + 1;
    let mut candidates: Vec<(usize, usize)> = (0..total.saturating_sub(span))
        .filter(|&i| s[i + span] - s[i] >= min_width)
        .map(|i| (i, i + span))
        .collect();
    candidates.sort_by(|a, b| (s[b.1] - s[b.0]).total_cmp(&(s[a.1] - s[a.0])).then(a.0.cmp(&b.0)));
    let mut accepted: Vec<(usize, usize)> = Vec::new();
    for (i, j) in candidates {
        if accepted.iter().all(|&(a, b)| s[j] <= s[a] || s[b] <= s[i]) {
            accepted.push((i, j));
        }
    }
    accepted.sort_unstable();
    let plateaus = accepted.into_iter().map(|(i, j)| {
        let k = (i..j).max_by(|&a, &b| (s[a + 1] - s[a]).total_cmp(&(s[b + 1] - s[b])).then(b.cmp(&a))).unwrap_or(i);
        Plateau { lower: s[i], upper: s[j], ids_value: (k + 1) as f64 / total as f64, interior: j - i - 1 }
    });

    let mut gaps: Vec<GapRecord> = Vec::new();
    let mut unlabeled = Vec::new();
    for p in plateaus {
        let (label, residual) = best_label(p.ids_value, alpha, max_label);
        if residual > 3.0 * tol {
            unlabeled.push(p);
            continue;
        }
        if let Some(g) = gaps.iter_mut().find(|g| g.label == label) {
            // Same label on both sides of a cluster of strays: one gap.
            if p.upper - p.lower > g.length {
                g.ids_value = p.ids_value;
                g.label_residual = residual;
            }
            g.lower = g.lower.min(p.lower);
            g.upper = g.upper.max(p.upper);
            g.length = g.upper - g.lower;
            continue;
        }
        gaps.push(GapRecord {
            label,
            lower: p.lower,
            upper: p.upper,
            length: p.upper - p.lower,
            ids_value: p.ids_value,
            label_residual: residual,
        });
    }
    gaps.sort_by(|a, b| a.lower.total_cmp(&b.lower));
    Ok(GapReport { gaps, unlabeled, plateau_tol: tol, min_width, max_label })
}

/// Nonzero `m` with `|m| <= max_label` minimising the circular distance to `value`;
/// ties go to the smaller `|m|`, then to positive `m`.
fn best_label(value: f64, alpha: f64, max_label: i64) -> (i64, f64) {
    let mut best = (0i64, f64::INFINITY);
    for a in 1..=max_label {
        for m in [a, -a] {
            let r = torus_norm(value - frac_mul(m, alpha));
            if r < best.1 {
                best = (m, r);
            }
        }
    }
    best
}

/// Least-squares fit of `ln(length)` against `|m|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapDecay {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub gap_count: usize,
    /// Closed-form `L_bar` when the coupling is in region II, for comparison with `-slope`.
    pub l_bar: Option<f64>,
}

pub fn gap_decay_report(gaps: &[GapRecord], lam: &Coupling) -> Result<GapDecay> {
    if gaps.len() < 5 {
        return Err(HarperError::invalid(format!("gap decay fit needs at least 5 gaps, got {}", gaps.len())));
    }
    let pts: Vec<(f64, f64)> = gaps.iter().map(|g| (g.label.unsigned_abs() as f64, g.length.ln())).collect();
    let (slope, intercept, r2) = linear_fit(&pts);
    Ok(GapDecay { slope, intercept, r2, gap_count: gaps.len(), l_bar: lyapunov_closed_form(lam).ok() })
}

/// Ordinary least squares `y = a x + b`, returning `(a, b, r^2)`.
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::NAN, my, 0.0);
    }
    let a = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, my - a * mx, r2)
}
