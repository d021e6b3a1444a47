//! The Thouless formula `L(E) = -integral ln|c| + integral ln|E' - E| dN(E')` on a cloud.

use serde::{Deserialize, Serialize};

use super::SpectrumCloud;
use crate::error::{HarperError, Result};
use crate::operator::{mean_log_c, Coupling};
use crate::par::ordered_sum;

/// Half-width of the window around `E` where the IDS is linearised.
pub const SINGULAR_WINDOW: f64 = 1e-4;
/// Shift applied to an energy that coincides with a sample.
pub const ATOM_SHIFT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThoulessReport {
    pub energy: f64,
    pub lyapunov: f64,
    /// `integral ln|E' - E| dN(E')` on the cloud.
    pub log_potential: f64,
    pub mean_log_c: f64,
    /// `lyapunov - (-mean_log_c + log_potential)`.
    pub residual: f64,
    /// The energy coincided with a sample and was shifted by [`ATOM_SHIFT`].
    pub perturbed: bool,
}

/// Residual of the Thouless formula at `E` for a given Lyapunov exponent.
///
/// Samples within [`SINGULAR_WINDOW`] of `E` are replaced by the integral of `ln|t|` over the
/// window against a uniform density, i.e. `ln(delta) - 1` each.
pub fn thouless_residual(cloud: &SpectrumCloud, lam: &Coupling, energy: f64, lyap: f64) -> Result<ThoulessReport> {
    if !energy.is_finite() || !lyap.is_finite() {
        return Err(HarperError::invalid("energy and Lyapunov exponent must be finite"));
    }
    let samples = cloud.samples();
    let mut e = energy;
    let perturbed = samples.binary_search_by(|s| s.total_cmp(&e)).is_ok();
    if perturbed {
        e += ATOM_SHIFT;
    }
    let delta = SINGULAR_WINDOW;
    let near = (delta.ln() - 1.0) * samples.iter().filter(|s| (*s - e).abs() < delta).count() as f64;
    let far: Vec<f64> = samples.iter().filter(|s| (*s - e).abs() >= delta).map(|s| (s - e).abs().ln()).collect();
    let log_potential = (ordered_sum(&far) + near) / samples.len() as f64;
    let m = mean_log_c(lam);
    let mlc = m.closed_form.unwrap_or(m.quadrature);
    Ok(ThoulessReport {
        energy: e,
        lyapunov: lyap,
        log_potential,
        mean_log_c: mlc,
        residual: lyap - (-mlc + log_potential),
        perturbed,
    })
}
