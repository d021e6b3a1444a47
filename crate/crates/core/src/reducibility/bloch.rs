//! Dual Bloch waves: phases `theta` at which `E / l2` is an eigenvalue of the dual operator,
//! with the eigenvector centred at site 0.
//!
//! The search scans `theta` over `[0, 1/2]` (the dual spectrum is symmetric under
//! `theta -> -theta`) and bisects on changes of the Sturm count of `H - E/l2`. A crossing
//! produced by a state localised at site `p` is moved to the origin by `theta -> theta + p alpha`,
//! since the dual family is covariant under that shift. States stuck to the truncation edge
//! are discarded.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arithmetic::{frac_mul, torus_norm, Frequency};
use crate::cocycle::FourierSeries;
use crate::error::{HarperError, Result};
use crate::operator::{build_truncation, c_real, dual_coupling, Coupling, TridiagonalOperator};
use crate::par::{map_range, Execution};

/// Bisection steps on `theta` per crossing.
const THETA_BISECTIONS: usize = 60;
/// Candidate phases closer than this are the same state.
const THETA_MERGE: f64 = 1e-9;
/// `|u_0| / max |u_k|` below which normalising by `u_0` is flagged.
pub const CENTRE_FLOOR: f64 = 1e-6;

/// Solution `u` of `H_{dual, alpha, theta} u = (E / l2) u` on `|k| <= M` with `u_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochWave {
    pub theta: f64,
    pub energy: f64,
    /// `u_k` as the coefficients of `u(x) = sum u_k e^{2 pi i k x}`.
    pub coeffs: FourierSeries,
    /// Sup norm of `(H - E/l2) u` for `u` extended by zero outside the window.
    pub dual_eigen_residual: f64,
    pub max_abs: f64,
    /// `|u_0| / max |u_k|` before normalisation was below [`CENTRE_FLOOR`].
    pub ill_conditioned: bool,
}

/// A phase at which the centred dual state hits `E / l2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaCandidate {
    pub theta: f64,
    pub residual: f64,
    pub max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochSearch {
    /// The candidate with the smallest residual.
    pub wave: BlochWave,
    /// Every distinct centred phase, ascending.
    pub candidates: Vec<ThetaCandidate>,
    /// Count changes found on the scan.
    pub crossings: usize,
}

fn dual_window(dual: &Coupling, alpha: f64, theta: f64, m: usize) -> Result<TridiagonalOperator> {
    build_truncation(dual, alpha, theta - frac_mul(m as i64, alpha), 2 * m + 1)
}

fn count_at(dual: &Coupling, alpha: f64, theta: f64, m: usize, t: f64) -> usize {
    dual_window(dual, alpha, theta, m).map_or(0, |op| op.gauge().matrix.count_below(t))
}

/// Eigenvector of the window nearest `t`, in site order `-M..=M`.
fn eigvec(op: &TridiagonalOperator, t: f64) -> Vec<Complex64> {
    let g = op.gauge();
    let x = g.matrix.eigenvector(t);
    g.unfold(&x)
}

/// `sup_k |((H - t) u)_k|` over `|k| <= M + 1`, `u` zero outside the window.
fn lattice_residual(dual: &Coupling, alpha: f64, theta: f64, t: f64, u: &FourierSeries) -> f64 {
    let m = u.cutoff() as i64;
    let mut worst = 0.0f64;
    for k in -m - 1..=m + 1 {
        let y = theta + frac_mul(k, alpha);
        let hop = c_real(dual, alpha, y);
        let back = c_real(dual, alpha, y - alpha).conj();
        let v = hop * u.coeff(k + 1) + back * u.coeff(k - 1) + (2.0 * (std::f64::consts::TAU * y).cos() - t) * u.coeff(k);
        worst = worst.max(v.norm());
    }
    worst
}

fn centred_wave(dual: &Coupling, alpha: f64, theta: f64, energy: f64, t: f64, m: usize) -> Result<BlochWave> {
    let op = dual_window(dual, alpha, theta, m)?;
    let v = eigvec(&op, t);
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let u0 = v[m];
    if u0.norm() == 0.0 {
        return Err(HarperError::guard("dual eigenvector vanishes at the origin"));
    }
    let coeffs = FourierSeries::from_coeffs(v.iter().map(|z| z / u0).collect());
    let max_abs = peak / u0.norm();
    Ok(BlochWave {
        theta,
        energy,
        dual_eigen_residual: lattice_residual(dual, alpha, theta, t, &coeffs),
        max_abs,
        coeffs,
        ill_conditioned: u0.norm() < CENTRE_FLOOR * peak,
    })
}

/// Searches `theta_grid + 1` phases in `[0, 1/2]` for a dual state at `E / l2` on the window
/// `|k| <= M`.
pub fn dual_bloch_wave(lam: &Coupling, freq: &Frequency, energy: f64, m: usize, theta_grid: usize, exec: Execution) -> Result<BlochSearch> {
    if m < 8 || theta_grid < 2 {
        return Err(HarperError::invalid("need M >= 8 and theta_grid >= 2"));
    }
    if !energy.is_finite() {
        return Err(HarperError::invalid("energy must be finite"));
    }
    let dual = dual_coupling(lam)?;
    let alpha = freq.value;
    let t = energy / lam.l2;
    let thetas: Vec<f64> = (0..=theta_grid).map(|i| 0.5 * i as f64 / theta_grid as f64).collect();
    let counts = map_range(exec, thetas.len(), |i| count_at(&dual, alpha, thetas[i], m, t));
    let cells: Vec<usize> = (0..theta_grid).filter(|&i| counts[i] != counts[i + 1]).collect();

    let centred: Vec<Option<f64>> = map_range(exec, cells.len(), |c| {
        let i = cells[c];
        let (mut lo, mut hi) = (thetas[i], thetas[i + 1]);
        let c_lo = counts[i];
        for _ in 0..THETA_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count_at(&dual, alpha, mid, m, t) == c_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        let op = dual_window(&dual, alpha, theta, m).ok()?;
        let v = eigvec(&op, t);
        let p = v.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map_or(m, |(j, _)| j);
        let offset = p as i64 - m as i64;
        // Edge states of the truncation are not shifts of a bulk state.
        if offset.unsigned_abs() as usize > m / 2 {
            return None;
        }
        Some((theta + frac_mul(offset, alpha)).rem_euclid(1.0))
    });
    let mut phases: Vec<f64> = centred.into_iter().flatten().collect();
    phases.sort_by(f64::total_cmp);
    let mut unique: Vec<f64> = Vec::new();
    for th in phases {
        if unique.last().is_none_or(|&u| torus_norm(th - u) > THETA_MERGE) {
            unique.push(th);
        }
    }
    if unique.len() > 1 && torus_norm(unique[0] - unique[unique.len() - 1]) <= THETA_MERGE {
        unique.pop();
    }
    if unique.is_empty() {
        return Err(HarperError::NotFound(format!("E = {energy} not resolvable at M = {m}")));
    }
    let waves: Vec<Result<BlochWave>> = map_range(exec, unique.len(), |i| centred_wave(&dual, alpha, unique[i], energy, t, m));
    let waves: Vec<BlochWave> = waves.into_iter().collect::<Result<_>>()?;
    let candidates = waves
        .iter()
        .map(|w| ThetaCandidate { theta: w.theta, residual: w.dual_eigen_residual, max_abs: w.max_abs })
        .collect();
    let wave = waves
        .into_iter()
        .min_by(|a, b| a.dual_eigen_residual.total_cmp(&b.dual_eigen_residual).then(a.theta.total_cmp(&b.theta)))
        .expect("nonempty");
    Ok(BlochSearch { wave, candidates, crossings: cells.len() })
}

/// Fitted decay rate of `ln |u_k|` against `|k|` over `lo <= |k| <= hi`, by least squares.
#[must_use]
pub fn decay_rate(wave: &BlochWave, lo: usize, hi: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = wave
        .coeffs
        .iter()
        .filter(|(k, c)| (lo..=hi).contains(&(k.unsigned_abs() as usize)) && c.norm() > 0.0)
        .map(|(k, c)| (k.abs() as f64, c.norm().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (slope, _, _) = crate::spectrum::gaps::linear_fit(&pts);
    Some(-slope)
}
