//! Almost reducibility of the renormalised cocycle, executed numerically.
//!
//! Pipeline for `lam` in region II and `E` in the spectrum:
//!
//! 1. [`dual_bloch_wave`]: a phase `theta` and a dual eigenvector `u` with `u_0 = 1`.
//! 2. [`build_windowed_vector`]: `U^{I2}` from `u` on the window `I2`, and `U_star = Q U^{I2}`,
//!    which almost solves `Abar(x) U_star(x) = e^{2 pi i theta} U_star(x + alpha)`.
//! 3. [`complete_to_sl2`]: `B = (U_star, V)` with `det B = 1`.
//! 4. [`conjugation_residuals`]: `B^{-1}(x + alpha) Abar B(x) = rot + [[beta1, b], [beta2, beta3]]`.
//! 5. [`homological_eliminate`]: `W = [[1, w], [0, 1]]` removes the non-resonant low modes of `b`.
//! 6. [`holder_certificate`]: `ln ||B'||` after the scaling `D = diag(1/d, d)`.

pub mod bloch;
pub mod conjugation;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::arithmetic::{default_epsilon0, find_resonances, Frequency, NextResonance, ResonanceSet};
use crate::cocycle::{build_q_conjugation, lyapunov_closed_form, CocycleKind, HarperCocycle};
use crate::error::{HarperError, Result};
use crate::operator::Coupling;
use crate::par::Execution;

pub use bloch::{decay_rate, dual_bloch_wave, BlochSearch, BlochWave, ThetaCandidate};
pub use conjugation::{
    build_windowed_vector, complete_to_sl2, conjugation_residuals, holder_certificate, homological_eliminate, CompletionReport,
    ConjugationReport, EliminationReport, HolderCertificate, Product, Sl2Completion, Stage, Unipotent, WindowedVector,
};

/// Smallest default resonance threshold. For Diophantine frequencies `10 beta_hat` is nearly
/// zero, which would make every best approximation of `2 theta` resonant.
pub const EPSILON0_FLOOR: f64 = 0.1;

/// Knobs of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceSettings {
    /// Dual window half-width `M`.
    pub m: usize,
    pub theta_grid: usize,
    /// Cutoff for `b` and the homological equation.
    pub fourier_cutoff: usize,
    /// Real grid for every stage after the windowed vector.
    pub grid: usize,
    pub q_cutoff: usize,
    pub q_grid: usize,
    /// Defaults to `max(10 beta_hat, EPSILON0_FLOOR)`.
    pub epsilon0: Option<f64>,
    /// Certificate sweep.
    pub epsilons: Vec<f64>,
}

impl Default for ReduceSettings {
    fn default() -> Self {
        Self {
            m: 400,
            theta_grid: 4096,
            fourier_cutoff: 64,
            grid: 2048,
            q_cutoff: 64,
            q_grid: 4096,
            epsilon0: None,
            epsilons: vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2],
        }
    }
}

/// Resolved configuration of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducibilityConfig {
    /// `L_bar / (200 pi)`.
    pub h: f64,
    pub epsilon0: f64,
    /// `I2 = [-floor(N/9), floor(N/9)]`, capped at `M`.
    pub window_i2: (i64, i64),
    /// `N`: the resonance after the one kept in `b^r`, or the horizon `9 M`.
    pub scale_n: u64,
    pub fourier_cutoff: usize,
    /// Half-width at which strip norms are reported; defaults to `h`.
    pub strip_s: f64,
}

/// Full record of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionChain {
    pub coupling: Coupling,
    pub alpha: f64,
    pub energy: f64,
    pub config: ReducibilityConfig,
    pub search: BlochSearch,
    pub resonances: ResonanceSet,
    pub windowed: WindowedVector,
    pub completion: CompletionReport,
    pub b_stage: ConjugationReport,
    pub phi_stage: EliminationReport,
    pub certificates: Vec<HolderCertificate>,
    /// `max / min` of `bound / sqrt(eps)` over the sweep.
    pub certificate_spread: f64,
    /// Residual of the `Q` conjugation on the real grid.
    pub q_residual: f64,
}

/// Runs every stage at energy `E`.
pub fn reduce(lam: &Coupling, freq: &Frequency, energy: f64, s: &ReduceSettings, exec: Execution) -> Result<ReductionChain> {
    let l_bar = lyapunov_closed_form(lam)?;
    if s.epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(HarperError::invalid("certificate epsilons must be positive"));
    }
    let alpha = freq.value;
    let search = dual_bloch_wave(lam, freq, energy, s.m, s.theta_grid, exec)?;
    let theta = search.wave.theta;

    let epsilon0 = s.epsilon0.unwrap_or_else(|| default_epsilon0(freq).max(EPSILON0_FLOOR));
    let horizon = 9 * s.m as u64;
    let resonances = find_resonances(theta, freq, epsilon0, horizon)?;
    let kept = resonances.last_within(s.fourier_cutoff as u64);
    let idx = kept.and_then(|n| resonances.resonances.iter().position(|&r| r == n)).map_or(0, |i| i + 1);
    let scale_n = match resonances.next(idx) {
        NextResonance::At(n) => n.unsigned_abs(),
        NextResonance::Beyond(h) => h,
    };
    let half = ((scale_n / 9) as usize).min(s.m);
    let h = l_bar / (200.0 * PI);
    let config = ReducibilityConfig {
        h,
        epsilon0,
        window_i2: (-(half as i64), half as i64),
        scale_n,
        fourier_cutoff: s.fourier_cutoff,
        strip_s: h,
    };

    let qconj = build_q_conjugation(lam, freq, s.q_cutoff, s.q_grid)?;
    let coc = HarperCocycle::new(*lam, alpha, energy, CocycleKind::Renormalized);
    let windowed = build_windowed_vector(&search.wave, &qconj, &coc, half, s.grid, config.strip_s, exec)?;
    let (b, completion) = complete_to_sl2(&windowed.u_star, s.grid, exec)?;
    let b_stage = conjugation_residuals(&b, &coc, theta, s.grid, s.fourier_cutoff, exec)?;
    let phi_stage = homological_eliminate(&b, &coc, &b_stage, kept, exec)?;
    let certificates = s.epsilons.iter().map(|&e| holder_certificate(&phi_stage, e)).collect::<Result<Vec<_>>>()?;
    let scaled: Vec<f64> = certificates.iter().map(|c| c.scaled).collect();
    let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ReductionChain {
        coupling: *lam,
        alpha,
        energy,
        config,
        search,
        resonances,
        windowed,
        completion,
        b_stage,
        phi_stage,
        certificates,
        certificate_spread: if scaled.is_empty() { 1.0 } else { hi / lo },
        q_residual: qconj.residual,
    })
}
