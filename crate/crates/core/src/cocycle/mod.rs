//! Transfer-matrix cocycles and Lyapunov exponents.
//!
//! Products are accumulated with the scale factored out every [`RESCALE_EVERY`] steps, so
//! `ln ||A_k||` is exact up to rounding for `k` far beyond the double exponent range.

pub mod fourier;
pub mod qconj;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arithmetic::frac_mul;
use crate::error::{HarperError, Result};
use crate::linalg::Mat2;
use crate::operator::{c_real, classify_region, potential, Coupling, RegionTag};
use crate::par::{map_range, ordered_sum, Execution};
pub use fourier::{eval_matrix, strip_norm, FourierSeries, NormPair, StripNorm};
pub use qconj::{build_q_conjugation, QConjugation};

/// `|c(x)|` at or below this multiple of `l1 + l2 + l3` counts as a zero of the symbol.
pub const SYMBOL_FLOOR: f64 = 1e-14;

/// Steps between renormalisations of running products.
pub const RESCALE_EVERY: usize = 32;

/// A matrix-valued function on the circle.
pub trait MatrixFunction: Sync {
    fn at(&self, x: f64) -> Mat2;
}

/// A quasi-periodic cocycle `(alpha, A)`.
pub trait Cocycle: MatrixFunction {
    fn alpha(&self) -> f64;
}

/// Which transfer matrix a [`HarperCocycle`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CocycleKind {
    /// `A(x) = (1/c(x)) [[E - 2cos 2 pi x, -cbar(x - alpha)], [c(x), 0]]`.
    Raw,
    /// `Abar(x) = (|c|(x) |c|(x - alpha))^{-1/2} [[E - 2cos 2 pi x, -|c|(x - alpha)], [|c|(x), 0]]`.
    Renormalized,
}

/// Transfer matrix of the extended Harper operator at energy `E`.
pub fn transfer_matrix(lam: &Coupling, alpha: f64, energy: f64, x: f64, kind: CocycleKind) -> Result<Mat2> {
    let c = c_real(lam, alpha, x);
    let c_prev = c_real(lam, alpha, x - alpha);
    let v = energy - potential(x);
    let floor = SYMBOL_FLOOR * (lam.l1 + lam.l2 + lam.l3);
    match kind {
        CocycleKind::Raw => {
            if c.norm() <= floor {
                return Err(HarperError::SymbolZero { x });
            }
            let r = c.inv();
            Ok(Mat2::new(r * v, -r * c_prev.conj(), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)))
        }
        CocycleKind::Renormalized => {
            let (a, b) = (c.norm(), c_prev.norm());
            if a <= floor {
                return Err(HarperError::SymbolZero { x });
            }
            if b <= floor {
                return Err(HarperError::SymbolZero { x: x - alpha });
            }
            let s = 1.0 / (a * b).sqrt();
            Ok(Mat2::real(s * v, -s * b, s * a, 0.0))
        }
    }
}

/// The extended Harper cocycle at a fixed energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarperCocycle {
    pub coupling: Coupling,
    pub alpha: f64,
    pub energy: f64,
    pub kind: CocycleKind,
}

impl HarperCocycle {
    #[must_use]
    pub fn new(coupling: Coupling, alpha: f64, energy: f64, kind: CocycleKind) -> Self {
        Self { coupling, alpha, energy, kind }
    }

    pub fn try_at(&self, x: f64) -> Result<Mat2> {
        transfer_matrix(&self.coupling, self.alpha, self.energy, x, self.kind)
    }
}

impl MatrixFunction for HarperCocycle {
    /// Non-finite entries where the symbol vanishes.
    fn at(&self, x: f64) -> Mat2 {
        self.try_at(x).unwrap_or(Mat2::real(f64::NAN, f64::NAN, f64::NAN, f64::NAN))
    }
}

impl Cocycle for HarperCocycle {
    fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Cocycle with entries given by Fourier series.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCocycle {
    pub alpha: f64,
    pub entries: [[FourierSeries; 2]; 2],
}

impl FourierCocycle {
    /// The constant cocycle `A(x) = m`.
    #[must_use]
    pub fn constant(alpha: f64, m: Mat2) -> Self {
        let f = FourierSeries::constant;
        Self { alpha, entries: [[f(m.a), f(m.b)], [f(m.c), f(m.d)]] }
    }
}

impl MatrixFunction for FourierCocycle {
    fn at(&self, x: f64) -> Mat2 {
        eval_matrix(&self.entries, Complex64::new(x, 0.0))
    }
}

impl Cocycle for FourierCocycle {
    fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// A product matrix stored as `e^{log_scale} * matrix`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMatrix {
    pub matrix: Mat2,
    pub log_scale: f64,
}

impl ScaledMatrix {
    /// `ln ||A||`.
    #[must_use]
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.matrix.norm().ln()
    }

    /// The product as a plain matrix (may overflow).
    #[must_use]
    pub fn to_matrix(&self) -> Mat2 {
        self.matrix.scale_real(self.log_scale.exp())
    }
}

/// `A_k(x) = A(x + (k-1) alpha) ... A(x)`, `k >= 1`.
pub fn cocycle_product<C: Cocycle + ?Sized>(coc: &C, x: f64, k: usize) -> ScaledMatrix {
    product_with_midpoint(coc, x, k, usize::MAX).0
}

/// Product up to `k`, also returning `ln ||A_mid(x)||` when `1 <= mid <= k`.
fn product_with_midpoint<C: Cocycle + ?Sized>(coc: &C, x: f64, k: usize, mid: usize) -> (ScaledMatrix, f64) {
    let alpha = coc.alpha();
    let mut m = Mat2::IDENTITY;
    let mut log_scale = 0.0;
    let mut mid_log = f64::NAN;
    for l in 0..k {
        m = coc.at(x + frac_mul(l as i64, alpha)) * m;
        if (l + 1) % RESCALE_EVERY == 0 || l + 1 == mid {
            let n = m.norm();
            if n > 0.0 && n.is_finite() {
                m = m.scale_real(1.0 / n);
                log_scale += n.ln();
            }
        }
        if l + 1 == mid {
            mid_log = log_scale + m.norm().ln();
        }
    }
    (ScaledMatrix { matrix: m, log_scale }, mid_log)
}

/// Phase-averaged Lyapunov estimates at `k` and `k/2` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// `(1/(k P)) sum_j ln ||A_k(j/P)||`.
    pub value: f64,
    /// Same at `k/2` steps.
    pub half_step_value: f64,
    pub steps: usize,
    pub phase_count: usize,
}

/// Minimum step count accepted by [`lyapunov_numeric`].
pub const MIN_LYAPUNOV_STEPS: usize = 100;
/// Minimum phase count accepted by [`lyapunov_numeric`].
pub const MIN_LYAPUNOV_PHASES: usize = 32;

/// Finite-`k` Lyapunov exponent on an equispaced phase grid.
pub fn lyapunov_numeric<C: Cocycle + ?Sized>(
    coc: &C,
    steps: usize,
    phase_count: usize,
    exec: Execution,
) -> Result<LyapunovEstimate> {
    if steps < MIN_LYAPUNOV_STEPS || phase_count < MIN_LYAPUNOV_PHASES {
        return Err(HarperError::invalid(format!(
            "need k >= {MIN_LYAPUNOV_STEPS} and phase_count >= {MIN_LYAPUNOV_PHASES}, got {steps}, {phase_count}"
        )));
    }
    let half = steps / 2;
    let per_phase = map_range(exec, phase_count, |j| {
        let (p, mid) = product_with_midpoint(coc, j as f64 / phase_count as f64, steps, half);
        (p.log_norm(), mid)
    });
    if per_phase.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(HarperError::guard("non-finite transfer-matrix product (symbol zero on the phase grid?)"));
    }
    let full: Vec<f64> = per_phase.iter().map(|p| p.0).collect();
    let mids: Vec<f64> = per_phase.iter().map(|p| p.1).collect();
    Ok(LyapunovEstimate {
        value: ordered_sum(&full) / (steps * phase_count) as f64,
        half_step_value: ordered_sum(&mids) / (half * phase_count) as f64,
        steps,
        phase_count,
    })
}

/// `L_bar = ln((l2 + sqrt(l2^2 - 4 l1 l3)) / (M + sqrt(M^2 - 4 l1 l3)))`, `M = max(l1 + l3, 1)`.
///
/// Region II only (where it is the Lyapunov exponent of the dual model on its spectrum).
pub fn lyapunov_closed_form(lam: &Coupling) -> Result<f64> {
    let region = classify_region(lam);
    if region != RegionTag::II {
        return Err(HarperError::WrongRegion {
            coupling: lam.as_array(),
            region: region.to_string(),
            required: "II".into(),
        });
    }
    let p = 4.0 * lam.l1 * lam.l3;
    let m = (lam.l1 + lam.l3).max(1.0);
    Ok(((lam.l2 + (lam.l2 * lam.l2 - p).sqrt()) / (m + (m * m - p).sqrt())).ln())
}
