//! Windowed duality vectors, the `SL(2, C)` completion, the conjugation residuals, the
//! homological elimination and the Hölder certificate.
//!
//! Everything after the windowed vector is measured on the real grid `x_j = j / G`. Shifted
//! values `F(x_j + alpha)` are evaluated exactly, never interpolated.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bloch::BlochWave;
use crate::arithmetic::frac_mul;
use crate::cocycle::{Cocycle, FourierSeries, MatrixFunction, NormPair, QConjugation, StripNorm};
use crate::error::{HarperError, Result};
use crate::linalg::{vec_norm, Mat2};
use crate::par::{map_range, Execution};

/// Completion refuses vectors with grid norm below this.
pub const MIN_COMPLETION_NORM: f64 = 1e-10;
/// Divisors `|1 - e^{-2 pi i (2 theta - k alpha)}|` below this are not inverted.
pub const DIVISOR_GUARD: f64 = 1e-12;
/// Slack in the `beta_3` inequality.
pub const BETA3_SLACK: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn grid_point(j: usize, grid: usize) -> f64 {
    j as f64 / grid as f64
}

/// `e^{2 pi i theta}`.
fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * theta)
}

/// Sup of `|v_j|` with the Wiener norm of the interpolant as upper bound.
fn grid_norm(samples: &[Complex64]) -> NormPair {
    let lower = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cutoff = (samples.len() - 1) / 2;
    let l1: f64 = FourierSeries::from_samples(samples, cutoff).coeffs().iter().map(|c| c.norm()).sum();
    NormPair { lower, upper: l1.max(lower) }
}

/// `U^{I2}` and `U_star^{I2} = Q U^{I2}` with grid diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedVector {
    pub theta: f64,
    pub alpha: f64,
    pub window: usize,
    pub u: [FourierSeries; 2],
    pub u_star: [FourierSeries; 2],
    /// `sup_x ||Abar(x) U_star(x) - e^{2 pi i theta} U_star(x + alpha)||` on the grid.
    pub defect: f64,
    pub min_norm: f64,
    pub max_norm: f64,
    /// Strip norm of `U_star` at the configured half-width.
    pub strip_norm: NormPair,
}

/// Assembles `U^{I2}(x) = (e^{2 pi i theta} sum u_k e^{2 pi i k x}, sum u_k e^{2 pi i k (x - alpha)})`
/// over `|k| <= window` and multiplies by `Q`. `coc` supplies `Abar` for the defect.
pub fn build_windowed_vector<C: Cocycle + ?Sized>(
    wave: &BlochWave,
    qconj: &QConjugation,
    coc: &C,
    window: usize,
    grid: usize,
    strip_s: f64,
    exec: Execution,
) -> Result<WindowedVector> {
    if window > wave.coeffs.cutoff() {
        return Err(HarperError::invalid(format!("window {window} exceeds the wave cutoff {}", wave.coeffs.cutoff())));
    }
    let alpha = qconj.alpha;
    let u = wave.coeffs.with_cutoff(window);
    let u1 = u.scale(phase(wave.theta));
    let u2 = u.shift(-alpha);
    let u_star = [qconj.q[0][0].mul(&u1), qconj.q[1][1].mul(&u2)];
    if grid <= 2 * u_star[0].cutoff().max(u_star[1].cutoff()) {
        return Err(HarperError::invalid(format!("grid {grid} too small for the windowed vector")));
    }
    let rot = phase(wave.theta);
    let rows = map_range(exec, grid, |j| {
        let x = grid_point(j, grid);
        let v = [u_star[0].eval_real(x), u_star[1].eval_real(x)];
        let w = [u_star[0].eval_real(x + alpha), u_star[1].eval_real(x + alpha)];
        let av = coc.at(x).apply(v);
        (vec_norm([av[0] - rot * w[0], av[1] - rot * w[1]]), vec_norm(v))
    });
    let defect = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let min_norm = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let max_norm = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let strip_norm = u_star.strip_norm(strip_s);
    Ok(WindowedVector { theta: wave.theta, alpha, window, u: [u1, u2], u_star, defect, min_norm, max_norm, strip_norm })
}

/// `B(x) = (U(x), V(x))` with `V = (-conj U_2, conj U_1) / |U|^2`, so `det B = 1` pointwise.
///
/// The completion is real-analytic on the torus but not holomorphic in a strip.
#[derive(Debug, Clone, PartialEq)]
pub struct Sl2Completion {
    pub u: [FourierSeries; 2],
}

/// Grid diagnostics of a completion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionReport {
    pub min_norm: f64,
    pub max_norm: f64,
    /// `sup_x ||B(x)|| ||B(x)^{-1}||`.
    pub condition: f64,
    /// `max(max|U|^2, min|U|^{-2})`, which equals `condition` up to rounding.
    pub condition_bound: f64,
    /// `(max|U| / min|U|)^2`; an upper bound only when `min|U| <= 1 <= max|U|`.
    pub ratio_bound: f64,
    pub det_defect: f64,
}

impl Sl2Completion {
    #[must_use]
    pub fn vector(&self, x: f64) -> [Complex64; 2] {
        [self.u[0].eval_real(x), self.u[1].eval_real(x)]
    }
}

impl MatrixFunction for Sl2Completion {
    fn at(&self, x: f64) -> Mat2 {
        let u = self.vector(x);
        let n2 = u[0].norm_sqr() + u[1].norm_sqr();
        Mat2::from_columns(u, [-u[1].conj() / n2, u[0].conj() / n2])
    }
}

/// Completes `U` after checking its grid minimum.
pub fn complete_to_sl2(u: &[FourierSeries; 2], grid: usize, exec: Execution) -> Result<(Sl2Completion, CompletionReport)> {
    let b = Sl2Completion { u: u.clone() };
    let rows = map_range(exec, grid, |j| {
        let x = grid_point(j, grid);
        let m = b.at(x);
        let cond = m.norm() * m.inverse().map_or(f64::INFINITY, |i| i.norm());
        (vec_norm(b.vector(x)), cond, (m.det() - 1.0).norm())
    });
    let min_norm = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    if !(min_norm >= MIN_COMPLETION_NORM) {
        return Err(HarperError::guard(format!("vector norm {min_norm:e} too small to complete")));
    }
    let max_norm = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let report = CompletionReport {
        min_norm,
        max_norm,
        condition: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        condition_bound: (max_norm * max_norm).max((min_norm * min_norm).recip()),
        ratio_bound: (max_norm / min_norm).powi(2),
        det_defect: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    };
    Ok((b, report))
}

/// Which conjugation a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    B,
    Phi,
}

/// `F^{-1}(x + alpha) A(x) F(x) - diag(e^{2 pi i theta}, e^{-2 pi i theta}) = [[beta1, b], [beta2, beta3]]`
/// on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugationReport {
    pub stage: Stage,
    pub theta: f64,
    pub grid: usize,
    pub beta1: NormPair,
    pub b: NormPair,
    pub beta2: NormPair,
    pub beta3: NormPair,
    /// `sup_x ||residual block||`.
    pub residual_norm: f64,
    /// `sup_x ||F(x)||`.
    pub conjugator_norm: f64,
    /// `sup_x |det F(x) - 1|`.
    pub det_defect: f64,
    /// `(|b| |beta2| + |beta1|) / (1 - |beta1|)` from the grid sups.
    pub beta3_bound: f64,
    pub beta3_ok: bool,
    /// Fourier coefficients of `b` up to the cutoff.
    pub b_coeffs: FourierSeries,
    /// Residual blocks at the grid points.
    #[serde(skip)]
    pub samples: Vec<Mat2>,
}

impl ConjugationReport {
    /// Values of `b` on the grid.
    #[must_use]
    pub fn b_samples(&self) -> Vec<Complex64> {
        self.samples.iter().map(|m| m.b).collect()
    }
}

/// Conjugates `coc` by `f` on `grid` points and measures the residual block against the
/// rotation by `theta`.
pub fn conjugation_residuals<F: MatrixFunction + ?Sized, C: Cocycle + ?Sized>(
    f: &F,
    coc: &C,
    theta: f64,
    grid: usize,
    cutoff: usize,
    exec: Execution,
) -> Result<ConjugationReport> {
    conjugate(f, coc, theta, grid, cutoff, Stage::B, exec)
}

fn conjugate<F: MatrixFunction + ?Sized, C: Cocycle + ?Sized>(
    f: &F,
    coc: &C,
    theta: f64,
    grid: usize,
    cutoff: usize,
    stage: Stage,
    exec: Execution,
) -> Result<ConjugationReport> {
    if grid <= 2 * cutoff {
        return Err(HarperError::invalid(format!("grid {grid} must exceed twice the cutoff {cutoff}")));
    }
    let alpha = coc.alpha();
    let rot = Mat2::diag(phase(theta), phase(-theta));
    let rows = map_range(exec, grid, |j| {
        let x = grid_point(j, grid);
        let fx = f.at(x);
        let inv = f.at(x + alpha).inverse()?;
        Some((inv * coc.at(x) * fx - rot, fx.norm(), (fx.det() - 1.0).norm()))
    });
    let rows: Vec<(Mat2, f64, f64)> = rows.into_iter().collect::<Option<_>>().ok_or_else(|| HarperError::guard("conjugator is singular on the grid"))?;
    if rows.iter().any(|r| !r.0.is_finite()) {
        return Err(HarperError::guard("non-finite conjugated cocycle"));
    }
    let samples: Vec<Mat2> = rows.iter().map(|r| r.0).collect();
    let entry = |sel: fn(&Mat2) -> Complex64| grid_norm(&samples.iter().map(sel).collect::<Vec<_>>());
    let (beta1, b, beta2, beta3) = (entry(|m| m.a), entry(|m| m.b), entry(|m| m.c), entry(|m| m.d));
    let beta3_bound = if beta1.lower < 1.0 { (b.lower * beta2.lower + beta1.lower) / (1.0 - beta1.lower) } else { f64::INFINITY };
    let b_vals: Vec<Complex64> = samples.iter().map(|m| m.b).collect();
    Ok(ConjugationReport {
        stage,
        theta,
        grid,
        beta1,
        b,
        beta2,
        beta3,
        residual_norm: samples.iter().map(Mat2::norm).fold(0.0, f64::max),
        conjugator_norm: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        det_defect: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        beta3_ok: beta3.lower <= beta3_bound + BETA3_SLACK,
        beta3_bound,
        b_coeffs: FourierSeries::from_samples(&b_vals, cutoff),
        samples,
    })
}

/// `W(x) = [[1, w(x)], [0, 1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Unipotent {
    pub w: FourierSeries,
}

impl MatrixFunction for Unipotent {
    fn at(&self, x: f64) -> Mat2 {
        Mat2::new(Complex64::new(1.0, 0.0), self.w.eval_real(x), ZERO, Complex64::new(1.0, 0.0))
    }
}

/// Pointwise product `F(x) G(x)`.
#[derive(Debug, Clone, Copy)]
pub struct Product<'a, F: ?Sized, G: ?Sized> {
    pub left: &'a F,
    pub right: &'a G,
}

impl<F: MatrixFunction + ?Sized, G: MatrixFunction + ?Sized> MatrixFunction for Product<'_, F, G> {
    fn at(&self, x: f64) -> Mat2 {
        self.left.at(x) * self.right.at(x)
    }
}

/// Splitting of `b` and the solution of the homological equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationReport {
    pub phi_stage: ConjugationReport,
    /// `w` with `w_k = -b_k e^{-2 pi i theta} / (1 - e^{-2 pi i (2 theta - k alpha)})` on the
    /// eliminated modes.
    pub w: FourierSeries,
    /// The resonant mode `n_j` kept in `b^r`, if any.
    pub resonant_mode: Option<i64>,
    /// Modes that failed [`DIVISOR_GUARD`] and were moved into `b^r`.
    pub near_resonant: Vec<i64>,
    /// `sup |b^l|` before and `sup |b' - b^r - b^h|` after.
    pub eliminable_before: f64,
    pub eliminable_after: f64,
    /// `eliminable_before / eliminable_after`.
    pub reduction: f64,
    /// `sup |W^{-1}(x + alpha) [rot + b^l] W(x) - rot|`: exactness of the retained modes.
    pub identity_residual: f64,
}

/// Eliminates the low modes of `b` by `W`, then measures `Phi = F W`.
///
/// `f` and `coc` must be the pair that produced `b_stage`.
pub fn homological_eliminate<F: MatrixFunction + ?Sized, C: Cocycle + ?Sized>(
    f: &F,
    coc: &C,
    b_stage: &ConjugationReport,
    resonant_mode: Option<i64>,
    exec: Execution,
) -> Result<EliminationReport> {
    let theta = b_stage.theta;
    let alpha = coc.alpha();
    let grid = b_stage.grid;
    let bh = &b_stage.b_coeffs;
    let cutoff = bh.cutoff();
    let lead = phase(-theta);
    let mut w = FourierSeries::zero(cutoff);
    let mut low = FourierSeries::zero(cutoff);
    let mut kept = FourierSeries::zero(cutoff);
    let mut near = Vec::new();
    let mut eliminated = 0usize;
    for (k, c) in bh.iter() {
        if Some(k) == resonant_mode {
            kept.set(k, c);
            continue;
        }
        let divisor = Complex64::new(1.0, 0.0) - phase(-(2.0 * theta - frac_mul(k, alpha)));
        if divisor.norm() < DIVISOR_GUARD {
            near.push(k);
            kept.set(k, c);
            continue;
        }
        w.set(k, -c * lead / divisor);
        low.set(k, c);
        eliminated += 1;
    }
    if eliminated == 0 {
        return Err(HarperError::guard("theta too resonant for elimination at this cutoff"));
    }
    let unip = Unipotent { w: w.clone() };
    let phi = Product { left: f, right: &unip };
    let phi_stage = conjugate(&phi, coc, theta, grid, cutoff, Stage::Phi, exec)?;

    let b_vals = b_stage.b_samples();
    let low_vals = low.sample(grid);
    let rot = Mat2::diag(phase(theta), phase(-theta));
    let rows = map_range(exec, grid, |j| {
        let x = grid_point(j, grid);
        // b' - b^r - b^h = b' - (b - b^l).
        let leftover = phi_stage.samples[j].b - (b_vals[j] - low_vals[j]);
        let model = rot + Mat2::new(ZERO, low_vals[j], ZERO, ZERO);
        let wx = unip.at(x);
        let winv = unip.at(x + alpha).inverse().expect("unipotent");
        (leftover.norm(), (winv * model * wx - rot).norm())
    });
    let eliminable_before = low_vals.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eliminable_after = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    Ok(EliminationReport {
        phi_stage,
        w,
        resonant_mode,
        near_resonant: near,
        eliminable_before,
        eliminable_after,
        reduction: eliminable_before / eliminable_after,
        identity_residual: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

/// Upper bound `ln sup ||B'||` for `B' = (Phi D)^{-1}(x + alpha) Abar (Phi D)(x)` with
/// `D = diag(1/d, d)`, `d = ||Phi|| eps^{1/4}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCertificate {
    pub epsilon: f64,
    pub d: f64,
    pub bound: f64,
    /// `bound / sqrt(eps)`.
    pub scaled: f64,
    /// `||Phi||^2 ||b'|| / 2`.
    pub intercept: f64,
    /// `bound <= 2 sqrt(eps) intercept`.
    pub valid: bool,
    /// `sup |det B' - 1|`.
    pub det_defect: f64,
}

/// `ln ||rot + X||` without cancellation against 1: with `Y = rot^* X`,
/// `||rot + X||^2 = 1 + lambda_max(Y + Y^* + Y^* Y)`.
fn log_norm_near_rotation(rot: &Mat2, x: &Mat2) -> f64 {
    let r = Mat2::new(rot.a.conj(), ZERO, ZERO, rot.d.conj());
    let y = r * *x;
    let ya = Mat2::new(y.a.conj(), y.c.conj(), y.b.conj(), y.d.conj());
    let h = y + ya + ya * y;
    let (p, q) = (h.a.re, h.d.re);
    let lam = 0.5 * (p + q) + (0.25 * (p - q).powi(2) + h.b.norm_sqr()).sqrt();
    0.5 * lam.ln_1p()
}

/// Certificate from the Phi-stage residual block.
pub fn holder_certificate(phi: &EliminationReport, epsilon: f64) -> Result<HolderCertificate> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(HarperError::invalid("epsilon must be positive"));
    }
    let st = &phi.phi_stage;
    let norm = st.conjugator_norm;
    let d = norm * epsilon.powf(0.25);
    let (d2, rot) = (d * d, Mat2::diag(phase(st.theta), phase(-st.theta)));
    let mut bound = 0.0f64;
    let mut det_defect = 0.0f64;
    for r in &st.samples {
        // D^{-1} R D scales the upper entry by d^2 and the lower by d^{-2}.
        let x = Mat2::new(r.a, r.b * d2, r.c / d2, r.d);
        bound = bound.max(log_norm_near_rotation(&rot, &x));
        det_defect = det_defect.max(((rot + x).det() - 1.0).norm());
    }
    let intercept = 0.5 * norm * norm * st.b.lower;
    let root = epsilon.sqrt();
    Ok(HolderCertificate {
        epsilon,
        d,
        bound,
        scaled: bound / root,
        intercept,
        valid: bound <= 2.0 * root * intercept,
        det_defect,
    })
}
