//! The extended Harper operator: coupling, hopping symbol and finite truncations.
//!
//! The symbol is `c(x) = l1 e^{-2 pi i (x + alpha/2)} + l2 + l3 e^{2 pi i (x + alpha/2)}` and
//! `cbar` is its analytic extension off the real line (`cbar(x) = conj c(x)` for real `x`).
//! The operator acts as `(H u)_n = c(x + n alpha) u_{n+1} + cbar(x + (n-1) alpha) u_{n-1}
//! + 2 cos 2 pi (x + n alpha) u_n`.

pub mod sturm;

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HarperError, Result};
pub use sturm::{SymTridiagonal, EIGEN_TOL};

/// Tolerance used when deciding region boundaries.
pub const REGION_TOL: f64 = 1e-12;

/// Coupling `(l1, l2, l3)`, all nonnegative. Serialises as a 3-array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Coupling {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl TryFrom<[f64; 3]> for Coupling {
    type Error = HarperError;
    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<Coupling> for [f64; 3] {
    fn from(c: Coupling) -> Self {
        [c.l1, c.l2, c.l3]
    }
}

impl Coupling {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Result<Self> {
        for v in [l1, l2, l3] {
            if !v.is_finite() || v < 0.0 {
                return Err(HarperError::invalid(format!("coupling components must be finite and >= 0, got {v}")));
            }
        }
        if l1 + l2 + l3 == 0.0 {
            return Err(HarperError::invalid("coupling must not vanish identically"));
        }
        Ok(Self { l1, l2, l3 })
    }

    /// The almost Mathieu case `l1 = l3 = 0`.
    #[must_use]
    pub fn is_amo(&self) -> bool {
        self.l1 == 0.0 && self.l3 == 0.0
    }

    #[must_use]
    pub fn as_array(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    #[must_use]
    pub fn region(&self) -> RegionTag {
        classify_region(self)
    }
}

/// Parameter regions of the extended Harper model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionTag {
    /// `l1 + l3 <= 1`, `0 < l2 <= 1`.
    I,
    /// `l1 + l3 <= l2`, `l2 >= 1` (open version).
    II,
    /// `max(l1 + l3, l2) >= 1` and `l2 <= l1 + l3` (open version).
    III,
    /// On a separating boundary.
    Boundary,
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
            Self::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

/// Classifies a coupling; the boundaries `l1 + l3 = 1`, `l2 = 1` and `l1 + l3 = l2`
/// are detected within [`REGION_TOL`].
#[must_use]
pub fn classify_region(lam: &Coupling) -> RegionTag {
    let s = lam.l1 + lam.l3;
    let l2 = lam.l2;
    let near = |a: f64, b: f64| (a - b).abs() <= REGION_TOL;
    if near(s, 1.0) && l2 <= 1.0 + REGION_TOL
        || near(l2, 1.0) && s <= 1.0 + REGION_TOL
        || near(s, l2) && l2 >= 1.0 - REGION_TOL
    {
        return RegionTag::Boundary;
    }
    if s < 1.0 && l2 < 1.0 && l2 > 0.0 {
        RegionTag::I
    } else if s < l2 && l2 > 1.0 {
        RegionTag::II
    } else if l2 < s && s > 1.0 {
        RegionTag::III
    } else {
        RegionTag::Boundary
    }
}

/// Aubry dual coupling `(l3/l2, 1/l2, l1/l2)`.
pub fn dual_coupling(lam: &Coupling) -> Result<Coupling> {
    if lam.l2 == 0.0 {
        return Err(HarperError::invalid("dual coupling needs l2 > 0"));
    }
    Coupling::new(lam.l3 / lam.l2, 1.0 / lam.l2, lam.l1 / lam.l2)
}

/// `c(z)` for complex `z`.
#[must_use]
pub fn eval_c(lam: &Coupling, alpha: f64, z: Complex64) -> Complex64 {
    let w = (Complex64::i() * TAU * (z + alpha / 2.0)).exp();
    lam.l1 / w + lam.l2 + lam.l3 * w
}

/// Analytic extension of `conj c`: `cbar(z) = l1 e^{2 pi i (z + alpha/2)} + l2 + l3 e^{-2 pi i (z + alpha/2)}`.
#[must_use]
pub fn eval_cbar(lam: &Coupling, alpha: f64, z: Complex64) -> Complex64 {
    let w = (Complex64::i() * TAU * (z + alpha / 2.0)).exp();
    lam.l1 * w + lam.l2 + lam.l3 / w
}

/// `c(x)` for real `x`.
#[must_use]
pub fn c_real(lam: &Coupling, alpha: f64, x: f64) -> Complex64 {
    let y = TAU * (x + alpha / 2.0);
    let (s, co) = y.sin_cos();
    Complex64::new((lam.l1 + lam.l3) * co + lam.l2, (lam.l3 - lam.l1) * s)
}

/// Half-width `L_bar / (2 pi)` of the strip on which `|c|` is continued analytically,
/// with `L_bar` the closed-form dual Lyapunov exponent. Region II only.
pub fn abs_c_strip(lam: &Coupling) -> Result<f64> {
    Ok(crate::cocycle::lyapunov_closed_form(lam)? / TAU)
}

/// `|c|(z) = sqrt(c(z) cbar(z))` on the principal branch.
///
/// Real `z` works for every coupling. Complex `z` requires region II and `|Im z|` below
/// [`abs_c_strip`], where `Re c > 0`.
pub fn eval_abs_c(lam: &Coupling, alpha: f64, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Ok(Complex64::new(c_real(lam, alpha, z.re).norm(), 0.0));
    }
    let strip = abs_c_strip(lam)?;
    if z.im.abs() >= strip {
        return Err(HarperError::invalid(format!("|Im z| = {} outside analyticity strip {strip}", z.im.abs())));
    }
    Ok((eval_c(lam, alpha, z) * eval_cbar(lam, alpha, z)).sqrt())
}

/// `2 cos 2 pi x`.
#[must_use]
pub fn potential(x: f64) -> f64 {
    2.0 * (TAU * x).cos()
}

/// Dirichlet truncation of the operator to sites `0..n` at phase `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub coupling: Coupling,
    pub alpha: f64,
    pub phase: f64,
    /// `2 cos 2 pi (x + k alpha)`.
    pub diag: Vec<f64>,
    /// `H_{k, k+1} = c(x + k alpha)`; the subdiagonal is its conjugate.
    pub offdiag: Vec<Complex64>,
}

/// Builds the size-`n` truncation at phase `x`.
pub fn build_truncation(lam: &Coupling, alpha: f64, x: f64, n: usize) -> Result<TridiagonalOperator> {
    if n == 0 {
        return Err(HarperError::invalid("truncation size must be positive"));
    }
    if !alpha.is_finite() || !x.is_finite() {
        return Err(HarperError::invalid("alpha and phase must be finite"));
    }
    let diag = (0..n).map(|k| potential(x + crate::arithmetic::frac_mul(k as i64, alpha))).collect();
    let offdiag = (0..n - 1)
        .map(|k| c_real(lam, alpha, x + crate::arithmetic::frac_mul(k as i64, alpha)))
        .collect();
    Ok(TridiagonalOperator { coupling: *lam, alpha, phase: x, diag, offdiag })
}

/// Real symmetric form `D H D*` of a Hermitian tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugedTridiagonal {
    pub matrix: SymTridiagonal,
    /// Gauge phases: `phi_0 = 0`, `phi_{k+1} = phi_k + arg h_k`.
    pub phases: Vec<f64>,
}

impl GaugedTridiagonal {
    /// Maps an eigenvector of the real form back: `u_k = e^{-i phi_k} x_k`.
    #[must_use]
    pub fn unfold(&self, x: &[f64]) -> Vec<Complex64> {
        x.iter().zip(&self.phases).map(|(&v, &p)| Complex64::from_polar(v, -p)).collect()
    }
}

impl TridiagonalOperator {
    #[must_use]
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// Row-major dense copy.
    #[must_use]
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        hermitian_dense(&self.diag, &self.offdiag)
    }

    #[must_use]
    pub fn gauge(&self) -> GaugedTridiagonal {
        gauge_hermitian(&self.diag, &self.offdiag)
    }

    /// Eigenvalues ascending, each within [`EIGEN_TOL`].
    #[must_use]
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.gauge().matrix.eigenvalues(EIGEN_TOL)
    }
}

/// Dense Hermitian matrix with the given diagonal and superdiagonal.
#[must_use]
pub fn hermitian_dense(diag: &[f64], sup: &[Complex64]) -> Vec<Vec<Complex64>> {
    let n = diag.len();
    let mut m = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for k in 0..n {
        m[k][k] = diag[k].into();
        if k + 1 < n {
            m[k][k + 1] = sup[k];
            m[k + 1][k] = sup[k].conj();
        }
    }
    m
}

/// Gauges a Hermitian tridiagonal matrix to a real symmetric one with `|h_k|` off-diagonal.
#[must_use]
pub fn gauge_hermitian(diag: &[f64], sup: &[Complex64]) -> GaugedTridiagonal {
    let mut phases = Vec::with_capacity(diag.len());
    let mut phi = 0.0;
    phases.push(phi);
    for h in sup {
        phi += h.arg();
        phases.push(phi);
    }
    let e = sup.iter().map(|h| h.norm()).collect();
    GaugedTridiagonal { matrix: SymTridiagonal::new(diag.to_vec(), e), phases }
}

/// Eigenvalues of `H_{lam, alpha, x}` truncated to `n` sites, ascending.
pub fn eigenvalues(lam: &Coupling, alpha: f64, x: f64, n: usize) -> Result<Vec<f64>> {
    Ok(build_truncation(lam, alpha, x, n)?.eigenvalues())
}

/// `integral ln|c(x)| dx` by quadrature and, where available, in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanLogC {
    pub quadrature: f64,
    /// `ln((l2 + sqrt(l2^2 - 4 l1 l3)) / 2)`, valid when `l2 >= l1 + l3`.
    pub closed_form: Option<f64>,
}

/// Number of trapezoid nodes used by [`mean_log_c`].
pub const MEAN_LOG_NODES: usize = 1 << 14;

#[must_use]
pub fn mean_log_c(lam: &Coupling) -> MeanLogC {
    let n = MEAN_LOG_NODES;
    let sum: f64 = (0..n)
        .map(|j| {
            let (s, c) = (TAU * j as f64 / n as f64).sin_cos();
            Complex64::new((lam.l1 + lam.l3) * c + lam.l2, (lam.l3 - lam.l1) * s).norm().ln()
        })
        .sum();
    let closed_form = (lam.l2 >= lam.l1 + lam.l3 && lam.l2 > 0.0)
        .then(|| ((lam.l2 + (lam.l2 * lam.l2 - 4.0 * lam.l1 * lam.l3).max(0.0).sqrt()) / 2.0).ln());
    MeanLogC { quadrature: sum / n as f64, closed_form }
}

/// Spectral radius bound `sup|2 cos| + 2 sup|c|`.
#[must_use]
pub fn norm_bound(lam: &Coupling) -> f64 {
    2.0 + 2.0 * (lam.l1 + lam.l2 + lam.l3)
}
