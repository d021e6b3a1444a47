//! Conjugation of the raw cocycle to the renormalised one.
//!
//! With `g1 = log c`, `g2 = log cbar` (zero-winding branches in region II) and `f` solving
//! `2 f(x + alpha) - 2 f(x) = g1 - g2`, the matrix
//! `Q(x) = e^{f(x)} sqrt(|c|(x - alpha)) diag(1, sqrt(cbar(x - alpha) / c(x - alpha)))`
//! satisfies `Q(x + alpha) A(x) Q(x)^{-1} = Abar(x)`.
//!
//! Off the real line `|c|` means `e^{(g1 + g2)/2}` and every factor of `Q` is built from the
//! series `f`, `g1`, `g2`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fourier::FourierSeries;
use crate::arithmetic::{frac_mul, Frequency};
use crate::error::{HarperError, Result};
use crate::linalg::Mat2;
use crate::operator::{c_real, eval_c, eval_cbar, Coupling};

/// Smallest grid accepted for the logarithm unwrap.
pub const MIN_LOG_GRID: usize = 4096;
/// Divisors `|e^{2 pi i k alpha} - 1|` below this abort the construction.
pub const DIVISOR_FLOOR: f64 = 1e-13;
/// Residual threshold defining the usable strip.
pub const STRIP_RESIDUAL: f64 = 1e-6;
const STRIP_STEPS: usize = 16;
const STRIP_POINTS: usize = 256;

/// Result of the conjugation construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QConjugation {
    pub coupling: Coupling,
    pub alpha: f64,
    pub cutoff: usize,
    pub grid: usize,
    pub f: FourierSeries,
    pub g1: FourierSeries,
    pub g2: FourierSeries,
    pub q: [[FourierSeries; 2]; 2],
    pub q_inv: [[FourierSeries; 2]; 2],
    /// Largest tested `s` with strip residual below [`STRIP_RESIDUAL`].
    pub strip: f64,
    /// `max_x ||Q(x + alpha) A(x) Q(x)^{-1} - Abar(x)||` on the real grid, at `E = 0`.
    pub residual: f64,
    /// `max_x |2 f(x + alpha) - 2 f(x) - (g1 - g2)(x)|` on the real grid.
    pub cohomological_residual: f64,
    /// `integral arg c` from the unwrapped samples.
    pub mean_arg: f64,
    /// `L_bar >= 5 beta_hat`.
    pub hypothesis_ok: bool,
}

impl QConjugation {
    /// Scalar factor `e^{f(z) + (g1 + g2)(z - alpha)/4}` and ratio `e^{(g2 - g1)(z - alpha)/2}`.
    fn factors(&self, z: Complex64) -> (Complex64, Complex64) {
        let zp = z - self.alpha;
        let (a, b) = (self.g1.eval(zp), self.g2.eval(zp));
        ((self.f.eval(z) + (a + b) / 4.0).exp(), ((b - a) / 2.0).exp())
    }

    /// `Q(z)`.
    #[must_use]
    pub fn q_at(&self, z: Complex64) -> Mat2 {
        let (s, r) = self.factors(z);
        Mat2::diag(s, s * r)
    }

    /// `Q(z)^{-1}`.
    #[must_use]
    pub fn q_inv_at(&self, z: Complex64) -> Mat2 {
        let (s, r) = self.factors(z);
        Mat2::diag(s.inv(), (s * r).inv())
    }

    /// `|c|(z) = e^{(g1 + g2)(z)/2}`.
    #[must_use]
    pub fn abs_c(&self, z: Complex64) -> Complex64 {
        ((self.g1.eval(z) + self.g2.eval(z)) / 2.0).exp()
    }

    /// `||Q(z + alpha) A(z) Q(z)^{-1} - Abar(z)||` at energy `E`.
    #[must_use]
    pub fn residual_at(&self, energy: f64, z: Complex64) -> f64 {
        let lam = &self.coupling;
        let c = eval_c(lam, self.alpha, z);
        let cb_prev = eval_cbar(lam, self.alpha, z - self.alpha);
        let v = energy - 2.0 * (z * TAU).cos();
        let a = Mat2::new(v / c, -cb_prev / c, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let lhs = self.q_at(z + self.alpha) * a * self.q_inv_at(z);
        let (m, mp) = if z.im == 0.0 {
            let x = z.re;
            (Complex64::from(c_real(lam, self.alpha, x).norm()), Complex64::from(c_real(lam, self.alpha, x - self.alpha).norm()))
        } else {
            (self.abs_c(z), self.abs_c(z - self.alpha))
        };
        let s = (m * mp).sqrt().inv();
        let abar = Mat2::new(v * s, -mp * s, m * s, Complex64::new(0.0, 0.0));
        (lhs - abar).norm()
    }
}

/// Builds `f`, `g1`, `g2`, `Q` and `Q^{-1}` with Fourier cutoff `K` from `M` grid samples.
pub fn build_q_conjugation(lam: &Coupling, freq: &Frequency, cutoff: usize, grid: usize) -> Result<QConjugation> {
    let l_bar = crate::cocycle::lyapunov_closed_form(lam)?;
    if grid < MIN_LOG_GRID || 2 * cutoff >= grid {
        return Err(HarperError::invalid(format!("need grid >= {MIN_LOG_GRID} and grid > 2 cutoff, got {grid}, {cutoff}")));
    }
    let alpha = freq.value;
    let xs: Vec<f64> = (0..grid).map(|j| j as f64 / grid as f64).collect();
    let cs: Vec<Complex64> = xs.iter().map(|&x| c_real(lam, alpha, x)).collect();
    if let Some((j, _)) = cs.iter().enumerate().find(|(_, c)| c.norm() < 1e-14) {
        return Err(HarperError::SymbolZero { x: xs[j] });
    }
    // Unwrap arg c along the grid and around the circle.
    let mut args = Vec::with_capacity(grid);
    let mut prev = cs[0].arg();
    args.push(prev);
    for c in &cs[1..] {
        let mut a = c.arg();
        while a - prev > PI {
            a -= TAU;
        }
        while a - prev < -PI {
            a += TAU;
        }
        args.push(a);
        prev = a;
    }
    let mut closing = cs[0].arg();
    while closing - prev > PI {
        closing -= TAU;
    }
    while closing - prev < -PI {
        closing += TAU;
    }
    let winding = ((closing - args[0]) / TAU).round();
    if winding != 0.0 {
        return Err(HarperError::guard(format!("arg c winds {winding} times; region II requires zero")));
    }
    let mean_arg = args.iter().sum::<f64>() / grid as f64;
    if mean_arg.abs() > 1e-8 {
        return Err(HarperError::guard(format!("mean of arg c is {mean_arg}, expected 0")));
    }
    let g1_samples: Vec<Complex64> = cs.iter().zip(&args).map(|(c, &a)| Complex64::new(c.norm().ln(), a)).collect();
    let g1 = FourierSeries::from_samples(&g1_samples, cutoff);
    let mut g2 = FourierSeries::zero(cutoff);
    for (k, _) in g1.iter() {
        g2.set(k, g1.coeff(-k).conj());
    }
    let mut f = FourierSeries::zero(cutoff);
    for k in (-(cutoff as i64)..=cutoff as i64).filter(|&k| k != 0) {
        let divisor = Complex64::from_polar(1.0, TAU * frac_mul(k, alpha)) - 1.0;
        if divisor.norm() < DIVISOR_FLOOR {
            return Err(HarperError::guard(format!("small divisor at k = {k}: |e^(2 pi i k alpha) - 1| = {}", divisor.norm())));
        }
        f.set(k, (g1.coeff(k) - g2.coeff(k)) / (2.0 * divisor));
    }
    let f_shift_diff = f.shift(alpha).sub(&f).scale(2.0.into()).sub(&g1.sub(&g2));
    let cohomological_residual = f_shift_diff.sample(grid).iter().map(|v| v.norm()).fold(0.0, f64::max);

    let mut out = QConjugation {
        coupling: *lam,
        alpha,
        cutoff,
        grid,
        f,
        g1,
        g2,
        q: zero_matrix(),
        q_inv: zero_matrix(),
        strip: 0.0,
        residual: 0.0,
        cohomological_residual,
        mean_arg,
        hypothesis_ok: l_bar >= 5.0 * freq.beta_hat,
    };
    let (mut s11, mut s22, mut i11, mut i22) = (vec![], vec![], vec![], vec![]);
    for &x in &xs {
        let q = out.q_at(x.into());
        s11.push(q.a);
        s22.push(q.d);
        i11.push(q.a.inv());
        i22.push(q.d.inv());
    }
    let series = |v: &[Complex64]| FourierSeries::from_samples(v, cutoff);
    let z = FourierSeries::zero(0);
    out.q = [[series(&s11), z.clone()], [z.clone(), series(&s22)]];
    out.q_inv = [[series(&i11), z.clone()], [z.clone(), series(&i22)]];
    out.residual = xs.iter().map(|&x| out.residual_at(0.0, x.into())).fold(0.0, f64::max);
    out.strip = usable_strip(&out, l_bar / (4.0 * PI));
    Ok(out)
}

fn zero_matrix() -> [[FourierSeries; 2]; 2] {
    let z = FourierSeries::zero(0);
    [[z.clone(), z.clone()], [z.clone(), z]]
}

/// Largest `s = j s_max / 16` such that every tested strip up to `s` has residual below
/// [`STRIP_RESIDUAL`].
fn usable_strip(q: &QConjugation, s_max: f64) -> f64 {
    let mut best = 0.0;
    for j in 1..=STRIP_STEPS {
        let s = s_max * j as f64 / STRIP_STEPS as f64;
        let worst = (0..STRIP_POINTS)
            .flat_map(|i| {
                let x = i as f64 / STRIP_POINTS as f64;
                [Complex64::new(x, s), Complex64::new(x, -s)]
            })
            .map(|z| q.residual_at(0.0, z))
            .fold(0.0, f64::max);
        if !(worst < STRIP_RESIDUAL) {
            break;
        }
        best = s;
    }
    best
}
