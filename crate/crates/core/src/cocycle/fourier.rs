//! Trigonometric polynomials on the circle and their norms on strips.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::linalg::{vec_norm, Mat2};

/// Boundary points used for strip-norm lower bounds.
pub const STRIP_GRID: usize = 1024;

/// `sum_{|k| <= K} c_k e^{2 pi i k z}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    cutoff: usize,
    /// `coeffs[k + cutoff]`.
    coeffs: Vec<Complex64>,
}

/// Serialised form `{cutoff, coeffs: [[k, re, im], ...]}`.
#[derive(Serialize, Deserialize)]
struct FourierRecord {
    cutoff: usize,
    coeffs: Vec<(i64, f64, f64)>,
}

impl Serialize for FourierSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let coeffs = self.iter().map(|(k, c)| (k, c.re, c.im)).collect();
        FourierRecord { cutoff: self.cutoff, coeffs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = FourierRecord::deserialize(d)?;
        let mut out = Self::zero(rec.cutoff);
        for (k, re, im) in rec.coeffs {
            if k.unsigned_abs() as usize > rec.cutoff {
                return Err(serde::de::Error::custom(format!("mode {k} exceeds cutoff {}", rec.cutoff)));
            }
            out.set(k, Complex64::new(re, im));
        }
        Ok(out)
    }
}

impl FourierSeries {
    #[must_use]
    pub fn zero(cutoff: usize) -> Self {
        Self { cutoff, coeffs: vec![Complex64::new(0.0, 0.0); 2 * cutoff + 1] }
    }

    #[must_use]
    pub fn constant(c: Complex64) -> Self {
        Self { cutoff: 0, coeffs: vec![c] }
    }

    /// `c e^{2 pi i k x}`.
    #[must_use]
    pub fn mode(k: i64, c: Complex64) -> Self {
        let mut s = Self::zero(k.unsigned_abs() as usize);
        s.set(k, c);
        s
    }

    /// From coefficients `c_{-K..=K}`.
    ///
    /// # Panics
    /// When the length is even.
    #[must_use]
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        assert!(coeffs.len() % 2 == 1, "need 2K+1 coefficients");
        Self { cutoff: coeffs.len() / 2, coeffs }
    }

    #[must_use]
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    #[must_use]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `c_k`, zero outside the cutoff.
    #[must_use]
    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.cutoff as i64) as usize]
        }
    }

    /// # Panics
    /// When `|k|` exceeds the cutoff.
    pub fn set(&mut self, k: i64, c: Complex64) {
        assert!(k.unsigned_abs() as usize <= self.cutoff, "mode outside cutoff");
        self.coeffs[(k + self.cutoff as i64) as usize] = c;
    }

    /// `(k, c_k)` for `k = -K..=K`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k0 = self.cutoff as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - k0, c))
    }

    /// Value at complex `z` (Horner in `e^{2 pi i z}` and its inverse).
    #[must_use]
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let w = (Complex64::i() * TAU * z).exp();
        self.eval_w(w, w.inv())
    }

    /// Value at real `x`.
    #[must_use]
    pub fn eval_real(&self, x: f64) -> Complex64 {
        let w = Complex64::from_polar(1.0, TAU * x);
        self.eval_w(w, w.conj())
    }

    fn eval_w(&self, w: Complex64, winv: Complex64) -> Complex64 {
        let k = self.cutoff;
        let mut pos = Complex64::new(0.0, 0.0);
        for c in self.coeffs[k + 1..].iter().rev() {
            pos = (pos + c) * w;
        }
        let mut neg = Complex64::new(0.0, 0.0);
        for c in &self.coeffs[..k] {
            neg = (neg + c) * winv;
        }
        self.coeffs[k] + pos + neg
    }

    /// Coefficients `|k| <= cutoff` of the trigonometric interpolant of samples at `x_j = j/M`.
    ///
    /// # Panics
    /// When `2 cutoff + 1 > M`.
    #[must_use]
    pub fn from_samples(samples: &[Complex64], cutoff: usize) -> Self {
        let m = samples.len();
        assert!(2 * cutoff < m, "cutoff {cutoff} too large for {m} samples");
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let scale = 1.0 / m as f64;
        let coeffs = (-(cutoff as i64)..=cutoff as i64).map(|k| buf[k.rem_euclid(m as i64) as usize] * scale).collect();
        Self { cutoff, coeffs }
    }

    /// Values at `x_j = j/M`, `j < M`.
    ///
    /// # Panics
    /// When `M <= 2 cutoff`.
    #[must_use]
    pub fn sample(&self, m: usize) -> Vec<Complex64> {
        assert!(m > 2 * self.cutoff, "grid {m} too small for cutoff {}", self.cutoff);
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (k, c) in self.iter() {
            buf[k.rem_euclid(m as i64) as usize] += c;
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        buf
    }

    /// Series of `x -> f(x + alpha)`.
    #[must_use]
    pub fn shift(&self, alpha: f64) -> Self {
        let coeffs = self
            .iter()
            .map(|(k, c)| c * Complex64::from_polar(1.0, TAU * crate::arithmetic::frac_mul(k, alpha)))
            .collect();
        Self { cutoff: self.cutoff, coeffs }
    }

    #[must_use]
    pub fn scale(&self, s: Complex64) -> Self {
        Self { cutoff: self.cutoff, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Same function with the cutoff changed (modes dropped or zero-padded).
    #[must_use]
    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        let mut out = Self::zero(cutoff);
        for (k, c) in self.iter() {
            if k.unsigned_abs() as usize <= cutoff {
                out.set(k, c);
            }
        }
        out
    }

    #[must_use]
    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.with_cutoff(self.cutoff.max(o.cutoff));
        for (k, c) in o.iter() {
            let v = out.coeff(k) + c;
            out.set(k, v);
        }
        out
    }

    #[must_use]
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Exact product (cutoff is the sum of the cutoffs).
    #[must_use]
    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.cutoff + o.cutoff);
        for (k, a) in self.iter() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            for (j, b) in o.iter() {
                let idx = (k + j + out.cutoff as i64) as usize;
                out.coeffs[idx] += a * b;
            }
        }
        out
    }

    /// `sum |c_k| e^{2 pi s |k|}`.
    #[must_use]
    pub fn weighted_l1(&self, s: f64) -> f64 {
        self.iter().map(|(k, c)| c.norm() * (TAU * s * k.abs() as f64).exp()).sum()
    }

    /// Largest `|c_k|` with `|k| >= from`.
    #[must_use]
    pub fn tail_max(&self, from: usize) -> f64 {
        self.iter().filter(|(k, _)| k.unsigned_abs() as usize >= from).map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }
}

/// Lower and upper bounds for a strip norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormPair {
    pub lower: f64,
    pub upper: f64,
}

/// Strip norms `sup_{|Im z| < s}` of series-valued objects.
pub trait StripNorm {
    /// Lower bound from the boundary grid, upper bound from weighted coefficient sums.
    fn strip_norm(&self, s: f64) -> NormPair;
}

fn boundary_points(s: f64) -> impl Iterator<Item = Complex64> {
    (0..STRIP_GRID).flat_map(move |j| {
        let x = j as f64 / STRIP_GRID as f64;
        [Complex64::new(x, s), Complex64::new(x, -s)]
    })
}

impl StripNorm for FourierSeries {
    fn strip_norm(&self, s: f64) -> NormPair {
        let lower = boundary_points(s).map(|z| self.eval(z).norm()).fold(0.0, f64::max);
        NormPair { lower, upper: self.weighted_l1(s) }
    }
}

impl StripNorm for [FourierSeries; 2] {
    fn strip_norm(&self, s: f64) -> NormPair {
        let lower = boundary_points(s).map(|z| vec_norm([self[0].eval(z), self[1].eval(z)])).fold(0.0, f64::max);
        let upper = self.iter().map(|f| f.weighted_l1(s).powi(2)).sum::<f64>().sqrt();
        NormPair { lower, upper }
    }
}

impl StripNorm for [[FourierSeries; 2]; 2] {
    fn strip_norm(&self, s: f64) -> NormPair {
        let lower = boundary_points(s).map(|z| eval_matrix(self, z).norm()).fold(0.0, f64::max);
        let upper = self.iter().flatten().map(|f| f.weighted_l1(s).powi(2)).sum::<f64>().sqrt();
        NormPair { lower, upper }
    }
}

/// Pointwise value of a matrix of series.
#[must_use]
pub fn eval_matrix(m: &[[FourierSeries; 2]; 2], z: Complex64) -> Mat2 {
    Mat2::new(m[0][0].eval(z), m[0][1].eval(z), m[1][0].eval(z), m[1][1].eval(z))
}

/// Free-function form of [`StripNorm::strip_norm`].
pub fn strip_norm<T: StripNorm + ?Sized>(series: &T, s: f64) -> NormPair {
    series.strip_norm(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_roundtrip() {
        let mut f = FourierSeries::zero(5);
        for k in -5..=5i64 {
            f.set(k, Complex64::new(k as f64 * 0.1, 1.0 / (1.0 + k.abs() as f64)));
        }
        let g = FourierSeries::from_samples(&f.sample(64), 5);
        for (a, b) in f.coeffs().iter().zip(g.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
        let x = 0.3;
        let direct: Complex64 = f.iter().map(|(k, c)| c * Complex64::from_polar(1.0, TAU * k as f64 * x)).sum();
        assert!((direct - f.eval_real(x)).norm() < 1e-14);
    }

    #[test]
    fn shift_matches_pointwise() {
        let f = FourierSeries::from_coeffs(vec![
            Complex64::new(0.2, 0.1),
            Complex64::new(1.0, 0.0),
            Complex64::new(-0.3, 0.4),
        ]);
        let g = f.shift(0.37);
        assert!((g.eval_real(0.1) - f.eval_real(0.47)).norm() < 1e-14);
    }

    #[test]
    fn product_is_pointwise() {
        let f = FourierSeries::mode(2, Complex64::new(1.0, 1.0)).add(&FourierSeries::constant(Complex64::new(0.5, 0.0)));
        let g = FourierSeries::mode(-1, Complex64::new(0.0, 2.0));
        let z = Complex64::new(0.21, 0.05);
        assert!((f.mul(&g).eval(z) - f.eval(z) * g.eval(z)).norm() < 1e-13);
    }
}
