//! Complex 2x2 matrices.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// The matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl Mat2 {
    pub const IDENTITY: Self = Self { a: ONE, b: ZERO, c: ZERO, d: ONE };
    pub const ZERO: Self = Self { a: ZERO, b: ZERO, c: ZERO, d: ZERO };

    #[must_use]
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    #[must_use]
    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    #[must_use]
    pub fn diag(p: Complex64, q: Complex64) -> Self {
        Self::new(p, ZERO, ZERO, q)
    }

    /// `diag(e^{2 pi i theta}, e^{-2 pi i theta})`.
    #[must_use]
    pub fn rotation(theta: f64) -> Self {
        let e = Complex64::from_polar(1.0, TAU * theta);
        Self::diag(e, e.conj())
    }

    /// Matrix with columns `u` and `v`.
    #[must_use]
    pub fn from_columns(u: [Complex64; 2], v: [Complex64; 2]) -> Self {
        Self::new(u[0], v[0], u[1], v[1])
    }

    #[must_use]
    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    #[must_use]
    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Inverse, or `None` when the determinant vanishes.
    #[must_use]
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.norm() == 0.0 || !det.is_finite() {
            return None;
        }
        let r = det.inv();
        Some(Self::new(self.d * r, -self.b * r, -self.c * r, self.a * r))
    }

    /// Adjugate; equals the inverse when `det = 1`.
    #[must_use]
    pub fn adjugate(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    #[must_use]
    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    #[must_use]
    pub fn scale_real(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    #[must_use]
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    #[must_use]
    pub fn frobenius_sq(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    /// Operator 2-norm (largest singular value).
    #[must_use]
    pub fn norm(&self) -> f64 {
        let s = self.frobenius_sq();
        let m = self.det().norm();
        let disc = (s * s - 4.0 * m * m).max(0.0);
        ((s + disc.sqrt()) / 2.0).sqrt()
    }

    /// Largest entry modulus.
    #[must_use]
    pub fn max_abs(&self) -> f64 {
        self.a.norm().max(self.b.norm()).max(self.c.norm()).max(self.d.norm())
    }

    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }
}

impl Mul for Mat2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Add for Mat2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Mat2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

/// Euclidean norm of a complex 2-vector.
#[must_use]
pub fn vec_norm(v: [Complex64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}
