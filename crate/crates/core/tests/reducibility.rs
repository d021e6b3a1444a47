use std::f64::consts::TAU;
use std::sync::OnceLock;

use harper_core::arithmetic::{frac_mul, Frequency};
use harper_core::cocycle::{Cocycle, FourierCocycle, FourierSeries, MatrixFunction};
use harper_core::linalg::Mat2;
use harper_core::operator::{build_truncation, dual_coupling, Coupling};
use harper_core::par::Execution;
use harper_core::reducibility::{
    complete_to_sl2, conjugation_residuals, decay_rate, dual_bloch_wave, holder_certificate, homological_eliminate, reduce,
    ReduceSettings, ReductionChain,
};
use harper_core::{Complex64, HarperError};
use proptest::prelude::*;

const GRID: usize = 512;
const CUTOFF: usize = 32;

fn golden() -> Frequency {
    Frequency::golden(30).unwrap()
}

fn amo() -> Coupling {
    Coupling::new(0.0, 2.0, 0.0).unwrap()
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn phase(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * t)
}

/// The desk instance: AMO coupling 2, golden frequency, E = 0.
fn desk() -> &'static ReductionChain {
    static CHAIN: OnceLock<ReductionChain> = OnceLock::new();
    CHAIN.get_or_init(|| reduce(&amo(), &golden(), 0.0, &ReduceSettings::default(), Execution::Parallel).unwrap())
}

/// `rot(theta) + [[0, b], [0, 0]]` as a Fourier cocycle.
fn upper_cocycle(alpha: f64, theta: f64, b: FourierSeries) -> FourierCocycle {
    let c = FourierSeries::constant;
    FourierCocycle { alpha, entries: [[c(phase(theta)), b], [c(cx(0.0, 0.0)), c(phase(-theta))]] }
}

fn identity() -> FourierCocycle {
    FourierCocycle::constant(0.0, Mat2::IDENTITY)
}

fn sample_b() -> FourierSeries {
    let mut b = FourierSeries::zero(6);
    for k in -6i64..=6 {
        b.set(k, cx(0.1 / (1.0 + k.abs() as f64), 0.05 * k as f64 / 6.0));
    }
    b
}

/// `A(x) = B(x + alpha) M(x) B(x)^{-1}` for a given conjugator and model.
struct Conjugated<'a> {
    b: &'a dyn MatrixFunction,
    model: &'a FourierCocycle,
}

impl MatrixFunction for Conjugated<'_> {
    fn at(&self, x: f64) -> Mat2 {
        let a = self.model.alpha;
        self.b.at(x + a) * self.model.at(x) * self.b.at(x).inverse().unwrap()
    }
}

impl Cocycle for Conjugated<'_> {
    fn alpha(&self) -> f64 {
        self.model.alpha
    }
}

#[test]
fn bloch_wave_properties() {
    let chain = desk();
    let w = &chain.search.wave;
    assert_eq!(w.coeffs.coeff(0), cx(1.0, 0.0));
    assert!(w.max_abs <= 1.05);
    assert!(w.dual_eigen_residual <= 1e-6);
    assert!(!w.ill_conditioned);
    let m = w.coeffs.cutoff();
    for k in 5..=(m / 3) as i64 {
        let bound = (-0.3 * k as f64).exp();
        assert!(w.coeffs.coeff(k).norm() <= bound && w.coeffs.coeff(-k).norm() <= bound, "k = {k}");
    }
    let rate = decay_rate(w, 5, m / 3).unwrap();
    assert!(rate >= chain.config.h / 2.0, "{rate}");
}

#[test]
fn bloch_wave_solves_dual_equation() {
    let chain = desk();
    let w = &chain.search.wave;
    let m = w.coeffs.cutoff();
    let alpha = golden().value;
    let dual = dual_coupling(&amo()).unwrap();
    let op = build_truncation(&dual, alpha, w.theta - frac_mul(m as i64, alpha), 2 * m + 1).unwrap();
    let t = chain.energy / amo().l2;
    let u = |j: usize| w.coeffs.coeff(j as i64 - m as i64);
    let mut worst = 0.0f64;
    for j in 1..2 * m {
        let hu = op.offdiag[j] * u(j + 1) + op.offdiag[j - 1].conj() * u(j - 1) + op.diag[j] * u(j);
        worst = worst.max((hu - t * u(j)).norm());
    }
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn bloch_wave_needs_spectrum_energy() {
    // E = 1 lies in the m = 1 gap of the coupling-2 AMO spectrum.
    let err = dual_bloch_wave(&amo(), &golden(), 1.0, 200, 1024, Execution::Parallel).unwrap_err();
    assert!(matches!(err, HarperError::NotFound(_)), "{err}");
}

#[test]
fn reduce_requires_region_two() {
    let lam = Coupling::new(0.5, 0.5, 0.7).unwrap();
    assert!(matches!(
        reduce(&lam, &golden(), 0.0, &ReduceSettings::default(), Execution::Sequential),
        Err(HarperError::WrongRegion { .. })
    ));
}

#[test]
fn windowed_vector_properties() {
    let chain = desk();
    let v = &chain.windowed;
    let (alpha, theta) = (v.alpha, v.theta);
    for k in -(v.window as i64)..=v.window as i64 {
        let want = v.u[0].coeff(k) * phase(-theta) * phase(-frac_mul(k, alpha));
        assert!((v.u[1].coeff(k) - want).norm() < 1e-15);
    }
    assert!(v.defect <= 1e-3, "{}", v.defect);
    assert!(v.min_norm > 0.0);
    assert!(v.strip_norm.lower <= v.strip_norm.upper);
}

#[test]
fn completion_of_constant_vector_is_identity() {
    let u = [FourierSeries::constant(cx(1.0, 0.0)), FourierSeries::zero(0)];
    let (b, report) = complete_to_sl2(&u, 64, Execution::Sequential).unwrap();
    for x in [0.0, 0.3, 0.77] {
        assert_eq!(b.at(x), Mat2::IDENTITY);
    }
    assert_eq!(report.condition_bound, 1.0);
}

#[test]
fn completion_condition_number() {
    let mut u1 = FourierSeries::zero(2);
    u1.set(0, cx(1.0, 0.0));
    u1.set(1, cx(0.3, 0.2));
    let u2 = FourierSeries::mode(-2, cx(0.0, 0.5));
    let (_, r) = complete_to_sl2(&[u1, u2], 256, Execution::Sequential).unwrap();
    assert!(r.det_defect <= 1e-12);
    // Singular values of B(x) are |U| and 1/|U|.
    assert!((r.condition - r.condition_bound).abs() <= 1e-9 * r.condition_bound);
    if r.min_norm <= 1.0 && r.max_norm >= 1.0 {
        assert!(r.condition <= r.ratio_bound * (1.0 + 1e-12));
    }
}

#[test]
fn completion_rejects_vanishing_vector() {
    let mut u1 = FourierSeries::zero(1);
    u1.set(0, cx(-1.0, 0.0));
    u1.set(1, cx(1.0, 0.0));
    let u = [u1, FourierSeries::zero(0)];
    assert!(complete_to_sl2(&u, 64, Execution::Sequential).is_err());
}

#[test]
fn exact_conjugation_has_no_diagonal_residual() {
    let alpha = golden().value;
    let model = upper_cocycle(alpha, 0.13, sample_b());
    let mut u1 = FourierSeries::zero(1);
    u1.set(0, cx(1.2, 0.0));
    u1.set(1, cx(0.2, -0.1));
    let (b, _) = complete_to_sl2(&[u1, FourierSeries::mode(1, cx(0.3, 0.0))], GRID, Execution::Sequential).unwrap();
    let coc = Conjugated { b: &b, model: &model };
    let r = conjugation_residuals(&b, &coc, 0.13, GRID, CUTOFF, Execution::Sequential).unwrap();
    assert!(r.beta1.lower <= 1e-12 && r.beta2.lower <= 1e-12 && r.beta3.lower <= 1e-12, "{r:?}");
    for k in -6i64..=6 {
        assert!((r.b_coeffs.coeff(k) - sample_b().coeff(k)).norm() <= 1e-12);
    }
    assert!(r.beta3_ok && r.det_defect <= 1e-10);
}

#[test]
fn elimination_is_exact_on_retained_modes() {
    let alpha = golden().value;
    let theta = 0.13;
    let coc = upper_cocycle(alpha, theta, sample_b());
    let id = identity();
    let b_stage = conjugation_residuals(&id, &coc, theta, GRID, CUTOFF, Execution::Sequential).unwrap();
    let e = homological_eliminate(&id, &coc, &b_stage, None, Execution::Sequential).unwrap();
    assert!(e.identity_residual <= 1e-10, "{}", e.identity_residual);
    assert!(e.phi_stage.b.lower <= 1e-10);
    assert!(e.reduction >= 1e6);
    assert!(e.near_resonant.is_empty());
    assert!(e.phi_stage.det_defect <= 1e-10);
    // Oracle for a single mode: w_k = -b_k e^{-2 pi i theta} / (1 - e^{-2 pi i (2 theta - k alpha)}).
    let k = 3;
    let want = -sample_b().coeff(k) * phase(-theta) / (cx(1.0, 0.0) - phase(-(2.0 * theta - k as f64 * alpha)));
    assert!((e.w.coeff(k) - want).norm() <= 1e-12);
}

#[test]
fn resonant_mode_is_left_in_place() {
    let alpha = golden().value;
    let n0 = 3;
    let theta = frac_mul(n0, alpha) / 2.0;
    let coc = upper_cocycle(alpha, theta, sample_b());
    let id = identity();
    let b_stage = conjugation_residuals(&id, &coc, theta, GRID, CUTOFF, Execution::Sequential).unwrap();

    let e = homological_eliminate(&id, &coc, &b_stage, None, Execution::Sequential).unwrap();
    assert_eq!(e.near_resonant, vec![n0]);
    assert_eq!(e.w.coeff(n0), cx(0.0, 0.0));
    let left = (e.phi_stage.b.lower - sample_b().coeff(n0).norm()).abs();
    assert!(left <= 1e-10, "{left}");

    let e = homological_eliminate(&id, &coc, &b_stage, Some(n0), Execution::Sequential).unwrap();
    assert_eq!(e.resonant_mode, Some(n0));
    assert!(e.near_resonant.is_empty());
    assert_eq!(e.w.coeff(n0), cx(0.0, 0.0));
}

#[test]
fn only_resonant_modes_is_an_error() {
    // With cutoff 0 and theta = 0 the single mode k = 0 has a vanishing divisor.
    let alpha = golden().value;
    let coc = upper_cocycle(alpha, 0.0, FourierSeries::constant(cx(0.1, 0.0)));
    let id = identity();
    let b_stage = conjugation_residuals(&id, &coc, 0.0, GRID, 0, Execution::Sequential).unwrap();
    let err = homological_eliminate(&id, &coc, &b_stage, None, Execution::Sequential).unwrap_err();
    assert!(err.to_string().contains("too resonant"), "{err}");
}

#[test]
fn desk_pipeline_meets_targets() {
    let c = desk();
    assert!(c.q_residual <= 1e-14);
    assert!(c.b_stage.beta1.lower <= 1e-2 && c.b_stage.beta2.lower <= 1e-2);
    assert!(c.b_stage.beta3_ok && c.phi_stage.phi_stage.beta3_ok);
    assert!(c.phi_stage.reduction >= 10.0);
    assert!(c.phi_stage.identity_residual <= 1e-10);
    assert!(c.completion.det_defect <= 1e-10);
    assert!(c.b_stage.det_defect <= 1e-10 && c.phi_stage.phi_stage.det_defect <= 1e-10);
    assert!(c.certificates.iter().all(|k| k.det_defect <= 1e-10 && k.valid));
    assert!(c.certificate_spread <= 3.0, "{}", c.certificate_spread);
    let (lo, hi) = c.config.window_i2;
    assert_eq!(lo, -hi);
    assert!(c.config.h > 0.0);
}

#[test]
fn certificate_at_unit_epsilon_is_finite() {
    let k = holder_certificate(&desk().phi_stage, 1.0).unwrap();
    assert!(k.bound.is_finite() && k.bound >= 0.0 && k.bound <= 1.0);
    assert!(holder_certificate(&desk().phi_stage, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn certificate_monotone_in_residual(a in 1e-8f64..1e-2, shrink in 0.01f64..1.0, eps in 1e-6f64..1e-2) {
        // A kept resonant mode of amplitude a survives elimination untouched.
        let alpha = golden().value;
        let n0 = 5;
        let theta = frac_mul(n0, alpha) / 2.0;
        let bound = |amp: f64| {
            let mut b = sample_b().with_cutoff(n0 as usize);
            b.set(n0, cx(amp, 0.0));
            let coc = upper_cocycle(alpha, theta, b);
            let id = identity();
            let st = conjugation_residuals(&id, &coc, theta, GRID, CUTOFF, Execution::Sequential).unwrap();
            let e = homological_eliminate(&id, &coc, &st, Some(n0), Execution::Sequential).unwrap();
            holder_certificate(&e, eps).unwrap().bound
        };
        prop_assert!(bound(a * shrink) <= bound(a) * (1.0 + 1e-9));
    }

    #[test]
    fn beta3_inequality_on_random_conjugators(re in -0.5f64..0.5, im in -0.5f64..0.5, theta in 0.05f64..0.45) {
        let alpha = golden().value;
        let model = upper_cocycle(alpha, theta, sample_b());
        let mut u1 = FourierSeries::zero(1);
        u1.set(0, cx(1.0, 0.0));
        u1.set(1, cx(re, im));
        let (b, _) = complete_to_sl2(&[u1, FourierSeries::mode(-1, cx(im, re))], GRID, Execution::Sequential).unwrap();
        let coc = Conjugated { b: &b, model: &model };
        // Conjugating by a slightly wrong rotation makes every block entry nonzero.
        let r = conjugation_residuals(&b, &coc, theta + 1e-3, GRID, CUTOFF, Execution::Sequential).unwrap();
        prop_assert!(r.beta3_ok, "{:?}", (r.beta1, r.b, r.beta2, r.beta3, r.beta3_bound));
        for p in [r.beta1, r.b, r.beta2, r.beta3] {
            prop_assert!(p.lower >= 0.0 && p.lower <= p.upper * (1.0 + 1e-12));
        }
    }
}
