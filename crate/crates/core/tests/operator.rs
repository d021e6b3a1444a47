use std::f64::consts::TAU;

use harper_core::operator::{
    build_truncation, classify_region, dual_coupling, eval_abs_c, eval_c, eval_cbar, gauge_hermitian, mean_log_c,
    norm_bound, Coupling, RegionTag, TridiagonalOperator,
};
use harper_core::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

fn c(l1: f64, l2: f64, l3: f64) -> Coupling {
    Coupling::new(l1, l2, l3).unwrap()
}

/// Eigenvalues of the dense Hermitian matrix via nalgebra, ascending.
fn dense_oracle(diag: &[f64], sup: &[Complex64]) -> Vec<f64> {
    let n = diag.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let z = if i == j {
            Complex64::new(diag[i], 0.0)
        } else if j == i + 1 {
            sup[i]
        } else if i == j + 1 {
            sup[j].conj()
        } else {
            Complex64::new(0.0, 0.0)
        };
        nalgebra::Complex::new(z.re, z.im)
    });
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn region_examples() {
    assert_eq!(classify_region(&c(0.0, 0.5, 0.0)), RegionTag::I);
    assert_eq!(classify_region(&c(0.1, 2.0, 0.2)), RegionTag::II);
    assert_eq!(classify_region(&c(0.5, 0.5, 0.7)), RegionTag::III);
    assert_eq!(classify_region(&c(0.0, 1.0, 0.0)), RegionTag::Boundary);
    assert_eq!(classify_region(&c(0.5, 1.0, 0.5)), RegionTag::Boundary);
}

#[test]
fn dual_examples() {
    assert_eq!(dual_coupling(&c(0.0, 2.0, 0.0)).unwrap(), c(0.0, 0.5, 0.0));
    assert_eq!(dual_coupling(&c(0.2, 1.0, 0.3)).unwrap(), c(0.3, 1.0, 0.2));
    let lam = c(0.1, 2.5, 0.4);
    let back = dual_coupling(&dual_coupling(&lam).unwrap()).unwrap();
    for (x, y) in back.as_array().iter().zip(lam.as_array()) {
        assert!((x - y).abs() < 1e-15);
    }
    assert!(dual_coupling(&c(0.3, 0.0, 0.2)).is_err());
}

#[test]
fn symbol_examples() {
    let amo = c(0.0, 2.0, 0.0);
    for x in [0.0, 0.13, 0.77] {
        assert_eq!(eval_c(&amo, GOLDEN, Complex64::new(x, 0.0)), Complex64::new(2.0, 0.0));
    }
    let z = eval_c(&c(1.0, 0.0, 0.0), GOLDEN, Complex64::new(-GOLDEN / 2.0, 0.0));
    assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);

    let lam = c(0.1, 2.0, 0.2);
    let x = Complex64::new(0.3, 0.0);
    let cx = eval_c(&lam, GOLDEN, x);
    assert!((eval_cbar(&lam, GOLDEN, x) - cx.conj()).norm() < 1e-15);
    let abs = eval_abs_c(&lam, GOLDEN, x).unwrap();
    assert!((abs.re - (cx * cx.conj()).re.sqrt()).abs() < 1e-14 && abs.im.abs() < 1e-14);
}

#[test]
fn abs_c_refuses_off_strip() {
    let lam = c(0.1, 2.0, 0.2);
    assert!(eval_abs_c(&lam, GOLDEN, Complex64::new(0.3, 2.0)).is_err());
    assert!(eval_abs_c(&c(0.5, 0.5, 0.7), GOLDEN, Complex64::new(0.3, 0.01)).is_err());
}

#[test]
fn truncation_examples() {
    let one = build_truncation(&c(0.0, 2.0, 0.0), GOLDEN, 0.2, 1).unwrap();
    assert_eq!(one.eigenvalues(), vec![2.0 * (TAU * 0.2).cos()]);

    let two = build_truncation(&c(0.0, 0.5, 0.0), GOLDEN, 0.0, 2).unwrap();
    assert_eq!(two.diag[0], 2.0);
    assert!((two.diag[1] - 2.0 * (TAU * GOLDEN).cos()).abs() < 1e-15);
    assert_eq!(two.offdiag, vec![Complex64::new(0.5, 0.0)]);

    let (a, b) = (two.diag[0], two.diag[1]);
    let h = two.offdiag[0].norm();
    let disc = ((a - b) * (a - b) + 4.0 * h * h).sqrt();
    let oracle = [(a + b - disc) / 2.0, (a + b + disc) / 2.0];
    assert!(max_diff(&two.eigenvalues(), &oracle) < 1e-10);
}

#[test]
fn hermitian_entries_follow_symbol() {
    let lam = c(0.3, 1.2, 0.6);
    let x = 0.17;
    let op = build_truncation(&lam, GOLDEN, x, 20).unwrap();
    for k in 0..19 {
        let expect = eval_c(&lam, GOLDEN, Complex64::new(x + k as f64 * GOLDEN, 0.0));
        assert!((op.offdiag[k] - expect).norm() < 1e-12);
    }
    let dense = op.to_dense();
    for (i, row) in dense.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert_eq!(*v, dense[j][i].conj());
        }
    }
}

#[test]
fn random_hermitian_matches_dense_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let n = 50;
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let sup: Vec<Complex64> =
            (0..n - 1).map(|_| Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5))).collect();
        let ours = gauge_hermitian(&diag, &sup).matrix.eigenvalues(1e-10);
        assert!(max_diff(&ours, &dense_oracle(&diag, &sup)) < 1e-8);
    }
}

#[test]
fn operator_matches_dense_solver() {
    for lam in [c(0.0, 2.0, 0.0), c(0.5, 0.5, 0.7), c(0.1, 2.0, 0.2), c(1.0, 0.0, 1.0)] {
        let op = build_truncation(&lam, GOLDEN, 0.31, 64).unwrap();
        assert!(max_diff(&op.eigenvalues(), &dense_oracle(&op.diag, &op.offdiag)) < 1e-8, "{lam:?}");
    }
}

#[test]
fn zero_hopping_splits_blocks() {
    // l1 = l3, l2 = 0: c vanishes wherever cos 2 pi (x + alpha/2) = 0.
    let diag = vec![1.0, -1.0, 0.5, 2.0];
    let sup = vec![Complex64::new(0.7, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.3)];
    let ours = gauge_hermitian(&diag, &sup).matrix.eigenvalues(1e-10);
    assert!(max_diff(&ours, &dense_oracle(&diag, &sup)) < 1e-10);
}

#[test]
fn mean_log_examples() {
    let m = mean_log_c(&c(0.0, 2.0, 0.0));
    assert!((m.quadrature - 2f64.ln()).abs() < 1e-12);
    assert!((m.closed_form.unwrap() - 2f64.ln()).abs() < 1e-15);

    let m = mean_log_c(&c(0.1, 2.0, 0.2));
    let closed = ((2.0 + (4.0f64 - 0.08).sqrt()) / 2.0).ln();
    assert!((m.closed_form.unwrap() - closed).abs() < 1e-15);
    assert!((m.quadrature - closed).abs() < 1e-10);

    let m = mean_log_c(&c(0.3, 1.5, 0.3));
    assert!((m.quadrature - m.closed_form.unwrap()).abs() < 1e-10);

    // Outside region II the closed form does not apply.
    assert!(mean_log_c(&c(0.5, 0.5, 0.7)).closed_form.is_none());
}

fn gauge_twist(op: &TridiagonalOperator, phases: &[f64]) -> Vec<Complex64> {
    op.offdiag
        .iter()
        .enumerate()
        .map(|(k, h)| h * Complex64::from_polar(1.0, phases[k + 1] - phases[k]))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauge_invariance(l1 in 0.0f64..2.0, l2 in 0.01f64..2.0, l3 in 0.0f64..2.0, x in 0.0f64..1.0, seed in 0u64..1000) {
        let op = build_truncation(&c(l1, l2, l3), GOLDEN, x, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..TAU)).collect();
        let twisted = gauge_hermitian(&op.diag, &gauge_twist(&op, &phases)).matrix.eigenvalues(1e-12);
        prop_assert!(max_diff(&op.eigenvalues(), &twisted) < 1e-9);
    }

    #[test]
    fn interlacing_and_radius(l1 in 0.0f64..2.0, l2 in 0.01f64..2.0, l3 in 0.0f64..2.0, x in 0.0f64..1.0, n in 2usize..60) {
        let lam = c(l1, l2, l3);
        let big = build_truncation(&lam, GOLDEN, x, n).unwrap().eigenvalues();
        let small = build_truncation(&lam, GOLDEN, x, n - 1).unwrap().eigenvalues();
        for k in 0..n - 1 {
            prop_assert!(big[k] <= small[k] + 1e-9 && small[k] <= big[k + 1] + 1e-9);
        }
        let bound = norm_bound(&lam);
        prop_assert!(big.iter().all(|e| e.abs() <= bound + 1e-9));
        prop_assert!(big.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn duality_is_involution_swapping_regions(l1 in 0.0f64..3.0, l2 in 0.01f64..3.0, l3 in 0.0f64..3.0) {
        let lam = c(l1, l2, l3);
        let dual = dual_coupling(&lam).unwrap();
        let back = dual_coupling(&dual).unwrap();
        for (a, b) in back.as_array().iter().zip(lam.as_array()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
        let expect = match classify_region(&lam) {
            RegionTag::I => Some(RegionTag::II),
            RegionTag::II => Some(RegionTag::I),
            RegionTag::III => Some(RegionTag::III),
            RegionTag::Boundary => None,
        };
        if let Some(r) = expect {
            prop_assert_eq!(classify_region(&dual), r);
        }
    }

    #[test]
    fn region_two_symbol_is_zero_free(l1 in 0.0f64..1.0, l3 in 0.0f64..1.0, extra in 0.01f64..2.0, x in 0.0f64..1.0) {
        let lam = c(l1, (l1 + l3 + extra).max(1.01), l3);
        let v = eval_abs_c(&lam, GOLDEN, Complex64::new(x, 0.0)).unwrap();
        prop_assert!(v.re >= lam.l2 - lam.l1 - lam.l3 - 1e-12);
    }
}
