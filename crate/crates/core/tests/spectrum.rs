use std::sync::OnceLock;

use harper_core::arithmetic::{frac_mul, Frequency};
use harper_core::cocycle::{lyapunov_numeric, CocycleKind, HarperCocycle};
use harper_core::operator::{dual_coupling, Coupling};
use harper_core::par::Execution;
use harper_core::spectrum::{
    build_cloud, detect_gaps, detect_plateaus, duality_from_clouds, gap_decay_report, hausdorff_distance, holder_fit,
    holder_modulus, homogeneity, ids, thouless_residual, EmpiricalSpectrum, GapRecord, IdsCurve, SpectrumCloud,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn golden() -> Frequency {
    Frequency::golden(30).unwrap()
}

fn amo() -> Coupling {
    Coupling::new(0.0, 2.0, 0.0).unwrap()
}

/// Shared AMO cloud at n = 500, 32 phases.
fn amo_cloud() -> &'static SpectrumCloud {
    static CLOUD: OnceLock<SpectrumCloud> = OnceLock::new();
    CLOUD.get_or_init(|| build_cloud(&amo(), &golden(), 500, 32, Execution::Parallel).unwrap())
}

fn lyapunov(lam: Coupling, e: f64, steps: usize) -> f64 {
    let coc = HarperCocycle::new(lam, golden().value, e, CocycleKind::Renormalized);
    lyapunov_numeric(&coc, steps, 64, Execution::Parallel).unwrap().value
}

#[test]
fn ids_limits_and_symmetry() {
    let cloud = build_cloud(&Coupling::new(0.0, 0.5, 0.0).unwrap(), &golden(), 500, 64, Execution::Parallel).unwrap();
    assert_eq!(ids(&cloud, cloud.ids_curve.min() - 1e-9), 0.0);
    assert_eq!(ids(&cloud, cloud.ids_curve.max()), 1.0);
    assert!((ids(&cloud, 0.0) - 0.5).abs() <= 0.01, "{}", ids(&cloud, 0.0));
    let bound = 2.0 + 2.0 * 0.5;
    assert!(cloud.samples().iter().all(|e| e.abs() <= bound));
}

#[test]
fn cloud_rejects_oversized_request() {
    assert!(build_cloud(&amo(), &golden(), 20_000, 10_000, Execution::Sequential).is_err());
}

#[test]
fn thouless_off_spectrum() {
    let cloud = amo_cloud();
    for e in [5.0, -4.5, 100.0] {
        let r = thouless_residual(cloud, &amo(), e, lyapunov(amo(), e, 20_000)).unwrap();
        assert!(r.residual.abs() <= 0.05, "E = {e}: {}", r.residual);
        assert!(!r.perturbed);
    }
}

#[test]
fn thouless_residual_shrinks_with_size() {
    // A long run keeps the Lyapunov bias below the truncation error being measured.
    let lam = amo();
    for e in [5.0, -4.5] {
        let l = lyapunov(lam, e, 100_000);
        let small = build_cloud(&lam, &golden(), 250, 16, Execution::Parallel).unwrap();
        let r_small = thouless_residual(&small, &lam, e, l).unwrap().residual.abs();
        let r_big = thouless_residual(amo_cloud(), &lam, e, l).unwrap().residual.abs();
        assert!(r_small >= 1.5 * r_big, "E = {e}: {r_small} vs {r_big}");
    }
}

#[test]
fn thouless_continuous_across_gap() {
    let cloud = amo_cloud();
    let report = detect_gaps(cloud, 50, None).unwrap();
    let g = report.find(1).unwrap();
    let res: Vec<f64> = (1..8)
        .map(|k| {
            let e = g.lower + g.length * k as f64 / 8.0;
            thouless_residual(cloud, &amo(), e, lyapunov(amo(), e, 4000)).unwrap().residual
        })
        .collect();
    assert!(res.iter().all(|r| r.abs() <= 0.02), "{res:?}");
    assert!(res.windows(2).all(|w| (w[1] - w[0]).abs() <= 0.005), "{res:?}");
}

#[test]
fn thouless_flags_atoms() {
    let cloud = amo_cloud();
    let e = cloud.samples()[1234];
    let r = thouless_residual(cloud, &amo(), e, 0.0).unwrap();
    assert!(r.perturbed && r.energy > e);
}

/// An IDS that rises linearly on [0, 1] except for flat pieces at the given heights.
fn synthetic_curve(heights: &[(f64, f64)], total: usize) -> IdsCurve {
    let samples = (0..total)
        .map(|i| {
            let t = (i as f64 + 0.5) / total as f64;
            t + heights.iter().filter(|(h, _)| t > *h).map(|(_, w)| w).sum::<f64>()
        })
        .collect();
    IdsCurve::new(samples)
}

#[test]
fn synthetic_plateaus_are_labelled() {
    let alpha = golden().value;
    let labels = [1i64, -1, 2, -2];
    let heights: Vec<(f64, f64)> = labels.iter().map(|&m| (frac_mul(m, alpha).rem_euclid(1.0), 0.05)).collect();
    let curve = synthetic_curve(&heights, 20_000);
    let report = detect_plateaus(&curve, alpha, 50, 1e-4, 0.01).unwrap();
    let mut found: Vec<i64> = report.gaps.iter().map(|g| g.label).collect();
    found.sort_unstable();
    assert_eq!(found, vec![-2, -1, 1, 2]);
    assert!(report.unlabeled.is_empty());
    for g in &report.gaps {
        assert!((g.length - 0.05).abs() < 1e-3);
        assert!(g.label_residual < 1e-4);
    }
}

#[test]
fn plateau_at_frac_alpha_gets_label_one() {
    let alpha = golden().value;
    let curve = synthetic_curve(&[(alpha, 0.1)], 10_000);
    let report = detect_plateaus(&curve, alpha, 50, 1e-4, 0.01).unwrap();
    assert_eq!(report.gaps.len(), 1);
    assert_eq!(report.gaps[0].label, 1);
}

#[test]
fn outer_gaps_are_not_labelled() {
    let cloud = amo_cloud();
    let report = detect_gaps(cloud, 50, None).unwrap();
    for g in &report.gaps {
        assert!(g.label != 0 && g.lower > cloud.ids_curve.min() && g.upper < cloud.ids_curve.max());
        assert!(g.lower < g.upper);
        assert!(g.label_residual < 3.0 * report.plateau_tol);
    }
    let mut labels: Vec<i64> = report.gaps.iter().map(|g| g.label).collect();
    labels.sort_unstable();
    labels.dedup();
    assert_eq!(labels.len(), report.gaps.len());
}

#[test]
fn gap_labels_stable_under_phase_doubling() {
    let coarse = detect_gaps(amo_cloud(), 50, None).unwrap();
    let fine_cloud = build_cloud(&amo(), &golden(), 500, 64, Execution::Parallel).unwrap();
    let fine = detect_gaps(&fine_cloud, 50, None).unwrap();
    let resolution = amo_cloud().energy_resolution();
    let mut checked = 0;
    for g in coarse.gaps.iter().filter(|g| g.length > 4.0 * resolution) {
        let twin = fine.gaps.iter().find(|h| h.lower < g.upper && g.lower < h.upper).expect("gap vanished");
        assert_eq!(twin.label, g.label);
        checked += 1;
    }
    assert!(checked >= 4);
}

fn record(label: i64, length: f64) -> GapRecord {
    GapRecord { label, lower: 0.0, upper: length, length, ids_value: 0.0, label_residual: 0.0 }
}

#[test]
fn decay_fit_on_exact_data() {
    let gaps: Vec<GapRecord> = (1..=6).flat_map(|m| [record(m, (-(m as f64)).exp()), record(-m, (-(m as f64)).exp())]).collect();
    let d = gap_decay_report(&gaps, &amo()).unwrap();
    assert!((d.slope + 1.0).abs() < 1e-12);
    assert!((d.r2 - 1.0).abs() < 1e-12);
    assert!((d.l_bar.unwrap() - 2f64.ln()).abs() < 1e-15);
    assert!(gap_decay_report(&gaps[..4], &amo()).is_err());
}

#[test]
fn decay_steepens_with_coupling() {
    let slope = |l2: f64| {
        let lam = Coupling::new(0.0, l2, 0.0).unwrap();
        let cloud = build_cloud(&lam, &golden(), 1000, 32, Execution::Parallel).unwrap();
        let gaps = detect_gaps(&cloud, 50, None).unwrap();
        gap_decay_report(&gaps.gaps, &lam).unwrap().slope
    };
    let (weak, strong) = (slope(1.5), slope(2.0));
    assert!(weak < -0.3 && strong < -0.3);
    assert!(strong.abs() >= weak.abs(), "{weak} vs {strong}");
}

#[test]
fn holder_calibration() {
    let total = 200_000;
    let sqrt_curve = IdsCurve::new((0..=total).map(|i| (i as f64 / total as f64).powi(2)).collect());
    let fit = holder_fit(&sqrt_curve, 400, (1e-4, 1e-2), 7).unwrap();
    assert!((fit.exponent - 0.5).abs() <= 0.02, "{}", fit.exponent);

    let lipschitz = IdsCurve::new((0..=total).map(|i| i as f64 / total as f64).collect());
    let fit = holder_fit(&lipschitz, 400, (1e-4, 1e-2), 7).unwrap();
    assert!((fit.exponent - 1.0).abs() <= 0.02, "{}", fit.exponent);
}

#[test]
fn holder_guards_resolution() {
    let cloud = amo_cloud();
    assert!(holder_modulus(cloud, 200, (cloud.energy_resolution(), 1e-1), 1).is_err());
    let fit = holder_modulus(cloud, 200, (1e-2, 1e-1), 1).unwrap();
    assert!(fit.exponent > 0.3 && fit.exponent <= 1.0);
}

#[test]
fn homogeneity_fixtures() {
    let cloud = amo_cloud();
    let gaps = detect_gaps(cloud, 50, None).unwrap();
    let spec = EmpiricalSpectrum::from_gaps(cloud.ids_curve.min(), cloud.ids_curve.max(), &gaps);
    // The widest band has room for a window with no gaps.
    let (a, b) = spec.intervals().iter().copied().max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0))).unwrap();
    let sigma = (b - a) / 4.0;
    let r = homogeneity(cloud, &gaps, (a + b) / 2.0, sigma).unwrap();
    assert_eq!(r.measure, 2.0 * sigma);
    assert!(r.overlaps.is_empty());

    // At a gap edge, with the window short of the next gap, the right half is all spectrum.
    let g = gaps.find(1).unwrap();
    let next = gaps.gaps.iter().map(|h| h.lower).filter(|&l| l > g.upper).fold(spec.max(), f64::min);
    let r = homogeneity(cloud, &gaps, g.upper, 0.9 * g.length.min(next - g.upper)).unwrap();
    assert!(r.measure >= r.sigma, "{r:?}");

    assert!(homogeneity(cloud, &gaps, 0.0, 2.0 * spec.diameter()).is_err());
    assert!(homogeneity(cloud, &gaps, (g.lower + g.upper) / 2.0, 1e-3).is_err());
}

#[test]
fn duality_on_small_clouds() {
    let f = golden();
    let dual = dual_coupling(&amo()).unwrap();
    let dual_cloud = build_cloud(&dual, &f, 500, 32, Execution::Parallel).unwrap();
    let r = duality_from_clouds(amo_cloud(), &dual_cloud).unwrap();
    assert!(r.distance <= 0.05, "{}", r.distance);
    assert!(duality_from_clouds(amo_cloud(), amo_cloud()).is_err());
}

#[test]
fn hausdorff_is_a_metric_on_examples() {
    let a = EmpiricalSpectrum::new(vec![(0.0, 1.0), (2.0, 3.0)]);
    let b = EmpiricalSpectrum::new(vec![(0.0, 3.0)]);
    let c = EmpiricalSpectrum::new(vec![(0.2, 2.9)]);
    let d = |x: &EmpiricalSpectrum, y: &EmpiricalSpectrum| hausdorff_distance(x, y);
    assert_eq!(d(&a, &b), 0.5);
    assert_eq!(d(&a, &b), d(&b, &a));
    assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-15);
    assert_eq!(d(&a.scaled(2.0), &b.scaled(2.0)), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ids_is_monotone(e1 in -5.0f64..5.0, e2 in -5.0f64..5.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(ids(amo_cloud(), lo) <= ids(amo_cloud(), hi));
        let c = &amo_cloud().ids_curve;
        prop_assert!(c.eval_interpolated(lo) <= c.eval_interpolated(hi));
    }

    #[test]
    fn doubling_n_moves_ids_little(l1 in 0.0f64..0.6, l2 in 0.3f64..2.0, l3 in 0.0f64..0.6, seed in 0u64..100) {
        let lam = Coupling::new(l1, l2, l3).unwrap();
        let n = 100;
        let a = build_cloud(&lam, &golden(), n, 16, Execution::Parallel).unwrap();
        let b = build_cloud(&lam, &golden(), 2 * n, 16, Execution::Parallel).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let e = rng.gen_range(-6.0..6.0);
            prop_assert!((ids(&a, e) - ids(&b, e)).abs() <= 5.0 / n as f64);
        }
    }

    #[test]
    fn window_additivity(u in 0.0f64..1.0, sigma in 1e-4f64..0.5) {
        let cloud = amo_cloud();
        let gaps = detect_gaps(cloud, 50, None).unwrap();
        let spec = EmpiricalSpectrum::from_gaps(cloud.ids_curve.min(), cloud.ids_curve.max(), &gaps);
        // Map u onto the spectrum by measure.
        let mut target = u * spec.measure();
        let mut e = spec.max();
        for &(a, b) in spec.intervals() {
            if target <= b - a {
                e = a + target;
                break;
            }
            target -= b - a;
        }
        let r = homogeneity(cloud, &gaps, e, sigma).unwrap();
        let removed: f64 = r.overlaps.iter().map(|o| o.length).sum::<f64>() + r.below + r.above;
        prop_assert!((r.measure + removed - 2.0 * sigma).abs() <= 1e-12);
        prop_assert!(r.additivity_defect <= 1e-12);
    }
}
