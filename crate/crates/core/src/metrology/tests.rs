use super::*;
use crate::metrology::engine;
use core::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, PI};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn cfg(g: f64, ell: u32, alpha_sq: f64) -> ExperimentConfig {
    ExperimentConfig::from_alpha_sq(g, ell, alpha_sq)
}

#[test]
fn homodyne_mean_values() {
    assert_eq!(homodyne_mean(&cfg(1.3, 2, 0.0).with_theta(0.3).with_phi(0.2)), 0.0);
    let c = ExperimentConfig::new(0.0, 2, 3.0).with_phi(0.37);
    assert!((homodyne_mean(&c) - SQRT_2 * 3.0 * libm::cos(4.0 * 0.37)).abs() < 1e-14);
    // cosh 1 + sinh 1 = e
    let v = homodyne_mean(&cfg(1.0, 3, 10.0));
    assert!(rel(v, 20f64.sqrt() * E) < 1e-15, "{v}");
}

#[test]
fn second_moment_values() {
    assert!((homodyne_second_moment(&cfg(0.0, 1, 0.0).with_phi(0.8)) - 1.0).abs() < 1e-15);
    for g in [0.2, 1.0, 2.5] {
        let c = cfg(g, 3, 0.0).with_phi(0.41).with_theta(1.0);
        let want = libm::cosh(2.0 * g) + libm::cos(6.0 * 0.41) * libm::sinh(2.0 * g);
        assert!(rel(homodyne_second_moment(&c), want) < 1e-14);
    }
    // Frozen from an independent truncated-Fock computation (sparse expm,
    // cutoff 260 per mode, converged to ~1e-9).
    let c = cfg(1.0, 3, 10.0).with_theta(FRAC_PI_4).with_phi(0.1);
    assert!((homodyne_second_moment(&c) - 31.6397434068157).abs() < 1e-8);
    assert!((homodyne_mean(&c) - 4.9884036174742).abs() < 1e-9);
}

#[test]
fn fluctuation_limits() {
    for phi in [0.0, 0.3, 1.7] {
        let c = cfg(0.0, 2, 5.0).with_phi(phi).with_theta(0.9);
        assert!((quadrature_fluctuation(&c).unwrap() - 1.0).abs() < 1e-12);
    }
    let g = 1.2;
    // cos(2 ell phi) = -1 and +1
    let squeezed = cfg(g, 1, 4.0).with_phi(FRAC_PI_2);
    assert!(rel(quadrature_fluctuation(&squeezed).unwrap(), libm::exp(-g)) < 1e-9);
    let anti = cfg(g, 1, 4.0).with_phi(0.0);
    assert!(rel(quadrature_fluctuation(&anti).unwrap(), libm::exp(g)) < 1e-12);
}

#[test]
fn fluctuation_rejects_inconsistent_moments() {
    assert!(matches!(fluctuation_from_moments(2.0, 3.0), Err(MetrologyError::NegativeVariance(_))));
    assert_eq!(fluctuation_from_moments(2.0, 4.0 - 1e-12).unwrap(), 0.0);
}

#[test]
fn sensitivity_at_optimum() {
    for (g, ell, a2) in [(0.5, 1, 4.0), (2.0, 3, 100.0)] {
        let p = optimal_operating_point(ell);
        let c = cfg(g, ell, a2).with_phi(p.phi).with_theta(p.theta);
        let want = libm::exp(-g) / (2.0 * SQRT_2 * f64::from(ell) * libm::cosh(g) * libm::sqrt(a2));
        assert!(rel(sensitivity(&c).unwrap(), want) < 1e-9);
    }
    let p = optimal_operating_point(1);
    let c = cfg(2.0, 1, 100.0).with_phi(p.phi).with_theta(p.theta);
    let s = sensitivity(&c).unwrap();
    assert!(rel(s, 1.2718171032039976e-3) < 1e-9, "{s}");
    assert!(rel(snl(&c).unwrap(), 9.522286914940415e-3) < 1e-12);
    assert!(s < snl(&c).unwrap());
}

#[test]
fn sensitivity_diverges_without_slope() {
    let c = cfg(1.0, 2, 4.0).with_theta(0.0).with_phi(0.0);
    assert!(matches!(sensitivity(&c), Err(MetrologyError::Divergent { .. })));
    assert!(matches!(sensitivity_lossy(&c.with_transmissivity(0.5)), Err(MetrologyError::Divergent { .. })));
    assert!(matches!(sensitivity(&cfg(1.0, 2, 0.0).with_theta(1.0)), Err(MetrologyError::Divergent { .. })));
}

#[test]
fn lossy_sensitivity_limits() {
    let c = cfg(1.4, 2, 30.0).with_theta(0.3).with_phi(0.5);
    assert!(rel(sensitivity_lossy(&c).unwrap(), sensitivity(&c).unwrap()) < 1e-14);
    assert!(rel(sensitivity_lossy_propagated(&c).unwrap(), sensitivity(&c).unwrap()) < 1e-14);
    assert_eq!(sensitivity_lossy(&c.with_transmissivity(0.0)), Err(MetrologyError::TotalLoss));
    assert!(matches!(sensitivity_lossy(&c.with_transmissivity(1.2)), Err(MetrologyError::Config(_))));

    // 38% loss at g = 2, ell = 1, |alpha|^2 = 100 brings the optimum back to the shot-noise limit.
    let p = optimal_operating_point(1);
    let c = cfg(2.0, 1, 100.0).with_phi(p.phi).with_theta(p.theta).with_transmissivity(0.62);
    let ratio = sensitivity_lossy(&c).unwrap() / snl(&c).unwrap();
    assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
}

#[test]
fn engine_lossy_sensitivity_uses_sqrt_t() {
    // The propagated-moment route scales the slope by sqrt(T); the published
    // lossy form scales it by T. They differ by exactly sqrt(T).
    let p = optimal_operating_point(1);
    for t in [1.0, 0.9, 0.62, 0.3] {
        let c = cfg(2.0, 1, 100.0).with_phi(p.phi).with_theta(p.theta).with_transmissivity(t);
        let from_engine = engine::sensitivity(&c).unwrap();
        assert!(rel(from_engine, sensitivity_lossy_propagated(&c).unwrap()) < 1e-6, "T={t}");
        assert!(rel(from_engine, libm::sqrt(t) * sensitivity_lossy(&c).unwrap()) < 1e-6, "T={t}");
    }
}

#[test]
fn visibility_is_unity() {
    for &(g, ell, a2, theta) in &[(0.0, 1, 1.0, 0.0), (1.0, 3, 10.0, 1.0), (2.5, 2, 0.3, 2.9), (0.4, 5, 50.0, -1.2)] {
        let c = cfg(g, ell, a2).with_theta(theta);
        assert!((visibility(&c).unwrap() - 1.0).abs() < 1e-9);
        assert!((visibility(&c.with_transmissivity(0.5)).unwrap() - 1.0).abs() < 1e-9);
    }
    assert_eq!(visibility(&cfg(1.0, 1, 0.0)), Err(MetrologyError::ZeroSignal));
    assert_eq!(visibility(&cfg(1.0, 1, 4.0).with_transmissivity(0.0)), Err(MetrologyError::ZeroSignal));
    assert_eq!(visibility_of(&[]), None);
    assert_eq!(visibility_of(&[0.0, 0.0]), None);
    assert_eq!(visibility_of(&[1.0, 3.0]), Some(0.5));
}

#[test]
fn shot_noise_and_heisenberg_limits() {
    let c = cfg(0.0, 1, 100.0);
    assert!(rel(snl(&c).unwrap(), 0.05) < 1e-15);
    assert!(rel(hl(&c).unwrap(), 0.005) < 1e-15);
    let c = cfg(2.0, 1, 100.0);
    assert!(rel(hl(&c).unwrap(), 1.8134789618089091e-4) < 1e-12);
    let doubled = ExperimentConfig { ell: 2, ..c };
    assert!(rel(snl(&doubled).unwrap(), snl(&c).unwrap() / 2.0) < 1e-15);
    assert!(rel(hl(&doubled).unwrap(), hl(&c).unwrap() / 2.0) < 1e-15);
    assert_eq!(snl(&cfg(0.0, 1, 0.0)), Err(MetrologyError::ZeroPhotonNumber));
    assert_eq!(hl(&cfg(0.0, 1, 0.0)), Err(MetrologyError::ZeroPhotonNumber));
}

#[test]
fn qcrb_values() {
    for a in [0.5, 3.0, 10.0] {
        assert!(rel(qcrb(&ExperimentConfig::new(0.0, 1, a)).unwrap(), 1.0 / (4.0 * a)) < 1e-15);
    }
    assert!(rel(qcrb(&cfg(2.0, 1, 100.0)).unwrap(), 1.2685522558092493e-3) < 1e-12);
    assert_eq!(qcrb(&cfg(0.0, 1, 0.0)), Err(MetrologyError::DegenerateQcrb));
}

#[test]
fn qcrb_never_exceeds_snl() {
    for g in [0.01, 0.1, 0.5, 1.0, 2.0, 3.0] {
        for a2 in [0.0, 0.01, 1.0, 100.0] {
            let c = cfg(g, 2, a2);
            assert!(qcrb(&c).unwrap() <= snl(&c).unwrap());
        }
    }
}

// The Heisenberg limit 1/(2 ell N) is not a lower bound on the QCRB for weak
// coherent seeds: with |alpha|^2 <= 1 the QCRB drops below it.
#[test]
fn heisenberg_limit_versus_qcrb() {
    for &(g, a2) in &[(0.1, 0.0), (2.0, 0.0), (0.5, 1.0), (1.0, 1.0)] {
        let c = cfg(g, 1, a2);
        assert!(qcrb(&c).unwrap() < hl(&c).unwrap(), "g={g} a2={a2}");
    }
    for g in [0.01, 0.5, 1.0, 2.0, 3.0, 4.0] {
        for a2 in [10.0, 100.0, 1000.0] {
            let c = cfg(g, 1, a2);
            assert!(hl(&c).unwrap() <= qcrb(&c).unwrap(), "g={g} a2={a2}");
        }
    }
}

#[test]
fn qcrb_saturation_with_squeezing() {
    let ratio = |g: f64| optimal_sensitivity(g, 1, 10.0, 1.0).unwrap() / qcrb(&cfg(g, 1, 100.0)).unwrap();
    assert!(ratio(0.5) > ratio(1.0));
    assert!(ratio(1.0) > ratio(2.0));
    assert!(ratio(2.0) > ratio(3.0));
    assert!(rel(ratio(2.0), 1.0025736798620377) < 1e-9);
    assert!(ratio(3.0) < 1.005);
}

#[test]
fn operating_point() {
    let p = optimal_operating_point(1);
    assert_eq!((p.phi, p.theta), (FRAC_PI_2, FRAC_PI_2));
    assert!((optimal_operating_point(3).phi - PI / 6.0).abs() < 1e-15);
}

#[test]
fn grid_oracle_finds_nothing_better() {
    // Independent 100 x 100 scan over (phi, theta), offset from the analytic point.
    for &(g, ell, a2) in &[(1.0, 3, 10.0), (2.0, 1, 100.0), (0.3, 2, 2.0)] {
        let best = optimal_sensitivity(g, ell, libm::sqrt(a2), 1.0).unwrap();
        let mut grid_min = f64::INFINITY;
        for i in 0..100 {
            for j in 0..100 {
                let phi = (i as f64 + 0.37) * 2.0 * PI / 100.0;
                let theta = (j as f64 + 0.61) * 2.0 * PI / 100.0;
                if let Ok(v) = sensitivity(&cfg(g, ell, a2).with_phi(phi).with_theta(theta)) {
                    grid_min = grid_min.min(v);
                }
            }
        }
        assert!(best <= grid_min, "g={g}: {best} vs {grid_min}");
        // At strong squeezing the dip is narrower than the grid spacing.
        if g <= 1.0 {
            assert!(rel(grid_min, best) < 1e-2, "g={g}: {best} vs {grid_min}");
        }
    }
}

#[test]
fn optimum_search_matches_analytic_point() {
    let search = OptimumSearch::new(64);
    for t in [1.0, 0.7] {
        let base = cfg(1.0, 3, 10.0).with_transmissivity(t);
        let opt = search.minimize(&base).unwrap();
        let analytic = optimal_sensitivity(1.0, 3, 10f64.sqrt(), t).unwrap();
        assert_eq!(opt.sensitivity, analytic.min(opt.grid_sensitivity));
        // 64 is a multiple of 4: the analytic point is on the grid.
        assert!(rel(opt.grid_sensitivity, analytic) < 1e-12);
    }
    assert_eq!(search.minimize(&cfg(1.0, 1, 0.0)), Err(MetrologyError::ZeroSignal));
    assert_eq!(search.minimize(&cfg(1.0, 1, 1.0).with_transmissivity(0.0)), Err(MetrologyError::TotalLoss));
}

#[test]
fn asymptotic_optimum() {
    assert!(rel(optimal_sensitivity_asymptotic(2.0, 1, 10.0), 1.2716038333067318e-3) < 1e-12);
    let exact = optimal_sensitivity(3.0, 1, 10.0, 1.0).unwrap();
    let approx = optimal_sensitivity_asymptotic(3.0, 1, 10.0);
    assert!((exact / approx - 1.0).abs() < 1e-3);
    let q = |g: f64| qcrb(&cfg(g, 1, 100.0)).unwrap();
    assert!((optimal_sensitivity_asymptotic(4.0, 1, 10.0) / q(4.0) - 1.0).abs() < 5e-3);
    // OAM gain: 1/ell scaling.
    assert!(rel(optimal_sensitivity_asymptotic(2.0, 4, 10.0) * 4.0, optimal_sensitivity_asymptotic(2.0, 1, 10.0)) < 1e-15);
}

#[test]
fn su11_comparison_tends_to_sqrt2() {
    // Strip the OAM factor 2 ell from the asymptotic optimum before comparing.
    let without_oam = |g: f64| 2.0 * optimal_sensitivity_asymptotic(g, 1, 10.0);
    let r = |g: f64| su11_sensitivity(g, 10.0) / without_oam(g);
    assert!((r(3.0) / SQRT_2 - 1.0).abs() < 0.02);
    assert!((r(5.0) / SQRT_2 - 1.0).abs() < (r(3.0) / SQRT_2 - 1.0).abs());
}

#[test]
fn max_loss_reference_point() {
    let m = max_allowable_loss(2.0, 1, 10.0).unwrap();
    assert!(m.sub_snl);
    // Frozen from a brute-force (phi, theta) scan + Brent root in T.
    assert!((m.loss - 0.3814726879863527).abs() < 1e-6, "{}", m.loss);
    assert!((m.loss - 0.38).abs() < 0.01);
    assert!((m.loss + m.transmissivity - 1.0).abs() < 1e-15);
}

#[test]
fn max_loss_without_squeezing() {
    // No OPA: the optimum 1/(2 sqrt2 ell T |alpha|) meets 1/(2 ell |alpha|) at T = 1/sqrt2.
    let m = max_allowable_loss(0.0, 1, 10.0).unwrap();
    assert!((m.loss - (1.0 - core::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-6, "{}", m.loss);
}

#[test]
fn max_loss_flags_missing_sub_snl_region() {
    let m = max_allowable_loss(1.0, 1, 0.1).unwrap();
    assert!(!m.sub_snl);
    assert_eq!(m.loss, 0.0);
    assert_eq!(max_allowable_loss(1.0, 1, 0.0), Err(MetrologyError::ZeroSignal));
    assert!(matches!(max_allowable_loss(1.0, 0, 1.0), Err(MetrologyError::Config(_))));
}

#[test]
fn max_loss_curve_has_interior_maximum() {
    let gs: alloc::vec::Vec<f64> = (0..=35).map(|k| 0.5 + 0.1 * k as f64).collect();
    let losses: alloc::vec::Vec<f64> = gs.iter().map(|&g| max_allowable_loss(g, 1, 10.0).unwrap().loss).collect();
    let (imax, lmax) = losses.iter().copied().enumerate().fold((0, f64::MIN), |acc, (i, l)| if l > acc.1 { (i, l) } else { acc });
    assert!(imax > 0 && imax < gs.len() - 1, "peak at g = {}", gs[imax]);
    assert!(lmax > losses[0] && lmax > losses[losses.len() - 1]);
    assert!(losses.iter().all(|&l| (0.3..0.4).contains(&l)));
}

#[test]
fn fringe_counts() {
    for ell in [1u32, 2, 3, 5] {
        let c = cfg(1.0, ell, 10.0);
        assert_eq!(count_signal_maxima(&c, 4096), 2 * ell as usize);
        assert_eq!(count_slope_sign_changes(&c, 4096), 4 * ell as usize);
    }
}

#[test]
fn report_for_lossless_and_lossy() {
    let p = optimal_operating_point(1);
    let c = cfg(2.0, 1, 100.0).with_phi(p.phi).with_theta(p.theta);
    let r = SensitivityReport::evaluate(&c).unwrap();
    assert!(!r.divergent);
    assert!(rel(r.sensitivity, 1.2718171032039976e-3) < 1e-9);
    assert!(rel(r.fluctuation, libm::exp(-2.0)) < 1e-6);
    assert!(r.hl < r.qcrb && r.qcrb < r.sensitivity && r.sensitivity < r.snl);
    assert!((r.visibility - 1.0).abs() < 1e-12);

    let lossy = SensitivityReport::evaluate(&c.with_transmissivity(0.5)).unwrap();
    assert!(rel(lossy.signal_mean, libm::sqrt(0.5) * r.signal_mean) < 1e-12);
    assert_eq!(lossy.snl, r.snl);

    let flat = SensitivityReport::evaluate(&c.with_theta(-p.phi * 2.0)).unwrap();
    assert!(flat.divergent);
    assert_eq!(flat.sensitivity, f64::INFINITY);
}

proptest! {
    #[test]
    fn engine_matches_closed_form(
        g in 0.0f64..3.0, ell in 1u32..6, alpha in 0.0f64..10.0,
        theta in -6.3f64..6.3, phi in -6.3f64..6.3,
    ) {
        let c = ExperimentConfig::new(g, ell, alpha).with_theta(theta).with_phi(phi);
        let m = engine::lossless_moments(&c).unwrap();
        let mean = homodyne_mean(&c);
        let second = homodyne_second_moment(&c);
        prop_assert!((m.mean - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        prop_assert!((m.second - second).abs() <= 1e-9 * second.abs().max(1.0));
        prop_assert!((m.fluctuation().unwrap() - libm::sqrt(quadrature_variance(&c))).abs() <= 1e-6 * libm::exp(g));
    }

    #[test]
    fn lossy_moment_laws(
        g in 0.0f64..3.0, ell in 1u32..6, alpha in 0.0f64..10.0,
        theta in -6.3f64..6.3, phi in -6.3f64..6.3, t in 0.0f64..=1.0,
    ) {
        let c = ExperimentConfig::new(g, ell, alpha).with_theta(theta).with_phi(phi);
        let clean = engine::lossless_moments(&c).unwrap();
        let lossy = engine::lossy_moments(&c.with_transmissivity(t)).unwrap();
        prop_assert!((lossy.mean - libm::sqrt(t) * clean.mean).abs() <= 1e-9 * clean.mean.abs().max(1.0));
        let var = t * clean.variance() + 1.0 - t;
        prop_assert!((lossy.variance() - var).abs() <= 1e-9 * var.max(1.0) * libm::exp(2.0 * g).max(alpha * alpha));
        let ct = c.with_transmissivity(t);
        prop_assert!((lossy.mean - homodyne_mean_lossy(&ct)).abs() <= 1e-9 * clean.mean.abs().max(1.0));
        prop_assert!((lossy.second - homodyne_second_moment_lossy(&ct)).abs() <= 1e-9 * lossy.second.max(1.0));
    }

    #[test]
    fn slope_matches_central_difference(
        g in 0.0f64..2.0, ell in 1u32..6, alpha in 0.0f64..10.0,
        theta in 0.0f64..6.3, phi in 0.0f64..6.3,
    ) {
        let c = ExperimentConfig::new(g, ell, alpha).with_theta(theta).with_phi(phi);
        let h = 1e-5;
        let fd = (homodyne_mean(&c.with_phi(phi + h)) - homodyne_mean(&c.with_phi(phi - h))) / (2.0 * h);
        let analytic = signal_slope(&c);
        prop_assert!((analytic - fd).abs() / analytic.abs().max(1.0) < 1e-6);
    }

    #[test]
    fn fluctuation_is_independent_of_theta_and_alpha(
        g in 0.0f64..2.5, ell in 1u32..6, a1 in 0.0f64..10.0, a2 in 0.0f64..10.0,
        t1 in 0.0f64..6.3, t2 in 0.0f64..6.3, phi in 0.0f64..6.3,
    ) {
        let c1 = ExperimentConfig::new(g, ell, a1).with_theta(t1).with_phi(phi);
        let c2 = ExperimentConfig::new(g, ell, a2).with_theta(t2).with_phi(phi);
        let f1 = quadrature_fluctuation(&c1).unwrap();
        let f2 = quadrature_fluctuation(&c2).unwrap();
        let scale = 1e-10 * (1.0 + a1.max(a2).powi(2)) * libm::exp(2.0 * g);
        prop_assert!((f1 * f1 - f2 * f2).abs() < scale);
        prop_assert!((f1 * f1 - quadrature_variance(&c1)).abs() < scale);
    }

    #[test]
    fn signal_has_period_pi_over_ell(
        g in 0.0f64..2.5, ell in 1u32..6, alpha in 0.0f64..10.0, theta in 0.0f64..6.3, phi in 0.0f64..6.3,
    ) {
        let c = ExperimentConfig::new(g, ell, alpha).with_theta(theta).with_phi(phi);
        let shifted = c.with_phi(phi + PI / f64::from(ell));
        prop_assert!((homodyne_mean(&c) - homodyne_mean(&shifted)).abs() < 1e-10 * (1.0 + alpha) * libm::exp(g));
    }

    #[test]
    fn sub_snl_region_exists(g in 1.0f64..3.0, a2 in 10.0f64..1000.0, ell in 1u32..6) {
        let best = optimal_sensitivity(g, ell, libm::sqrt(a2), 1.0).unwrap();
        prop_assert!(best < snl(&cfg(g, ell, a2)).unwrap());
    }
}
