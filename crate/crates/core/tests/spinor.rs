use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use bellforge_core::spinor::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `±cos 2(a ± b)`
fn elliptic_elliptic(sign: f64, a: f64, b: f64) -> f64 {
    sign * (2.0 * (a + sign * b)).cos()
}

#[test]
fn correlations_match_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let states = [(StateVector4::psi_plus(), 1.0), (StateVector4::psi_minus(), -1.0)];
    for _ in 0..10_000 {
        let (a, b) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
        for (state, sign) in &states {
            let ll = correlation(state, &AnalyzerSetting::linear(a), &AnalyzerSetting::linear(b)).unwrap();
            let ee = correlation(state, &AnalyzerSetting::elliptic(a), &AnalyzerSetting::elliptic(b)).unwrap();
            let le = correlation(state, &AnalyzerSetting::linear(a), &AnalyzerSetting::elliptic(b)).unwrap();
            let el = correlation(state, &AnalyzerSetting::elliptic(a), &AnalyzerSetting::linear(b)).unwrap();
            assert!((ll - sign * (2.0 * (a - b)).cos()).abs() < 1e-10);
            assert!((ee - elliptic_elliptic(*sign, a, b)).abs() < 1e-10);
            let mixed = sign * (2.0 * a).cos() * (2.0 * b).cos();
            assert!((le - mixed).abs() < 1e-10 && (el - mixed).abs() < 1e-10);
        }
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> StateVector4 {
    let amps = [(); 4].map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    StateVector4::normalized(amps).unwrap()
}

fn random_kind(rng: &mut ChaCha8Rng) -> AnalyzerKind {
    if rng.gen::<bool>() {
        AnalyzerKind::Linear
    } else {
        AnalyzerKind::Elliptic
    }
}

#[test]
fn random_draws_respect_tsirelson() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut largest: f64 = 0.0;
    for _ in 0..100_000 {
        let state = random_state(&mut rng);
        let kinds = ChshKinds {
            a: random_kind(&mut rng),
            b: random_kind(&mut rng),
            a_prime: random_kind(&mut rng),
            b_prime: random_kind(&mut rng),
        };
        let angles = [(); 4].map(|_| rng.gen_range(0.0..PI));
        let s = chsh_value(&state, &ChshSettings::from_angles(angles, kinds)).unwrap();
        largest = largest.max(s);
    }
    assert!(largest <= TSIRELSON_BOUND + 1e-9, "{largest}");
    assert!(largest > 2.0, "random search should find some violation, got {largest}");
}

#[test]
fn standard_settings_reach_tsirelson_for_uniform_kinds() {
    let angles = [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0];
    for kind in [AnalyzerKind::Linear, AnalyzerKind::Elliptic] {
        let s = chsh_value(&StateVector4::psi_plus(), &ChshSettings::from_angles(angles, ChshKinds::uniform(kind)))
            .unwrap();
        assert!((s - TSIRELSON_BOUND).abs() < 1e-12, "{kind:?}: {s}");
    }
}

/// Dense scan of the CHSH functional with the closed-form product
/// correlations of mixed analyzers.
fn mixed_kind_scan(steps: usize) -> f64 {
    let grid: Vec<f64> = (0..steps).map(|k| PI * k as f64 / steps as f64).collect();
    let c: Vec<f64> = grid.iter().map(|t| (2.0 * t).cos()).collect();
    let mut best: f64 = 0.0;
    for &x in &c {
        for &xp in &c {
            for &y in &c {
                for &yp in &c {
                    best = best.max((x * y - x * yp).abs() + (xp * y + xp * yp).abs());
                }
            }
        }
    }
    best
}

#[test]
fn mixed_kinds_never_violate() {
    let oracle = mixed_kind_scan(48);
    assert!((oracle - 2.0).abs() < 1e-12);
    for state in [StateVector4::psi_plus(), StateVector4::psi_minus()] {
        for kinds in [
            ChshKinds::sides(AnalyzerKind::Linear, AnalyzerKind::Elliptic),
            ChshKinds::sides(AnalyzerKind::Elliptic, AnalyzerKind::Linear),
        ] {
            let (settings, value) = maximize_chsh(&state, kinds, 3).unwrap();
            assert!((value - oracle).abs() < 1e-4, "{kinds}: {value}");
            assert!((chsh_value(&state, &settings).unwrap() - value).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_kinds_maximize_to_tsirelson() {
    for kind in [AnalyzerKind::Linear, AnalyzerKind::Elliptic] {
        let (_, value) = maximize_chsh(&StateVector4::psi_minus(), ChshKinds::uniform(kind), 5).unwrap();
        assert!((value - TSIRELSON_BOUND).abs() < 1e-6, "{value}");
    }
}

#[test]
fn maximization_is_deterministic() {
    let kinds: ChshKinds = "LELE".parse().unwrap();
    let a = maximize_chsh(&StateVector4::psi_plus(), kinds, 9).unwrap();
    let b = maximize_chsh(&StateVector4::psi_plus(), kinds, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn singlet_vector_form() {
    let z = [0.0, 0.0, 1.0];
    let x = [1.0, 0.0, 0.0];
    assert!((singlet_correlation(z, z).unwrap() + 1.0).abs() < 1e-15);
    assert!(singlet_correlation(z, x).unwrap().abs() < 1e-15);
    assert!(singlet_correlation([1.0, 1.0, 0.0], z).is_err());
}

#[test]
fn circular_analyzer_observable() {
    let obs = observable_from_setting(&AnalyzerSetting::elliptic(FRAC_PI_4));
    let m = obs.matrix;
    assert!(m[0][0].norm() < 1e-15 && m[1][1].norm() < 1e-15);
    assert!((m[0][1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    assert!((m[1][0] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
}

fn kind_strategy() -> impl Strategy<Value = AnalyzerKind> {
    prop_oneof![Just(AnalyzerKind::Linear), Just(AnalyzerKind::Elliptic)]
}

proptest! {
    #[test]
    fn observables_are_dichotomic(theta in -10.0f64..10.0, kind in kind_strategy()) {
        let obs = observable_from_setting(&AnalyzerSetting::new(theta, kind));
        prop_assert!(obs.is_hermitian(1e-12));
        let (lo, hi) = obs.eigenvalues();
        prop_assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlations_are_bounded(
        amps in prop::array::uniform8(-1.0f64..1.0),
        a in 0.0f64..PI, b in 0.0f64..PI,
        ka in kind_strategy(), kb in kind_strategy(),
    ) {
        let v = [0, 2, 4, 6].map(|k| Complex64::new(amps[k], amps[k + 1]));
        prop_assume!(v.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-6);
        let state = StateVector4::normalized(v).unwrap();
        let e = correlation(&state, &AnalyzerSetting::new(a, ka), &AnalyzerSetting::new(b, kb)).unwrap();
        prop_assert!(e.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn angles_are_periodic(a in 0.0f64..PI, b in 0.0f64..PI, ka in kind_strategy(), kb in kind_strategy()) {
        let s = StateVector4::psi_plus();
        let e = correlation(&s, &AnalyzerSetting::new(a, ka), &AnalyzerSetting::new(b, kb)).unwrap();
        let shifted = correlation(&s, &AnalyzerSetting::new(a + PI, ka), &AnalyzerSetting::new(b - 2.0 * PI, kb)).unwrap();
        prop_assert!((e - shifted).abs() < 1e-9);
        // a quarter turn swaps the transmitted and blocked channels
        let flipped = correlation(&s, &AnalyzerSetting::new(a + FRAC_PI_2, ka), &AnalyzerSetting::new(b, kb)).unwrap();
        prop_assert!((e + flipped).abs() < 1e-9);
    }
}
