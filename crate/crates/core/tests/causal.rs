use std::f64::consts::{FRAC_1_SQRT_2, PI};

use bellforge_core::causal::*;
use bellforge_core::waves::*;
use num_complex::Complex64;

fn balanced(n: usize) -> Axis {
    Axis::balanced(Representation::Position, n).unwrap()
}

fn two_gaussians(axis: Axis) -> GridWavefunction {
    let parts = [
        GaussianComponent { weight: 0.8, x0: -2.0, p0: 1.0, sigma: 0.7 },
        GaussianComponent { weight: 0.45, x0: 2.5, p0: -0.5, sigma: 1.1 },
    ];
    gaussian_superposition(axis, &parts).unwrap()
}

#[test]
fn free_gaussian_marginals_are_reproduced() {
    let psi = gaussian_packet(balanced(4096), 0.3, 0.8, 0.9, 1.2, 1.0).unwrap();
    for eps in [Sign::Plus, Sign::Minus] {
        let map = rs_map_1d(&psi, eps).unwrap();
        assert!(map.is_monotone());
        let quad = verify_marginals_1d(&map, &psi, VerifyMethod::Quadrature).unwrap();
        assert!(quad.passed(), "{quad:?}");
        assert!(quad.distance("X").unwrap() < 1e-4 && quad.distance("P").unwrap() < 1e-4, "{quad:?}");
        let mc = verify_marginals_1d(&map, &psi, VerifyMethod::MonteCarlo { samples: 1_000_000, seed: 8 }).unwrap();
        assert!(mc.passed(), "{mc:?}");
    }
}

#[test]
fn asymmetric_superposition_marginals_are_reproduced() {
    let psi = two_gaussians(balanced(4096));
    for eps in [Sign::Plus, Sign::Minus] {
        let map = rs_map_1d(&psi, eps).unwrap();
        assert!(map.is_monotone());
        let quad = verify_marginals_1d(&map, &psi, VerifyMethod::Quadrature).unwrap();
        assert!(quad.passed(), "{quad:?}");
    }
}

#[test]
fn gaussian_map_is_linear() {
    // position std a, momentum std 1/(2a): p̂(x) = x/(2a²)
    let a = 1.3;
    let psi = gaussian_packet(balanced(16384), 0.0, 0.0, a, 0.0, 1.0).unwrap();
    let map = rs_map_1d(&psi, Sign::Plus).unwrap();
    for (x, p) in map.nodes().iter().zip(&map.values) {
        if x.abs() < 3.0 * a {
            assert!((p - x / (2.0 * a * a)).abs() < 1e-5, "{x}: {p}");
        }
    }
}

#[test]
fn reversed_map_is_the_reflection_of_the_conjugate_state() {
    let axis = balanced(2048);
    let psi = two_gaussians(axis);
    let minus = rs_map_1d(&psi, Sign::Minus).unwrap();
    let plus = rs_map_1d(&psi.reflected_conjugate().unwrap(), Sign::Plus).unwrap();
    let rho = psi.density();
    let peak = rho.values.iter().cloned().fold(0.0, f64::max);
    for j in 1..axis.n {
        if rho.values[j] > 1e-6 * peak {
            let x = axis.coord(j);
            assert!((minus.eval(x) - plus.eval(-x)).abs() < 1e-6, "{x}");
        }
    }
}

#[test]
fn quantile_flow_keeps_free_gaussian_consistent() {
    let axis = balanced(256);
    let psi = |t: f64| gaussian_packet(axis, -0.5, 0.6, 0.8, t, 1.0).unwrap();
    let r = liouville_surrogate(&psi(0.5), &psi(1.5), Sign::Plus, 1_000_000, 3).unwrap();
    assert!(r.position_l1 < 1e-2 && r.momentum_l1 < 1e-2, "{r:?}");
}

#[test]
fn debb_field_misses_the_momentum_distribution() {
    let axis = balanced(4096);
    let gaps: Vec<f64> = [0.0, 1.0, 2.0, 4.0]
        .iter()
        .map(|&t| takabayasi_gap(&gaussian_packet(axis, 0.0, 0.0, FRAC_1_SQRT_2, t, 1.0).unwrap()).unwrap().gap)
        .collect();
    assert!(gaps[0] > 1.5, "{gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn plane_wave_phase_gives_constant_field() {
    let axis = balanced(1024);
    let envelope = oscillator_state(axis, 0).unwrap();
    let values: Vec<Complex64> =
        envelope.values().iter().zip(axis.coords()).map(|(v, x)| v * Complex64::from_polar(1.0, 0.7 * x)).collect();
    let psi = GridWavefunction::new(vec![axis], values).unwrap();
    for f in debb_momentum_field(&psi).unwrap().into_iter().flatten().skip(1) {
        assert!((f - 0.7).abs() < 1e-3, "{f}");
    }
}

/// Momentum covariance of `exp(−xᵀMx)` with `M = ¼Σ⁻¹ − ½iC`: `(Re M⁻¹)⁻¹`.
fn momentum_covariance(cov: [[f64; 2]; 2], chirp: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    let inv = [[cov[1][1] / det, -cov[0][1] / det], [-cov[1][0] / det, cov[0][0] / det]];
    let m = |i: usize, j: usize| Complex64::new(0.25 * inv[i][j], -0.5 * chirp[i][j]);
    let dm = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    let minv = [[m(1, 1) / dm, -m(0, 1) / dm], [-m(1, 0) / dm, m(0, 0) / dm]];
    let r = [[minv[0][0].re, minv[0][1].re], [minv[1][0].re, minv[1][1].re]];
    let dr = r[0][0] * r[1][1] - r[0][1] * r[1][0];
    [[r[1][1] / dr, -r[0][1] / dr], [-r[1][0] / dr, r[0][0] / dr]]
}

fn normal_2d(x: f64, y: f64, c: [[f64; 2]; 2]) -> f64 {
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let q = (c[1][1] * x * x - 2.0 * c[0][1] * x * y + c[0][0] * y * y) / det;
    (-0.5 * q).exp() / (2.0 * PI * det.sqrt())
}

const COV: [[f64; 2]; 2] = [[1.0, 0.5], [0.5, 0.8]];
const CHIRP: [[f64; 2]; 2] = [[0.3, 0.4], [0.4, -0.2]];

#[test]
fn chirped_gaussian_grid_densities_match_closed_forms() {
    let a = balanced(128);
    let psi = correlated_gaussian_2d([a, a], COV, CHIRP).unwrap();
    let pp = psi.fourier(0).unwrap().fourier(1).unwrap();
    let cp = momentum_covariance(COV, CHIRP);
    let (ax, pax) = (psi.axes()[0], pp.axes()[0]);
    let (mut dx, mut dp) = (0.0, 0.0);
    for i in 0..a.n {
        for j in 0..a.n {
            dx += (psi.values()[i * a.n + j].norm_sqr() - normal_2d(ax.coord(i), ax.coord(j), COV)).abs();
            dp += (pp.values()[i * a.n + j].norm_sqr() - normal_2d(pax.coord(i), pax.coord(j), cp)).abs();
        }
    }
    assert!(dx * ax.spacing * ax.spacing < 1e-10 && dp * pax.spacing * pax.spacing < 1e-10, "{dx} {dp}");
}

#[test]
fn correlated_gaussian_chains_reproduce_three_contexts() {
    let a = balanced(128);
    for chirp in [[[0.0; 2]; 2], CHIRP] {
        let psi = correlated_gaussian_2d([a, a], COV, chirp).unwrap();
        for ordering in [ChainOrdering::Px, ChainOrdering::Xp] {
            for (e1, e2) in [(Sign::Plus, Sign::Plus), (Sign::Minus, Sign::Plus), (Sign::Plus, Sign::Minus)] {
                let map = rs_map_2d(&psi, e1, e2, ordering).unwrap();
                let r = map.verify(&psi, VerifyMethod::Quadrature).unwrap();
                assert!(r.passed(), "{ordering:?} {e1:?} {e2:?}: {r:?}");
                let (mid, _) = ordering.contexts();
                assert!(r.distance(mid).is_some());
            }
        }
    }
}

#[test]
fn monte_carlo_path_passes_for_both_orderings() {
    let a = balanced(128);
    let psi = correlated_gaussian_2d([a, a], COV, CHIRP).unwrap();
    for ordering in [ChainOrdering::Px, ChainOrdering::Xp] {
        let map = rs_map_2d(&psi, Sign::Plus, Sign::Plus, ordering).unwrap();
        let r = map.verify(&psi, VerifyMethod::MonteCarlo { samples: 1_000_000, seed: 17 }).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}

#[test]
fn swapping_the_chain_changes_the_density() {
    let a = balanced(128);
    let psi = correlated_gaussian_2d([a, a], COV, CHIRP).unwrap();
    let px = rs_map_2d(&psi, Sign::Plus, Sign::Plus, ChainOrdering::Px).unwrap();
    let xp = rs_map_2d(&psi, Sign::Plus, Sign::Plus, ChainOrdering::Xp).unwrap();
    assert!(context_difference(&px, &xp, &psi, 1e-3).unwrap() > 0.5);
    for map in [&px, &xp] {
        let r = map.verify(&psi, VerifyMethod::Quadrature).unwrap();
        assert!(r.distance("X1X2").unwrap() < QUADRATURE_TOL && r.distance("P1P2").unwrap() < QUADRATURE_TOL);
        // the context the chain skips is not reproduced
        assert!(cross_context_distance(map, &psi).unwrap() > 0.1);
    }
}

#[test]
fn real_gaussian_chains_converge_to_one_density() {
    // its Wigner function is a positive joint density, so both chains agree
    // in the continuum and the skipped context is reproduced as well
    let diffs: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let a = balanced(n);
            let psi = correlated_gaussian_2d([a, a], COV, [[0.0; 2]; 2]).unwrap();
            let px = rs_map_2d(&psi, Sign::Plus, Sign::Plus, ChainOrdering::Px).unwrap();
            let xp = rs_map_2d(&psi, Sign::Plus, Sign::Plus, ChainOrdering::Xp).unwrap();
            assert!(cross_context_distance(&px, &psi).unwrap() < 2e-2);
            context_difference(&px, &xp, &psi, 1e-3).unwrap()
        })
        .collect();
    assert!(diffs[1] < 0.6 * diffs[0] && diffs[2] < 0.6 * diffs[1], "{diffs:?}");
}

#[test]
fn separable_self_dual_product_maps_to_identity() {
    let a = balanced(128);
    let g = gaussian_packet(a, 0.0, 0.0, FRAC_1_SQRT_2, 0.0, 1.0).unwrap();
    let psi = GridWavefunction::product(&g, &g).unwrap();
    let map = rs_map_2d(&psi, Sign::Plus, Sign::Plus, ChainOrdering::Px).unwrap();
    for (x1, x2) in [(0.3, -0.7), (-1.2, 0.4), (1.5, 1.1)] {
        let (p1, p2) = map.apply(x1, x2);
        assert!((p1 - x1).abs() < 1e-4 && (p2 - x2).abs() < 1e-4, "({x1}, {x2}) -> ({p1}, {p2})");
    }
}

#[test]
fn map_construction_is_order_independent() {
    let a = balanced(64);
    let psi = correlated_gaussian_2d([a, a], COV, CHIRP).unwrap();
    let m1 = rs_map_2d(&psi, Sign::Plus, Sign::Minus, ChainOrdering::Xp).unwrap();
    let m2 = rs_map_2d(&psi, Sign::Plus, Sign::Minus, ChainOrdering::Xp).unwrap();
    assert_eq!(m1, m2);
}
