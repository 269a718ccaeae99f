use std::f64::consts::PI;

use bellforge_core::lhv::*;
use bellforge_core::spinor::{ChshKinds, ChshSettings, StateVector4, TSIRELSON_BOUND};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Extremal nonlocal box `r ⊕ s = ij ⊕ αi ⊕ βj ⊕ γ`.
fn pr_box(alpha: usize, beta: usize, gamma: usize) -> ProbTable {
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for r in 0..2 {
                for s in 0..2 {
                    if r ^ s == (i & j) ^ (alpha & i) ^ (beta & j) ^ gamma {
                        p[i][j][r][s] = 0.5;
                    }
                }
            }
        }
    }
    p
}

fn vertices() -> Vec<ProbTable> {
    let mut out = Vec::new();
    for k in 0..16 {
        out.push(*Behavior::deterministic([k >> 3 & 1, k >> 2 & 1], [k >> 1 & 1, k & 1]).probabilities());
    }
    for k in 0..8 {
        out.push(pr_box(k >> 2 & 1, k >> 1 & 1, k & 1));
    }
    out
}

/// Random point of the no-signalling polytope: local mixture plus a
/// nonlocal box with a random weight.
fn random_behavior(rng: &mut ChaCha8Rng, verts: &[ProbTable]) -> Behavior {
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    let nonlocal = rng.gen_range(0.0..0.6);
    let local: Vec<f64> = (0..16).map(|_| -rng.gen::<f64>().ln()).collect();
    let total: f64 = local.iter().sum();
    let pr = 16 + rng.gen_range(0..8);
    let mut add = |v: &ProbTable, w: f64| {
        for i in 0..2 {
            for j in 0..2 {
                for r in 0..2 {
                    for s in 0..2 {
                        p[i][j][r][s] += w * v[i][j][r][s];
                    }
                }
            }
        }
    };
    for (k, w) in local.iter().enumerate() {
        add(&verts[k], (1.0 - nonlocal) * w / total);
    }
    add(&verts[pr], nonlocal);
    Behavior::new(p).unwrap()
}

fn max_chsh(b: &Behavior) -> f64 {
    b.chsh_variants().into_iter().fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn simplex_agrees_with_vertex_oracle() {
    let verts = vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut checked, mut feasible) = (0, 0);
    while checked < 1000 {
        let b = random_behavior(&mut rng, &verts);
        if (max_chsh(&b) - 2.0).abs() < 1e-6 {
            continue;
        }
        let (fast, oracle) = (lhv_feasible(&b), brute_force_feasible(&b));
        assert_eq!(fast.is_feasible(), oracle.is_feasible(), "{b:?}");
        // the CHSH facets decide the 2×2×2 polytope
        assert_eq!(fast.is_feasible(), max_chsh(&b) < 2.0);
        match fast {
            Feasibility::Feasible(q) => {
                assert!(q.marginal_error(&b) < MARGINAL_TOL);
                feasible += 1;
            }
            Feasibility::Infeasible(c) => assert!(c.value > 2.0),
        }
        checked += 1;
    }
    assert!(feasible > 100 && feasible < 900, "{feasible} feasible of {checked}");
}

#[test]
fn singlet_optimum_is_infeasible_with_tsirelson_certificate() {
    let settings = ChshSettings::from_angles(
        [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0],
        ChshKinds::uniform(bellforge_core::spinor::AnalyzerKind::Linear),
    );
    let b = quantum_behavior(&StateVector4::singlet(), &settings).unwrap();
    match lhv_feasible(&b) {
        Feasibility::Infeasible(c) => assert!((c.value - TSIRELSON_BOUND).abs() < 1e-6, "{c:?}"),
        other => panic!("expected infeasible, got {other:?}"),
    }
    assert!(!brute_force_feasible(&b).is_feasible());
}

#[test]
fn nonlocal_boxes_saturate_the_algebraic_bound() {
    for k in 0..8 {
        let b = Behavior::new(pr_box(k >> 2 & 1, k >> 1 & 1, k & 1)).unwrap();
        assert!((max_chsh(&b) - 4.0).abs() < 1e-12);
        assert!(!lhv_feasible(&b).is_feasible());
    }
}

#[test]
fn invalid_behaviors_are_rejected() {
    let mut p = *Behavior::uniform().probabilities();
    p[0][0][0][0] = -0.1;
    p[0][0][1][1] = 0.45;
    let err = Behavior::new(p).unwrap_err().to_string();
    assert!(err.contains("nonnegativity"), "{err}");
    let mut p = *Behavior::uniform().probabilities();
    p[1][1][0][0] = 0.3;
    assert!(Behavior::new(p).unwrap_err().to_string().contains("normalization"));
    let mut p = *Behavior::uniform().probabilities();
    p[0][0] = [[0.5, 0.0], [0.0, 0.5]];
    p[0][1] = [[0.5, 0.25], [0.0, 0.25]];
    assert!(Behavior::new(p).unwrap_err().to_string().contains("no-signalling"));
}

#[test]
fn behavior_file_round_trip() {
    let b = random_behavior(&mut ChaCha8Rng::seed_from_u64(4), &vertices());
    let file = BehaviorFile::from(&b);
    assert_eq!(Behavior::try_from(file.clone()).unwrap(), b);
    let mut missing = file;
    missing.p.remove("21");
    assert!(Behavior::try_from(missing).is_err());
}

proptest! {
    #[test]
    fn deterministic_strategies_are_point_masses(a0 in 0usize..2, a1 in 0usize..2, b0 in 0usize..2, b1 in 0usize..2) {
        let b = Behavior::deterministic([a0, a1], [b0, b1]);
        match lhv_feasible(&b) {
            Feasibility::Feasible(q) => {
                let k = a0 << 3 | a1 << 2 | b0 << 1 | b1;
                prop_assert!((q.q[k] - 1.0).abs() < 1e-9);
            }
            Feasibility::Infeasible(_) => prop_assert!(false, "deterministic strategy rejected"),
        }
    }

    #[test]
    fn feasible_behaviors_satisfy_every_chsh_variant(seed in 0u64..10_000) {
        let b = random_behavior(&mut ChaCha8Rng::seed_from_u64(seed), &vertices());
        if lhv_feasible(&b).is_feasible() {
            prop_assert!(max_chsh(&b) <= 2.0 + 1e-9);
        } else {
            prop_assert!(max_chsh(&b) > 2.0 - 1e-9);
        }
    }
}
