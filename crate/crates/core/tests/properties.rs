use proptest::prelude::*;
use pseudobosons::fock::{CMatrix, ONE};
use pseudobosons::frames::{bosonize, debosonize, intertwine_residual, mutual_mapping_check, system_frames};
use pseudobosons::models::{frame_order, instantiate, ModelKind, ModelSpec};
use pseudobosons::pbsystem::{eigen_check, gram_check};
use pseudobosons::{build_ladder, build_system, tensor_lift, ModeLayout, PseudoBosonPair, Tolerances, TruncatedOperator, C64};

fn diag(values: &[f64]) -> TruncatedOperator {
    let n = values.len();
    let m = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { C64::new(0.0, 0.0) });
    TruncatedOperator::from_matrix(m).unwrap()
}

fn seeded_pair(values: &[f64]) -> PseudoBosonPair {
    let c = build_ladder(values.len()).unwrap();
    debosonize(std::slice::from_ref(&c), &[c.adjoint()], &diag(values), &Tolerances::default()).unwrap()
}

/// Max over trust-region `n` of `|| a phi_n - sqrt(n) phi_{n-1} ||` and `|| b phi_n - sqrt(n+1) phi_{n+1} ||`,
/// relative to the vector norms involved.
fn ladder_defect(pair: &PseudoBosonPair, n_max: usize) -> f64 {
    let sys = build_system(pair, n_max, &Tolerances::default()).unwrap();
    let (a, b) = (&pair.a()[0], &pair.b()[0]);
    let phi = sys.phi();
    let mut worst: f64 = 0.0;
    for n in 0..n_max {
        let up = b.apply(&phi[n]) - phi[n + 1].scale((n as f64 + 1.0).sqrt());
        worst = worst.max(up.norm() / phi[n + 1].norm());
        if n > 0 {
            let down = a.apply(&phi[n]) - phi[n - 1].scale((n as f64).sqrt());
            worst = worst.max(down.norm() / phi[n].norm());
        }
    }
    worst
}

#[test]
fn ladder_commutator_defect_sits_in_the_last_entry() {
    for dim in 2..40 {
        let c = build_ladder(dim).unwrap();
        let defect = c.commutator(&c.adjoint()).matrix() - CMatrix::identity(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == dim - 1 && j == dim - 1 { -(dim as f64) } else { 0.0 };
                // sqrt(n)^2 is n only to a few ulps.
                let ulps = 4.0 * f64::EPSILON * dim as f64;
                assert!((defect[(i, j)] - C64::new(want, 0.0)).norm() <= ulps, "dim {dim} entry ({i}, {j})");
            }
        }
    }
}

#[test]
fn lifted_operators_on_different_modes_commute_exactly() {
    let layout = ModeLayout::new(vec![4, 5, 3]).unwrap();
    for (m, n) in [(0, 1), (0, 2), (1, 2)] {
        let x = tensor_lift(&build_ladder(layout.cutoffs()[m]).unwrap(), m, &layout).unwrap();
        let y = tensor_lift(&build_ladder(layout.cutoffs()[n]).unwrap().adjoint(), n, &layout).unwrap();
        assert!(x.commutator(&y).matrix().iter().all(|z| *z == C64::new(0.0, 0.0)));
    }
}

#[test]
fn self_adjoint_pair_reduces_to_orthonormal_basis() {
    for dim in [8, 16, 33] {
        let c = build_ladder(dim).unwrap();
        let pair = PseudoBosonPair::single(c.clone(), c.adjoint()).unwrap();
        let sys = build_system(&pair, dim / 2, &Tolerances::default()).unwrap();
        for (p, q) in sys.phi().iter().zip(sys.psi()) {
            assert!((p - q).norm() < 1e-14);
        }
        assert!(sys.norm_profile().iter().all(|s| (s.product - 1.0).abs() < 1e-14));
    }
}

#[test]
fn seeded_norm_products_stay_bounded_while_swanson_grows() {
    let tol = Tolerances::default();
    let peak = |spec: ModelSpec| {
        let pair = instantiate(&spec, &tol).unwrap();
        let sys = build_system(&pair, spec.dim / 4, &tol).unwrap();
        sys.norm_profile().iter().map(|s| s.product).collect::<Vec<_>>()
    };
    let seeded: Vec<f64> = [32, 64]
        .into_iter()
        .map(|d| {
            let kind = ModelKind::RieszSeeded { condition: 10.0, rotation_block: 0, seed: 0 };
            peak(ModelSpec::new(kind, d)).into_iter().fold(0.0, f64::max)
        })
        .collect();
    assert!(seeded.iter().all(|&p| p <= 10.0 + 1e-9), "{seeded:?}");

    let swanson = peak(ModelSpec::new(ModelKind::Swanson { theta: 0.2, alpha: [1.0, 0.0] }, 64));
    assert!(swanson.windows(2).all(|w| w[1] > w[0]), "{swanson:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn seeded_systems_are_biorthogonal(values in prop::collection::vec(0.2f64..5.0, 24)) {
        let pair = seeded_pair(&values);
        let sys = build_system(&pair, 10, &Tolerances::default()).unwrap();
        prop_assert!(gram_check(&sys).max_deviation < 1e-8);
        prop_assert!(eigen_check(&sys, &pair, 12).unwrap().max() < 1e-8);
    }

    #[test]
    fn seeded_ladders_are_consistent(values in prop::collection::vec(0.2f64..5.0, 24)) {
        prop_assert!(ladder_defect(&seeded_pair(&values), 10) < 1e-10);
    }

    #[test]
    fn debosonize_then_bosonize_recovers_diagonal_seed(values in prop::collection::vec(0.5f64..4.0, 32)) {
        let tol = Tolerances::default();
        let pair = seeded_pair(&values);
        let sys = build_system(&pair, frame_order(32, 16), &tol).unwrap();
        let (s_phi, _) = system_frames(&sys).unwrap();
        let w = bosonize(&pair, &s_phi, &sys, 16, &tol).unwrap();
        prop_assert!(w.a_residual < 1e-10 && w.b_residual < 1e-10);
        prop_assert!(w.orthonormality < 1e-10);
        // Diagonal seeds are fixed up to the overall scale set by the vacuum normalization.
        let scale = values[0] / w.t.matrix()[(0, 0)].re;
        for n in 0..w.headline_trust {
            prop_assert!((w.t.matrix()[(n, n)].re * scale - values[n]).abs() < 1e-10 * values[n]);
        }
    }

    #[test]
    fn swanson_systems_are_biorthogonal(theta in 0.05f64..0.3) {
        let tol = Tolerances::default();
        let pair = instantiate(&ModelSpec::new(ModelKind::Swanson { theta, alpha: [1.0, 0.0] }, 64), &tol).unwrap();
        let sys = build_system(&pair, 16, &tol).unwrap();
        prop_assert!(gram_check(&sys).max_deviation < 1e-8);
        prop_assert!(eigen_check(&sys, &pair, 32).unwrap().max() < 1e-8);
    }

    #[test]
    fn intertwining_follows_mutual_mapping(theta in 0.05f64..0.3) {
        let tol = Tolerances::default();
        let pair = instantiate(&ModelSpec::new(ModelKind::Swanson { theta, alpha: [1.0, 0.0] }, 64), &tol).unwrap();
        let sys = build_system(&pair, frame_order(64, 12), &tol).unwrap();
        let (s_phi, s_psi) = system_frames(&sys).unwrap();
        let mutual = mutual_mapping_check(&s_phi, &s_psi, &sys, 9, 12).unwrap();
        let n = pair.number_op(0);
        let residual = intertwine_residual(&s_psi, &n, &n.adjoint(), 12);
        if mutual.max() < 1e-6 {
            prop_assert!(residual < 1e-6, "mutual {} intertwining {residual}", mutual.max());
        }
    }

    #[test]
    fn frame_product_is_identity_on_trust(values in prop::collection::vec(0.5f64..4.0, 32)) {
        let sys = build_system(&seeded_pair(&values), frame_order(32, 12), &Tolerances::default()).unwrap();
        let (s_phi, s_psi) = system_frames(&sys).unwrap();
        prop_assert!((&s_phi * &s_psi).defect_from_scalar(ONE, 12) < 1e-10);
    }
}
