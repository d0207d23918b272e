use std::f64::consts::{FRAC_PI_4, PI};

use kerrchain_core::linear::{S1, S1D, S2, S2D};
use kerrchain_core::measurement::{class_params, shots_for_both};
use kerrchain_core::*;
use proptest::prelude::*;

fn short() -> SimControls {
    SimControls { t_settle: 1.0, t_filter: 5.0, n_traj: 16, seed: 3, ..Default::default() }
}

#[test]
fn shots_are_reproducible_and_seed_sensitive() {
    let p = ChainParams { g1: 0.4, g2: 0.9, eta_d2: 0.55, phi_d2: -FRAC_PI_4, ..Default::default() };
    let a = shots_for_class(&p, &short(), Encoding::PumpPhase, 1).unwrap();
    let b = shots_for_class(&p, &short(), Encoding::PumpPhase, 1).unwrap();
    assert_eq!(a, b);
    let c = shots_for_class(&p, &SimControls { seed: 4, ..short() }, Encoding::PumpPhase, 1).unwrap();
    assert!(a.iter().zip(&c).all(|(x, y)| x.i != y.i));
    // the two classes use different streams
    let d = shots_for_class(&p, &short(), Encoding::PumpPhase, 2).unwrap();
    assert!(a.iter().zip(&d).all(|(x, y)| x.seed != y.seed));
}

#[test]
fn shot_records_carry_labels_and_window() {
    let p = ChainParams { g1: 0.3, ..Default::default() };
    let (a, b) = shots_for_both(&p, &short(), Encoding::Dispersive { chi: 0.1 }).unwrap();
    assert!(a.iter().all(|s| s.class_label == 1 && s.t_filter == 5.0));
    assert!(b.iter().all(|s| s.class_label == 2));
    let stats = ClassStats::from_shots(&a, &b, FidelityMode::HeldOut).unwrap();
    assert!((0.0..=1.0).contains(&stats.fidelity));
}

#[test]
fn above_threshold_is_rejected_before_integration() {
    let p = ChainParams { g1: 0.55, ..Default::default() };
    assert!(matches!(solve_steady(&p, &SimControls::default()), Err(Error::AboveThreshold { .. })));
    assert!(shots_for_class(&p, &short(), Encoding::PumpPhase, 1).is_err());
}

#[test]
fn perturbative_and_teom_agree_on_the_direction_of_separation() {
    let p = ChainParams {
        g1: 0.4,
        g2: 0.8,
        lambda: 1e-3,
        eta_d2: 0.05 / 1e-3f64.sqrt(),
        phi_d2: -FRAC_PI_4,
        ..Default::default()
    };
    let c = SimControls::default();
    let x1 = solve_steady(&class_params(&p, Encoding::PumpPhase, 1).unwrap(), &c).unwrap();
    let x2 = solve_steady(&class_params(&p, Encoding::PumpPhase, 2).unwrap(), &c).unwrap();
    let teom = steady_metrics(&x1, &x2, 0.0).unwrap().delta_mu;
    let pert = perturbative_delta_mu(&solve_perturbative(&p, Encoding::PumpPhase).unwrap(), 1.0).unwrap();
    let cos = teom.dot(&pert) / (teom.norm() * pert.norm());
    assert!(cos > 0.99, "cos = {cos}");
}

#[test]
fn conversion_feeds_the_simulator() {
    let phys = conversion::PhysicalSnailParams {
        omega_s: 0.0,
        omega_p: 0.0,
        g3: 0.2,
        g4: -1e-3,
        kappa_s: 4.0,
        eps_p: 0.5,
        phi_p: 0.3,
        eta_sig: 0.5,
        phi_sig: -PI / 4.0,
    };
    let eff = to_effective(&phys).unwrap();
    let p = eff.apply(&ChainParams { g1: 0.4, ..Default::default() }).unwrap();
    assert!((p.lambda - 0.012).abs() < 1e-15);
    assert!((p.g2 - 0.6).abs() < 1e-12);
    let x = solve_steady(&p, &SimControls::default()).unwrap();
    assert!(x.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn linear_steady_state_matches_lyapunov(
        g1 in 0.0..0.45f64,
        g2 in 0.0..0.9f64,
        phi1 in -PI..PI,
        phi2 in -PI..PI,
        kappa1 in 0.0..0.5f64,
    ) {
        let p = ChainParams { g1, g2, phi1, phi2, kappa1, lambda: 0.0, ..Default::default() };
        let x = solve_steady(&p, &SimControls::default()).unwrap();
        let c = lyapunov_covariance(&build_linear_system(&p)).unwrap();
        let pairs = [
            (x.c_s1s1, c[(S1, S1)]),
            (x.c_s1s2, c[(S1, S2)]),
            (x.c_s2s2, c[(S2, S2)]),
            (x.c_s1ds1, c[(S1D, S1)]),
            (x.c_s2ds2, c[(S2D, S2)]),
            (x.c_s1ds2, c[(S1D, S2)]),
        ];
        for (a, b) in pairs {
            prop_assert!((a - b).norm() < 1e-7 * (1.0 + b.norm()), "{a} vs {b}");
        }
    }
}
