//! Closed-form values pinned across modules.

use defectlab::analytics::{chain_delay, classify, delay_factor, position_shift, Delay, DefectChain, Regime};
use defectlab::potentials::{
    verify_type1_constraints, verify_type2_constraint, Axis, BulkPotential, DerivativeMode, Grid2, Grid3, TypeIDefectPotential,
    TypeIIDefectPotential,
};
use defectlab::qgroup::{q_binomial, q_number};
use defectlab::transmission::{breather_transmission, smatrix, yang_baxter_residual, CouplingParams};
use defectlab::Complex64;

#[test]
fn delay_factor_values() {
    let z = delay_factor(0.5, 1.0).value().unwrap();
    assert!((z - 0.25f64.tanh().recip()).abs() < 1e-14);
    assert!(delay_factor(1.5, 1.0).value().unwrap() < 0.0);
    assert!(matches!(delay_factor(1.0, 1.0), Delay::Infinite(_)));
    let chain = DefectChain::new(vec![1.0, 2.0], vec![0.0, 6.0]).unwrap();
    let z = chain_delay(1.5, &chain).value().unwrap();
    assert!((z + 16.670792356131055).abs() < 1e-9, "{z}");
}

#[test]
fn position_shift_values() {
    let s = position_shift(delay_factor(0.5, 1.0), 0.5).unwrap();
    assert!((s + 1.2476026245899847).abs() < 1e-12, "{s}");
    let s = position_shift(delay_factor(1.5, 1.0), 1.5).unwrap();
    assert!((s + 0.5980374780953377).abs() < 1e-12, "{s}");
}

#[test]
fn regimes() {
    assert_eq!(classify(0.5, 1.0).unwrap(), Regime::Pass);
    assert_eq!(classify(1.0, 1.0).unwrap(), Regime::Absorb);
    assert_eq!(classify(1.5, 1.0).unwrap(), Regime::Flip);
}

#[test]
fn potential_constraints_at_small_step() {
    let fd = DerivativeMode::Auto { h: 1e-5 };
    let sg = BulkPotential::sine_gordon();
    let d = TypeIDefectPotential::sine_gordon((-1.0f64).exp()).unwrap();
    assert!(verify_type1_constraints(&sg, &sg, &d, &Grid2::default(), fd).max_constraint_residual() < 1e-6);
    let fm = BulkPotential::free_massive(1.0);
    let d = TypeIDefectPotential::free_massive(1.0, 0.6).unwrap();
    assert!(verify_type1_constraints(&fm, &fm, &d, &Grid2::default(), fd).max_constraint_residual() < 1e-6);
    let tz = BulkPotential::tzitzeica();
    let grid = Grid3 {
        p: Axis::new(-2.0, 2.0, 11),
        q: Axis::new(-2.0, 2.0, 11),
        lambda: Axis::new(-1.5, 1.5, 7),
    };
    let rep = verify_type2_constraint(&TypeIIDefectPotential::tzitzeica(1.0).unwrap(), &tz, &tz, &grid, 1e-5);
    assert!(rep.residual < 1e-6, "{rep:?}");
}

#[test]
fn breather_and_yang_baxter() {
    for eta in [-0.4, 0.0, 1.3] {
        assert!((breather_transmission(eta, eta) - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }
    let c = CouplingParams::from_gamma(3.137, 1.0).unwrap();
    // residual is absolute; |S| entries here are O(1..10)
    assert!(yang_baxter_residual(&c, 0.3, -0.4, 1.1) < 1e-10);
    let s = smatrix(0.0, &c);
    assert!(s.entry(0, 1, 1, 0).norm() < 1e-15);
}

#[test]
fn q_numbers() {
    let q = Complex64::new(1.3, 0.0);
    assert!((q_number(2, q).unwrap() - (q + q.inv())).norm() < 1e-15);
    assert!((q_binomial(5, 2, q).unwrap() - Complex64::new(14.8036449603415, 0.0)).norm() < 1e-11);
}
