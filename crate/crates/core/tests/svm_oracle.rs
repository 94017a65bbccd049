//! Trained dual optimum against exhaustive active-set enumeration.

mod common;

use common::{bruteforce_dual, random_svm_problem};
use mrkernel::svm::{dual_objective, train, SvmParams, DEFAULT_MAX_PASSES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The objective error left by a KKT gap grows with the size of the
/// multipliers, so the default gap of 1e-3 is too coarse at C = 1000.
const ORACLE_TOLERANCE: f64 = 1e-6;

#[test]
fn two_point_oracle_matches_closed_form() {
    let k = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    assert!((bruteforce_dual(&k, &[1, -1], 1.0) - 1.0).abs() < 1e-12);
}

#[test]
fn dual_optimum_on_random_four_point_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (k, y) = random_svm_problem(&mut rng);
        for c in [0.1, 1.0, 1000.0] {
            let params = SvmParams::new(c, ORACLE_TOLERANCE, DEFAULT_MAX_PASSES).unwrap();
            let model = train(&k, &y, &params).unwrap();
            let alpha = model.alphas();
            assert!(alpha.iter().all(|&a| (0.0..=c).contains(&a)));
            let eq: f64 = alpha.iter().zip(&y).map(|(a, &y)| a * y as f64).sum();
            assert!(eq.abs() <= 1e-6, "sum a*y = {eq}");
            let got = dual_objective(&alpha, &y, &k);
            let want = bruteforce_dual(&k, &y, c);
            worst = worst.max((got - want).abs());
            assert!((got - want).abs() <= 1e-4, "C={c}: {got} vs {want} K={k:?} y={y:?} a={alpha:?}");
        }
    }
    println!("worst objective gap {worst:e}");
}

#[test]
fn default_tolerance_is_close_at_small_c() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for _ in 0..100 {
        let (k, y) = random_svm_problem(&mut rng);
        for c in [0.1, 1.0] {
            let model = train(&k, &y, &SvmParams::with_c(c).unwrap()).unwrap();
            let got = dual_objective(&model.alphas(), &y, &k);
            assert!((got - bruteforce_dual(&k, &y, c)).abs() <= 1e-4);
        }
    }
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (k, y) = random_svm_problem(&mut rng);
    let p = SvmParams::with_c(1.0).unwrap();
    assert_eq!(train(&k, &y, &p).unwrap(), train(&k, &y, &p).unwrap());
}

#[test]
fn zero_alpha_instance_leaves_decisions_unchanged() {
    // A far-away point with the right label stays outside the margin.
    let k = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let p = SvmParams::with_c(1.0).unwrap();
    let base = train(&k, &[1, -1], &p).unwrap();
    let k3 = vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, -2.0], vec![2.0, -2.0, 8.0]];
    let ext = train(&k3, &[1, -1, 1], &p).unwrap();
    if ext.alphas()[2] == 0.0 {
        let rows = vec![vec![0.3, 0.7]];
        let rows3 = vec![vec![0.3, 0.7, 5.0]];
        let a = base.decision_values(&rows).unwrap();
        let b = ext.decision_values(&rows3).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-9);
    }
}
