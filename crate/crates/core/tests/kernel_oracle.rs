mod common;

use mrkernel::cfg::{default_similarity_table, NodeLabel};
use mrkernel::kernel::{kernel, kernel_bruteforce, Digraph, KernelError, KernelParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn labels(names: &[&str]) -> Vec<NodeLabel> {
    names.iter().map(|n| n.parse().unwrap()).collect()
}

#[test]
fn single_node_cases() {
    let t = default_similarity_table();
    let add = Digraph::path(&labels(&["add"]));
    let mul = Digraph::path(&labels(&["mul"]));
    for (lambda, len) in [(0.0, 0), (0.5, 3), (0.9, 10)] {
        let p = KernelParams::new(lambda, len, false).unwrap();
        assert_eq!(kernel(&add, &add, &t, &p), 1.0);
        assert_eq!(kernel(&add, &mul, &t, &p), 0.0);
    }
}

#[test]
fn worked_path_examples() {
    let t = default_similarity_table();
    let p = KernelParams::new(0.5, 4, false).unwrap();
    let assign_add = Digraph::path(&labels(&["assign", "add"]));
    // c0 = 2, c1 = 1
    assert_eq!(kernel(&assign_add, &assign_add, &t, &p), 2.5);
    assert_eq!(kernel_bruteforce(&assign_add, &assign_add, &t, &p).unwrap(), 2.5);
    // c0 = 0.5 + 1, c1 = 0.5 * 1
    let add_mul = Digraph::path(&labels(&["add", "mul"]));
    let sub_mul = Digraph::path(&labels(&["sub", "mul"]));
    assert_eq!(kernel(&add_mul, &sub_mul, &t, &p), 1.75);
    assert_eq!(kernel_bruteforce(&add_mul, &sub_mul, &t, &p).unwrap(), 1.75);
}

#[test]
fn bruteforce_agrees_on_random_pairs() {
    let t = default_similarity_table();
    for (a, b) in common::random_pairs() {
        for lambda in [0.0, 0.5, 0.9] {
            for len in [0, 1, 4] {
                let p = KernelParams::new(lambda, len, false).unwrap();
                let fast = kernel(&a, &b, &t, &p);
                let slow = kernel_bruteforce(&a, &b, &t, &p).unwrap();
                assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1.0), "{fast} vs {slow}");
            }
        }
    }
}

#[test]
fn normalized_bruteforce_agrees() {
    let t = default_similarity_table();
    let p = KernelParams::new(0.7, 3, true).unwrap();
    for (a, b) in common::random_pairs().into_iter().take(10) {
        let fast = kernel(&a, &b, &t, &p);
        let slow = kernel_bruteforce(&a, &b, &t, &p).unwrap();
        assert!((fast - slow).abs() < 1e-9);
    }
}

#[test]
fn closed_forms_at_zero() {
    let t = default_similarity_table();
    for (a, b) in common::random_pairs() {
        let expected = common::node_pair_sum(&a, &b, &t);
        let zero_lambda = kernel(&a, &b, &t, &KernelParams::new(0.0, 6, false).unwrap());
        let zero_len = kernel(&a, &b, &t, &KernelParams::new(0.8, 0, false).unwrap());
        assert!((zero_lambda - expected).abs() < 1e-12);
        assert!((zero_len - expected).abs() < 1e-12);
        let brute = kernel_bruteforce(&a, &b, &t, &KernelParams::new(0.0, 3, false).unwrap()).unwrap();
        assert!((brute - expected).abs() < 1e-12);
    }
}

#[test]
fn bruteforce_size_guard() {
    let t = default_similarity_table();
    let big = Digraph::path(&labels(&["add"; 9]));
    let p = KernelParams::new(0.5, 2, false).unwrap();
    assert!(matches!(
        kernel_bruteforce(&big, &big, &t, &p),
        Err(KernelError::TooLarge { pairs: 81, .. })
    ));
    let small = Digraph::path(&labels(&["add"]));
    let long = KernelParams::new(0.5, 7, false).unwrap();
    assert!(matches!(
        kernel_bruteforce(&small, &small, &t, &long),
        Err(KernelError::TooLarge { .. })
    ));
}

#[test]
fn affine_in_lambda_at_length_one() {
    let t = default_similarity_table();
    for (a, b) in common::random_pairs().into_iter().take(20) {
        let k = |l: f64| kernel(&a, &b, &t, &KernelParams::new(l, 1, false).unwrap());
        let (k0, k3, k6) = (k(0.0), k(0.3), k(0.6));
        assert!(((k6 - k3) - (k3 - k0)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_and_monotone(seed in any::<u64>(), lambda in 0.0f64..0.99, len in 0usize..8) {
        let t = default_similarity_table();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_cfg(&mut rng, "a", 7);
        let b = common::random_cfg(&mut rng, "b", 7);
        let p = KernelParams::new(lambda, len, false).unwrap();
        let ab = kernel(&a, &b, &t, &p);
        let ba = kernel(&b, &a, &t, &p);
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
        let longer = kernel(&a, &b, &t, &KernelParams::new(lambda, len + 1, false).unwrap());
        prop_assert!(longer >= ab);
    }
}
