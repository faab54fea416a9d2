mod common;

use common::{check_complex_gradient, check_transe_gradient, naive_complex_score, random_vec, GRADIENT_TOLERANCE};
use kgsim_core::embeddings::complex;
use kgsim_core::Norm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn transe_l2_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let err = check_transe_gradient(&mut rng, Norm::L2);
        assert!(err < GRADIENT_TOLERANCE, "relative error {err}");
    }
}

#[test]
fn transe_l1_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let err = check_transe_gradient(&mut rng, Norm::L1);
        assert!(err < GRADIENT_TOLERANCE, "relative error {err}");
    }
}

#[test]
fn complex_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let err = check_complex_gradient(&mut rng);
        assert!(err < GRADIENT_TOLERANCE, "relative error {err}");
    }
}

#[test]
fn complex_score_matches_naive_loop() {
    assert_eq!(complex::score(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..1000 {
        let width = 2 * rng.random_range(1..=16);
        let (h, r, t) = (random_vec(&mut rng, width), random_vec(&mut rng, width), random_vec(&mut rng, width));
        assert!((complex::score(&h, &r, &t) - naive_complex_score(&h, &r, &t)).abs() < 1e-9);
    }
}
