mod oracles;

use defakehop::pipeline::compute_auc;
use defakehop::Error;
use oracles::pairwise_auc;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_pairwise_oracle_with_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let labels: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        // coarse scores so ties are common
        let scores: Vec<f64> = labels
            .iter()
            .map(|&y| (rng.random_range(0.0..10.0) + 2.0 * f64::from(y)).round() / 10.0)
            .collect();
        let auc = compute_auc(&scores, &labels).unwrap();
        assert!((auc - pairwise_auc(&scores, &labels)).abs() < 1e-12);
    }
}

#[test]
fn degenerate_inputs() {
    assert_eq!(compute_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
    assert_eq!(compute_auc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]).unwrap(), 0.0);
    assert_eq!(compute_auc(&[0.5; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
    assert!(matches!(compute_auc(&[0.1, 0.2], &[1, 1]), Err(Error::Metric(_))));
    assert!(matches!(compute_auc(&[f64::NAN, 0.2], &[0, 1]), Err(Error::Validation(_))));
    assert!(compute_auc(&[0.1], &[0, 1]).is_err());
}

proptest! {
    #[test]
    fn equals_oracle(data in proptest::collection::vec((0u8..20, 0u8..2), 2..150)) {
        prop_assume!(data.iter().any(|d| d.1 == 0) && data.iter().any(|d| d.1 == 1));
        let scores: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
        let labels: Vec<u8> = data.iter().map(|d| d.1).collect();
        let auc = compute_auc(&scores, &labels).unwrap();
        prop_assert!((auc - pairwise_auc(&scores, &labels)).abs() < 1e-12);
    }

    #[test]
    fn invariant_under_increasing_transforms(
        data in proptest::collection::vec((-1000i32..1000, 0u8..2), 2..150),
        scale in 1i32..50,
        shift in -100i32..100,
    ) {
        prop_assume!(data.iter().any(|d| d.1 == 0) && data.iter().any(|d| d.1 == 1));
        let scores: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
        let labels: Vec<u8> = data.iter().map(|d| d.1).collect();
        let affine: Vec<f64> = scores.iter().map(|s| f64::from(scale) * s + f64::from(shift)).collect();
        let cubed: Vec<f64> = scores.iter().map(|s| s * s * s).collect();
        let squashed: Vec<f64> = scores.iter().map(|s| (s / 1000.0).exp()).collect();
        let base = compute_auc(&scores, &labels).unwrap();
        prop_assert_eq!(base, compute_auc(&affine, &labels).unwrap());
        prop_assert_eq!(base, compute_auc(&cubed, &labels).unwrap());
        prop_assert_eq!(base, compute_auc(&squashed, &labels).unwrap());
    }
}
