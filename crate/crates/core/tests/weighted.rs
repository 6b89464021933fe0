use proptest::prelude::*;

use vote_delegation::weighted::{
    has_light_winning_subset, random_weight_vectors, unweighted_majority_prob, weight_dominance_check,
    weighted_majority_prob,
};
use vote_delegation::WeightedProfile;

fn profile(w: Vec<f64>) -> WeightedProfile {
    WeightedProfile::new(w).unwrap()
}

#[test]
fn equal_weights_dominate_random_profiles() {
    let samples = random_weight_vectors(9, 1000, 17);
    let report = weight_dominance_check(9, 0.7, &samples).unwrap();
    assert_eq!(report.violations, 0);
    assert!(report.min_gap >= -1e-12);
    // a positive gap needs a light subset that outweighs its complement
    for s in &report.samples {
        if s.gap > 1e-12 {
            assert!(s.light_winning_subset);
        }
        if !s.light_winning_subset {
            assert!(s.gap.abs() < 1e-12);
        }
    }
}

#[test]
fn dominance_across_signal_qualities() {
    for p in [0.5, 0.55, 0.6, 0.75, 0.9, 1.0] {
        for n in [2usize, 4, 5, 7] {
            let samples = random_weight_vectors(n, 200, n as u64);
            assert_eq!(weight_dominance_check(n, p, &samples).unwrap().violations, 0, "n={n} p={p}");
        }
    }
}

proptest! {
    #[test]
    fn permutation_invariance(weights in prop::collection::vec(0u32..20, 1..9), p in 0.0f64..=1.0, rot in 0usize..8) {
        let w: Vec<f64> = weights.iter().map(|&x| f64::from(x)).collect();
        let mut rotated = w.clone();
        let len = rotated.len();
        rotated.rotate_left(rot % len);
        rotated.reverse();
        let a = weighted_majority_prob(&profile(w), p).unwrap();
        let b = weighted_majority_prob(&profile(rotated), p).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn scale_invariance(weights in prop::collection::vec(0u32..50, 1..10), scale in 1u32..1000, p in 0.0f64..=1.0) {
        let w: Vec<f64> = weights.iter().map(|&x| f64::from(x)).collect();
        let scaled: Vec<f64> = w.iter().map(|x| x * f64::from(scale)).collect();
        let a = weighted_majority_prob(&profile(w.clone()), p).unwrap();
        let b = weighted_majority_prob(&profile(scaled), p).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let halved: Vec<f64> = w.iter().map(|x| x / 1024.0).collect();
        prop_assert!((a - weighted_majority_prob(&profile(halved), p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn coin_at_half(weights in prop::collection::vec(0.0f64..5.0, 1..12)) {
        let v = weighted_majority_prob(&profile(weights), 0.5).unwrap();
        prop_assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn equal_weights_never_lose(weights in prop::collection::vec(0.0f64..1.0, 1..11), p in 0.5f64..=1.0) {
        let n = weights.len();
        let unweighted = unweighted_majority_prob(n as u64, p).unwrap();
        let prof = profile(weights);
        let weighted = weighted_majority_prob(&prof, p).unwrap();
        prop_assert!(unweighted >= weighted - 1e-12);
        if !has_light_winning_subset(&prof) {
            // without a light winner the winning family can only lose heavy sets
            prop_assert!(weighted <= unweighted + 1e-12);
        }
    }
}
