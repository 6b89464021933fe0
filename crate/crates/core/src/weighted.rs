//! Weighted majority over independent signals, by subset enumeration.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::binomial_pmf;

/// Default bound on the number of voters enumerated (2^20 subsets).
pub const ENUMERATION_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedProfile {
    weights: Vec<f64>,
}

impl WeightedProfile {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("at least one voter is required".into()));
        }
        if weights.len() > ENUMERATION_CAP {
            return Err(Error::EnumerationCap { voters: weights.len(), cap: ENUMERATION_CAP });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {w} is not a non-negative number")));
        }
        Ok(Self { weights })
    }

    pub fn equal(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn voters(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `w(S)` for every subset bitmask.
    fn subset_weights(&self) -> Vec<f64> {
        let n = self.voters();
        let mut sums = vec![0.0; 1 << n];
        for mask in 1usize..1 << n {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = sums[mask & (mask - 1)] + self.weights[low];
        }
        sums
    }
}

/// Probability that a simple majority of `n` voters is correct; ties at
/// `n/2` count one half.
pub fn unweighted_majority_prob(n: u64, p: f64) -> Result<f64> {
    check_closed_probability(p)?;
    Ok((0..=n)
        .map(|s| {
            let outcome = match (2 * s).cmp(&n) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => return 0.0,
            };
            binomial_pmf(n, s, p) * outcome
        })
        .sum())
}

fn check_closed_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

/// Probability that the correct-signal set `S` outweighs its complement,
/// summing `p^|S| (1-p)^(n-|S|)` over all subsets; `w(S) = w(N∖S)` counts
/// one half.
pub fn weighted_majority_prob(profile: &WeightedProfile, p: f64) -> Result<f64> {
    check_closed_probability(p)?;
    let n = profile.voters();
    let full = (1usize << n) - 1;
    let sums = profile.subset_weights();
    let size_mass: Vec<f64> = (0..=n as i32).map(|s| p.powi(s) * (1.0 - p).powi(n as i32 - s)).collect();
    let mut by_size = vec![0.0; n + 1];
    for mask in 0..=full {
        let (mine, theirs) = (sums[mask], sums[full ^ mask]);
        let share = if mine > theirs {
            1.0
        } else if mine == theirs {
            0.5
        } else {
            continue;
        };
        by_size[mask.count_ones() as usize] += share;
    }
    Ok(by_size.iter().zip(&size_mass).map(|(count, mass)| count * mass).sum())
}

/// Whether some subset with fewer than half the voters strictly outweighs
/// its complement.
pub fn has_light_winning_subset(profile: &WeightedProfile) -> bool {
    let n = profile.voters();
    let full = (1usize << n) - 1;
    let sums = profile.subset_weights();
    (0..=full).any(|mask| 2 * (mask.count_ones() as usize) < n && sums[mask] > sums[full ^ mask])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceSample {
    pub weights: Vec<f64>,
    pub weighted: f64,
    /// `unweighted - weighted`.
    pub gap: f64,
    pub light_winning_subset: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub n: usize,
    pub p: f64,
    pub unweighted: f64,
    pub samples: Vec<DominanceSample>,
    /// Samples with `weighted > unweighted + 1e-12`.
    pub violations: usize,
    pub max_gap: f64,
    pub min_gap: f64,
}

/// Compares each weight vector against equal weights.
pub fn weight_dominance_check(n: usize, p: f64, weight_samples: &[Vec<f64>]) -> Result<DominanceReport> {
    let unweighted = unweighted_majority_prob(n as u64, p)?;
    let samples = weight_samples
        .iter()
        .map(|weights| {
            if weights.len() != n {
                return Err(Error::InvalidWeights(format!(
                    "expected {n} weights, got {}",
                    weights.len()
                )));
            }
            let profile = WeightedProfile::new(weights.clone())?;
            let weighted = weighted_majority_prob(&profile, p)?;
            Ok(DominanceSample {
                weights: weights.clone(),
                weighted,
                gap: unweighted - weighted,
                light_winning_subset: has_light_winning_subset(&profile),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = samples.iter().filter(|s| s.gap < -1e-12).count();
    let max_gap = samples.iter().map(|s| s.gap).fold(f64::NEG_INFINITY, f64::max);
    let min_gap = samples.iter().map(|s| s.gap).fold(f64::INFINITY, f64::min);
    Ok(DominanceReport { n, p, unweighted, samples, violations, max_gap, min_gap })
}

/// `count` weight vectors of length `n` with i.i.d. Uniform[0, 1) entries.
pub fn random_weight_vectors(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0, 1.0);
    (0..count).map(|_| (0..n).map(|_| unit.sample(&mut rng)).collect()).collect()
}
