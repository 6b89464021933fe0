//! Seeded Monte Carlo elections.
//!
//! Trial `t` draws from its own ChaCha8 stream (`seed`, stream `t`), so the
//! result does not depend on how trials are split across threads. Outcomes
//! are counted in half-wins: 2 for an A win, 1 for a tie, 0 for a loss.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{DistributionKind, VoterCountDistribution};
use crate::engine::DelegationPolicy;
use crate::error::{Error, Result};
use crate::exact::{free_delegation_kernel_exact, ExactProbability};
use crate::kernels::free_delegation_kernel;

const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub dist: VoterCountDistribution,
    pub p: f64,
    pub policy: DelegationPolicy,
    pub trials: u64,
    pub seed: u64,
}

impl SimulationConfig {
    fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidProbability(self.p));
        }
        validate_trials(self.trials)?;
        self.policy.validate()
    }
}

fn validate_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidSimulation("trials must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub estimate: f64,
    pub std_error: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub trials: u64,
    pub seed: u64,
    /// Ties count one half.
    pub wins: f64,
}

impl SimulationReport {
    fn from_half_wins(half_wins: u64, trials: u64, seed: u64) -> Self {
        let wins = half_wins as f64 / 2.0;
        let estimate = wins / trials as f64;
        let std_error = (estimate * (1.0 - estimate) / trials as f64).sqrt();
        Self {
            estimate,
            std_error,
            ci95_low: (estimate - Z_95 * std_error).max(0.0),
            ci95_high: (estimate + Z_95 * std_error).min(1.0),
            trials,
            seed,
            wins,
        }
    }

    /// Whether `value` lies within `sigmas` standard errors of the estimate.
    pub fn covers(&self, value: f64, sigmas: f64) -> bool {
        (self.estimate - value).abs() <= sigmas * self.std_error + 1e-12
    }

    pub fn ci_contains(&self, value: f64) -> bool {
        self.ci95_low <= value && value <= self.ci95_high
    }
}

/// How free delegation places the `m` votes in a simulated trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FreeSampler {
    /// Each vote picks one of the `i` voters uniformly.
    #[default]
    PerVoter,
    /// The A-party receives `Bin(m, k/i)` votes in one draw.
    PartyBinomial,
}

fn base_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn trial_rng(base: &ChaCha8Rng, trial: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial);
    rng.set_word_pos(0);
    rng
}

fn run_trials(trials: u64, seed: u64, trial: impl Fn(&mut ChaCha8Rng) -> u64 + Sync) -> SimulationReport {
    let base = base_rng(seed);
    let half_wins: u64 = (0..trials)
        .into_par_iter()
        .map(|t| trial(&mut trial_rng(&base, t)))
        .sum();
    SimulationReport::from_half_wins(half_wins, trials, seed)
}

fn half_units(a: u64, b: u64) -> u64 {
    use std::cmp::Ordering::*;
    match a.cmp(&b) {
        Greater => 2,
        Equal => 1,
        Less => 0,
    }
}

enum CountSampler {
    Poisson(Poisson<f64>),
    Table(Vec<u64>, WeightedIndex<f64>),
    Fixed(u64),
}

impl CountSampler {
    fn new(dist: &VoterCountDistribution) -> Result<Self> {
        Ok(match dist.kind() {
            DistributionKind::Poisson { mean } => Self::Poisson(
                Poisson::new(*mean).map_err(|e| Error::InvalidDistribution(e.to_string()))?,
            ),
            DistributionKind::Explicit(entries) => {
                let counts = entries.iter().map(|(c, _)| *c).collect();
                let index = WeightedIndex::new(entries.iter().map(|(_, m)| *m))
                    .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                Self::Table(counts, index)
            }
            DistributionKind::PointMass(c) => Self::Fixed(*c),
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            Self::Poisson(d) => d.sample(rng) as u64,
            Self::Table(counts, index) => counts[index.sample(rng)],
            Self::Fixed(c) => *c,
        }
    }
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial parameters").sample(rng)
}

/// Votes landing on the first `k` of `i` voters when `m` votes each pick a
/// voter uniformly.
fn uniform_placements(rng: &mut ChaCha8Rng, k: u64, i: u64, m: u64) -> u64 {
    (0..m).filter(|_| rng.gen_range(0..i) < k).count() as u64
}

/// The sequential capped process exactly as specified: draw a voter among
/// all `i`, skip if capped, until the votes run out or everyone is capped.
pub fn capped_process_tally(rng: &mut impl Rng, k: u64, l: u64, mut m: u64, c: u64) -> (u64, u64) {
    let i = (k + l) as usize;
    let mut votes = vec![1u64; i];
    // voters already at the cap (all of them when c = 1) count as capped
    let mut reached_cap = if c <= 1 { i } else { 0 };
    while m != 0 && reached_cap != i {
        let j = rng.gen_range(0..i);
        if votes[j] < c {
            votes[j] += 1;
            m -= 1;
            if votes[j] == c {
                reached_cap += 1;
            }
        }
    }
    let a = votes[..k as usize].iter().sum();
    let b = votes[k as usize..].iter().sum();
    (a, b)
}

/// Outcome in half-wins of one election with fixed party sizes.
fn tally_trial(rng: &mut ChaCha8Rng, k: u64, l: u64, policy: DelegationPolicy, sampler: FreeSampler) -> u64 {
    let i = k + l;
    if i == 0 {
        return 1;
    }
    match policy {
        DelegationPolicy::Conventional => half_units(k, l),
        DelegationPolicy::Free { m } => {
            let h = match sampler {
                FreeSampler::PerVoter => uniform_placements(rng, k, i, m),
                FreeSampler::PartyBinomial => binomial(rng, m, k as f64 / i as f64),
            };
            half_units(k + h, l + m - h)
        }
        DelegationPolicy::CappedFormula { m, c } => {
            let h = binomial(rng, m, k as f64 / i as f64);
            half_units((k + h).min(c * k), (l + m - h).min(c * l))
        }
        DelegationPolicy::CappedProcess { m, c } => {
            let (a, b) = capped_process_tally(rng, k, l, m, c);
            half_units(a, b)
        }
    }
}

/// Simulates full elections: voter count from the distribution, each voter an
/// A-voter with probability `p`, then the policy's delegation step.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationReport> {
    simulate_with(config, FreeSampler::default())
}

pub fn simulate_with(config: &SimulationConfig, sampler: FreeSampler) -> Result<SimulationReport> {
    config.validate()?;
    let counts = CountSampler::new(&config.dist)?;
    let (p, policy) = (config.p, config.policy);
    Ok(run_trials(config.trials, config.seed, |rng| {
        let i = counts.sample(rng);
        let k = binomial(rng, i, p);
        tally_trial(rng, k, i - k, policy, sampler)
    }))
}

/// Simulates the delegation step alone, with party sizes held at `(k, l)`.
/// This is the election conditioned on exactly `k` A-voters and `l` B-voters.
pub fn simulate_tally(
    k: u64,
    l: u64,
    policy: DelegationPolicy,
    trials: u64,
    seed: u64,
    sampler: FreeSampler,
) -> Result<SimulationReport> {
    validate_trials(trials)?;
    policy.validate()?;
    Ok(run_trials(trials, seed, |rng| tally_trial(rng, k, l, policy, sampler)))
}

/// Joint law of the two party sizes, allowing them to be correlated.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCountDistribution {
    entries: Vec<(u64, u64, BigRational)>,
}

impl JointCountDistribution {
    /// Masses are taken as exact binary fractions and must sum to 1 within
    /// 1e-12.
    pub fn new(entries: impl IntoIterator<Item = (u64, u64, f64)>) -> Result<Self> {
        let entries = entries
            .into_iter()
            .map(|(a, b, mass)| {
                if !(mass.is_finite() && (0.0..=1.0).contains(&mass)) {
                    return Err(Error::InvalidDistribution(format!("joint mass {mass} not in [0, 1]")));
                }
                let exact = BigRational::from_f64(mass).expect("finite mass");
                Ok((a, b, exact))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::checked(entries, 1e-12)
    }

    /// Masses given as `numerator / denominator`; they must sum to exactly 1.
    pub fn from_ratios(entries: impl IntoIterator<Item = (u64, u64, u64, u64)>) -> Result<Self> {
        let entries = entries
            .into_iter()
            .map(|(a, b, num, den)| {
                if den == 0 || num > den {
                    return Err(Error::InvalidDistribution(format!("joint mass {num}/{den} not in [0, 1]")));
                }
                Ok((a, b, BigRational::new(num.into(), den.into())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::checked(entries, 0.0)
    }

    fn checked(entries: Vec<(u64, u64, BigRational)>, tol: f64) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("joint distribution has no entries".into()));
        }
        let total: BigRational = entries.iter().map(|(_, _, m)| m.clone()).sum();
        let gap = (total - BigRational::from_integer(BigInt::from(1))).abs();
        let gap = num_traits::ToPrimitive::to_f64(&gap).unwrap_or(f64::INFINITY);
        if gap > tol {
            return Err(Error::InvalidDistribution(format!("joint masses miss 1 by {gap}")));
        }
        Ok(Self { entries })
    }

    /// Four A-voters w.p. 3/5 or one A-voter w.p. 2/5, always two B-voters.
    pub fn correlated_counterexample() -> Self {
        Self::from_ratios([(4, 2, 3, 5), (1, 2, 2, 5)]).expect("valid masses")
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, u64, f64)> + '_ {
        self.entries
            .iter()
            .map(|(a, b, m)| (*a, *b, num_traits::ToPrimitive::to_f64(m).unwrap_or(f64::NAN)))
    }

    /// `Σ J(a, b) G(a, b, m)` in floating point.
    pub fn win_probability(&self, m: u64) -> f64 {
        self.entries().map(|(a, b, mass)| mass * free_delegation_kernel(a, b, m)).sum()
    }

    /// `Σ J(a, b) G(a, b, m)` in exact arithmetic; each `(a, b, m)` must be
    /// within the exact-kernel scale.
    pub fn win_probability_exact(&self, m: u64) -> Result<ExactProbability> {
        let mut total = BigRational::zero();
        for (a, b, mass) in &self.entries {
            total += mass * free_delegation_kernel_exact(*a, *b, m)?.into_rational();
        }
        ExactProbability::new(total)
    }
}

/// Draws `(a, b)` from the joint law, spreads `m` votes uniformly over the
/// `a + b` voters and tallies.
pub fn simulate_joint(joint: &JointCountDistribution, m: u64, trials: u64, seed: u64) -> Result<SimulationReport> {
    validate_trials(trials)?;
    let pairs: Vec<(u64, u64)> = joint.entries().map(|(a, b, _)| (a, b)).collect();
    let index = WeightedIndex::new(joint.entries().map(|(_, _, w)| w))
        .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    Ok(run_trials(trials, seed, |rng| {
        let (a, b) = pairs[index.sample(rng)];
        tally_trial(rng, a, b, DelegationPolicy::Free { m }, FreeSampler::PerVoter)
    }))
}

/// Three signal-receiving voters and two delegators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JuryComparison {
    pub p: f64,
    /// Majority of the three voters, delegators abstaining.
    pub abstain: f64,
    /// Both delegated votes placed uniformly and independently, by enumeration.
    pub delegate: f64,
    /// Share of placements in which one voter receives both delegated votes.
    pub concentrated_share: f64,
    /// `8/9 · abstain + 1/9 · p`, which weights the concentrated case by 1/9.
    pub one_ninth_mix: f64,
}

/// Enumerates all 8 signal profiles of the three voters and all 9 placements
/// of the two delegated votes, each placement weighted 1/9.
pub fn jury_example(p: f64) -> Result<JuryComparison> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let abstain = p.powi(3) + 3.0 * p * p * (1.0 - p);
    let mut delegate = 0.0;
    let mut concentrated = 0u32;
    for first in 0..3 {
        for second in 0..3 {
            let mut weight = [1u32; 3];
            weight[first] += 1;
            weight[second] += 1;
            if first == second {
                concentrated += 1;
            }
            for profile in 0u32..8 {
                let correct = profile.count_ones() as i32;
                let prob = p.powi(correct) * (1.0 - p).powi(3 - correct);
                let for_correct: u32 = (0..3).filter(|v| profile >> v & 1 == 1).map(|v| weight[v]).sum();
                let outcome = half_units(u64::from(for_correct), u64::from(5 - for_correct));
                delegate += prob * outcome as f64 / 2.0 / 9.0;
            }
        }
    }
    Ok(JuryComparison {
        p,
        abstain,
        delegate,
        concentrated_share: f64::from(concentrated) / 9.0,
        one_ninth_mix: 8.0 / 9.0 * abstain + p / 9.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(policy: DelegationPolicy, trials: u64, seed: u64) -> SimulationConfig {
        SimulationConfig {
            dist: VoterCountDistribution::poisson(8.0).unwrap(),
            p: 0.6,
            policy,
            trials,
            seed,
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let c = config(DelegationPolicy::CappedProcess { m: 4, c: 2 }, 20_000, 99);
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
        let other = SimulationConfig { seed: 100, ..c.clone() };
        assert_ne!(simulate(&c).unwrap().wins, simulate(&other).unwrap().wins);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let c = config(DelegationPolicy::Free { m: 5 }, 5_000, 3);
        let parallel = simulate(&c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| simulate(&c).unwrap());
        assert_eq!(parallel, serial);
    }

    #[test]
    fn single_trial_outcomes() {
        for seed in 0..20 {
            let r = simulate(&config(DelegationPolicy::Free { m: 3 }, 1, seed)).unwrap();
            assert!([0.0, 0.5, 1.0].contains(&r.estimate));
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(simulate(&config(DelegationPolicy::Conventional, 0, 1)).is_err());
        let mut c = config(DelegationPolicy::Conventional, 10, 1);
        c.p = 1.0;
        assert!(simulate(&c).is_err());
        assert!(simulate_tally(1, 1, DelegationPolicy::CappedFormula { m: 1, c: 0 }, 10, 0, FreeSampler::PerVoter).is_err());
    }

    #[test]
    fn empty_electorate_is_a_coin() {
        let c = SimulationConfig {
            dist: VoterCountDistribution::point(0),
            p: 0.7,
            policy: DelegationPolicy::Free { m: 4 },
            trials: 100,
            seed: 1,
        };
        assert_eq!(simulate(&c).unwrap().estimate, 0.5);
    }

    #[test]
    fn capped_process_respects_cap_and_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (a, b) = capped_process_tally(&mut rng, 3, 2, 4, 3);
            assert_eq!(a + b, 9);
            assert!(a <= 9 && b <= 6);
        }
        // every voter saturates before the votes run out
        assert_eq!(capped_process_tally(&mut rng, 2, 1, 10, 2), (4, 2));
        assert_eq!(capped_process_tally(&mut rng, 2, 1, 10, 1), (2, 1));
    }

    #[test]
    fn joint_validation() {
        assert!(JointCountDistribution::new([(1, 0, 0.5)]).is_err());
        assert!(JointCountDistribution::from_ratios([(1, 0, 1, 2), (0, 1, 1, 3)]).is_err());
        assert!(JointCountDistribution::new(Vec::<(u64, u64, f64)>::new()).is_err());
        let unopposed = JointCountDistribution::new([(1, 0, 1.0)]).unwrap();
        assert_eq!(simulate_joint(&unopposed, 3, 1000, 2).unwrap().estimate, 1.0);
        assert_eq!(unopposed.win_probability(3), 1.0);
    }

    #[test]
    fn jury_enumeration() {
        let j = jury_example(0.6).unwrap();
        assert!((j.abstain - 0.648).abs() < 1e-15);
        assert!((j.concentrated_share - 1.0 / 3.0).abs() < 1e-15);
        // concentrated placements make one voter decisive; the rest keep majority
        assert!((j.delegate - (2.0 / 3.0 * 0.648 + 0.6 / 3.0)).abs() < 1e-15);
        assert!((j.one_ninth_mix - 0.642_666_666_666_666_7).abs() < 1e-15);
        for p in [0.55, 0.6, 0.75, 0.9] {
            let j = jury_example(p).unwrap();
            assert!(j.delegate < j.abstain, "{p}");
        }
    }
}
