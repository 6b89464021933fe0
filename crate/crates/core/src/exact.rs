//! Exact rational twins of the kernels, used as oracles at small scale.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernels::{ProcessSolver, ProcessValue};

/// Largest `k + l` and `m` accepted by the closed-form exact kernels.
pub const FORMULA_ORACLE_SCALE: u64 = 32;
/// Largest `k + l` and `m` accepted by the sequential-process oracle.
pub const PROCESS_ORACLE_SCALE: u64 = 12;

/// A probability held as a reduced fraction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactProbability(BigRational);

impl ExactProbability {
    pub fn new(value: BigRational) -> Result<Self> {
        if value < BigRational::zero() || value > BigRational::one() {
            return Err(Error::InvalidProbability(value.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self(value))
    }

    pub fn from_ratio(numerator: u64, denominator: u64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::InvalidProbability(f64::NAN));
        }
        Self::new(BigRational::new(numerator.into(), denominator.into()))
    }

    pub fn half() -> Self {
        Self(BigRational::new(1.into(), 2.into()))
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_rational(&self) -> &BigRational {
        &self.0
    }

    pub fn into_rational(self) -> BigRational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// `1 - self`.
    pub fn complement(&self) -> Self {
        Self(BigRational::one() - &self.0)
    }
}

impl fmt::Display for ExactProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for ExactProbability {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl ProcessValue for BigRational {
    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn accumulate(acc: &mut Self, weight: &Self, value: &Self) {
        *acc += weight * value;
    }
}

/// Twice `g(a, b)`, so ties stay integral.
fn doubled_indicator(a: u64, b: u64) -> u64 {
    use std::cmp::Ordering::*;
    match a.cmp(&b) {
        Greater => 2,
        Equal => 1,
        Less => 0,
    }
}

fn check_scale(k: u64, l: u64, m: u64, scale: u64) -> Result<()> {
    if k + l > scale || m > scale {
        return Err(Error::OracleScale { k, l, m });
    }
    Ok(())
}

/// Σ_h C(m,h) k^h l^(m-h) · 2g(...) over 2 (k+l)^m, all in integers.
fn exact_delegation_sum(k: u64, l: u64, m: u64, tally: impl Fn(u64, u64) -> u64) -> ExactProbability {
    if k == 0 && l == 0 {
        return ExactProbability::half();
    }
    let kb = BigInt::from(k);
    let lb = BigInt::from(l);
    let mut numerator = BigInt::zero();
    let mut choose = BigInt::one();
    for h in 0..=m {
        if h > 0 {
            choose = choose * BigInt::from(m - h + 1) / BigInt::from(h);
        }
        let weight = tally(k + h, l + m - h);
        if weight > 0 {
            numerator += &choose * num_traits::pow(kb.clone(), h as usize)
                * num_traits::pow(lb.clone(), (m - h) as usize)
                * BigInt::from(weight);
        }
    }
    let denominator = BigInt::from(2) * num_traits::pow(BigInt::from(k + l), m as usize);
    ExactProbability(BigRational::new(numerator, denominator))
}

/// Exact `G(k, l, m)`; requires `k + l ≤ 32` and `m ≤ 32`.
pub fn free_delegation_kernel_exact(k: u64, l: u64, m: u64) -> Result<ExactProbability> {
    check_scale(k, l, m, FORMULA_ORACLE_SCALE)?;
    Ok(exact_delegation_sum(k, l, m, doubled_indicator))
}

/// Exact closed-form `G_c(k, l, m)`; same scale limits as the free kernel.
pub fn capped_delegation_kernel_exact(k: u64, l: u64, m: u64, c: u64) -> Result<ExactProbability> {
    if c == 0 {
        return Err(Error::InvalidCap);
    }
    check_scale(k, l, m, FORMULA_ORACLE_SCALE)?;
    Ok(exact_delegation_sum(k, l, m, |a, b| doubled_indicator(a.min(c * k), b.min(c * l))))
}

/// Exact win probability under the sequential capped process: each vote goes
/// to a uniformly random voter still below the cap until the votes run out or
/// everyone is capped; only then are leftovers discarded. Requires
/// `k + l ≤ 12` and `m ≤ 12`.
pub fn capped_process_kernel_exact(k: u64, l: u64, m: u64, c: u64) -> Result<ExactProbability> {
    if c == 0 {
        return Err(Error::InvalidCap);
    }
    check_scale(k, l, m, PROCESS_ORACLE_SCALE)?;
    let value: BigRational = ProcessSolver::new(c).win_probability(k, l, m);
    Ok(ExactProbability(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{majority_indicator, free_delegation_kernel};

    fn frac(n: u64, d: u64) -> ExactProbability {
        ExactProbability::from_ratio(n, d).unwrap()
    }

    #[test]
    fn known_free_values() {
        assert_eq!(free_delegation_kernel_exact(1, 2, 1).unwrap(), frac(1, 6));
        assert_eq!(free_delegation_kernel_exact(2, 1, 1).unwrap(), frac(5, 6));
        assert_eq!(free_delegation_kernel_exact(0, 0, 7).unwrap(), frac(1, 2));
    }

    #[test]
    fn known_capped_values() {
        assert_eq!(capped_delegation_kernel_exact(2, 1, 3, 2).unwrap(), frac(53, 54));
        assert_eq!(capped_delegation_kernel_exact(1, 1, 2, 2).unwrap(), frac(1, 2));
        assert_eq!(capped_process_kernel_exact(2, 1, 3, 2).unwrap(), frac(1, 1));
    }

    #[test]
    fn process_symmetric_and_cap_one() {
        for l in 0..=4 {
            for m in 0..=4 {
                for c in 1..=3 {
                    assert_eq!(capped_process_kernel_exact(l, l, m, c).unwrap(), frac(1, 2));
                }
            }
        }
        for k in 0..=5 {
            for l in 0..=5 {
                let v = capped_process_kernel_exact(k, l, 5, 1).unwrap();
                assert_eq!(v.to_f64(), majority_indicator(k, l));
            }
        }
    }

    #[test]
    fn process_by_brute_force_paths() {
        // independent route: expand every voter choice of the literal retry loop
        // is infinite, so enumerate placements among uncapped voters per step
        fn walk(votes: &mut Vec<u64>, is_a: &[bool], m: u64, c: u64) -> BigRational {
            let uncapped: Vec<usize> = (0..votes.len()).filter(|&j| votes[j] < c).collect();
            if m == 0 || uncapped.is_empty() {
                let a: u64 = votes.iter().zip(is_a).filter(|(_, &x)| x).map(|(v, _)| v).sum();
                let b: u64 = votes.iter().zip(is_a).filter(|(_, &x)| !x).map(|(v, _)| v).sum();
                return BigRational::new(doubled_indicator(a, b).into(), 2.into());
            }
            let mut acc = BigRational::zero();
            for &j in &uncapped {
                votes[j] += 1;
                acc += walk(votes, is_a, m - 1, c);
                votes[j] -= 1;
            }
            acc / BigRational::from_integer((uncapped.len() as u64).into())
        }
        for (k, l, m, c) in [(2, 1, 3, 2), (3, 2, 4, 3), (1, 3, 5, 2), (2, 2, 3, 4), (4, 1, 4, 2)] {
            let is_a: Vec<bool> = (0..k + l).map(|j| j < k).collect();
            let mut votes = vec![1u64; (k + l) as usize];
            let oracle = walk(&mut votes, &is_a, m, c);
            let dp = capped_process_kernel_exact(k, l, m, c).unwrap();
            assert_eq!(dp.as_rational(), &oracle, "{k} {l} {m} {c}");
        }
    }

    #[test]
    fn float_and_exact_agree() {
        for k in 0..=6 {
            for l in 0..=6 {
                for m in 0..=6 {
                    let e = free_delegation_kernel_exact(k, l, m).unwrap().to_f64();
                    assert!((e - free_delegation_kernel(k, l, m)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn scale_limits() {
        assert!(free_delegation_kernel_exact(25, 8, 1).is_err());
        assert!(free_delegation_kernel_exact(1, 1, 33).is_err());
        assert!(capped_delegation_kernel_exact(20, 13, 1, 2).is_err());
        assert!(capped_process_kernel_exact(7, 6, 2, 2).is_err());
        assert!(capped_process_kernel_exact(2, 2, 13, 2).is_err());
        assert_eq!(capped_process_kernel_exact(1, 1, 1, 0), Err(Error::InvalidCap));
    }

    #[test]
    fn exact_probability_invariants() {
        assert!(ExactProbability::from_ratio(3, 2).is_err());
        assert!(ExactProbability::from_ratio(1, 0).is_err());
        let p = frac(2, 4);
        assert_eq!(p.to_string(), "1/2");
        assert_eq!(p.complement(), frac(1, 2));
    }
}
