//! Win-probability kernels for fixed party sizes.
//!
//! `k` A-voters and `l` B-voters each hold one vote; `m` delegated votes are
//! then handed out uniformly at random. The kernels give the probability that
//! the A-party ends with more votes, with a tie counted as one half.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::binomial_pmf_ratio;

/// A concrete election: party sizes, delegators and an optional vote cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TallyInstance {
    pub k: u64,
    pub l: u64,
    pub m: u64,
    cap: Option<u64>,
}

impl TallyInstance {
    pub fn new(k: u64, l: u64, m: u64, cap: Option<u64>) -> Result<Self> {
        if cap == Some(0) {
            return Err(Error::InvalidCap);
        }
        Ok(Self { k, l, m, cap })
    }

    pub fn cap(&self) -> Option<u64> {
        self.cap
    }

    pub fn voters(&self) -> u64 {
        self.k + self.l
    }

    /// Kernel under free delegation, ignoring any cap.
    pub fn free(&self) -> f64 {
        free_delegation_kernel(self.k, self.l, self.m)
    }

    /// Closed-form capped kernel; without a cap this is the free kernel.
    pub fn capped(&self) -> f64 {
        match self.cap {
            Some(c) => capped_delegation_kernel(self.k, self.l, self.m, c),
            None => self.free(),
        }
    }
}

/// `g(k, l)`: 1 if `k > l`, 1/2 on a tie, 0 otherwise.
pub fn majority_indicator(k: u64, l: u64) -> f64 {
    use std::cmp::Ordering::*;
    match k.cmp(&l) {
        Greater => 1.0,
        Equal => 0.5,
        Less => 0.0,
    }
}

/// `G(k, l, m)`: A receives `h ~ Bin(m, k/(k+l))` of the delegated votes.
pub fn free_delegation_kernel(k: u64, l: u64, m: u64) -> f64 {
    delegation_sum(k, l, m, majority_indicator)
}

/// `G_c(k, l, m)`: as the free kernel, but each party total is clipped at
/// `c` times its size and the overflow is discarded.
pub fn capped_delegation_kernel(k: u64, l: u64, m: u64, c: u64) -> f64 {
    assert!(c >= 1, "cap must be at least 1");
    delegation_sum(k, l, m, |a, b| majority_indicator(a.min(c * k), b.min(c * l)))
}

fn delegation_sum(k: u64, l: u64, m: u64, tally: impl Fn(u64, u64) -> f64) -> f64 {
    if k == 0 && l == 0 {
        return 0.5;
    }
    let total = k + l;
    (0..=m)
        .map(|h| {
            let outcome = tally(k + h, l + m - h);
            if outcome == 0.0 {
                0.0
            } else {
                binomial_pmf_ratio(m, h, k, total) * outcome
            }
        })
        .sum()
}

/// Win probability for A when delegated votes are placed one at a time on a
/// uniformly random voter who is still below the cap, stopping once votes run
/// out or every voter is capped. Float twin of
/// [`crate::exact::capped_process_kernel_exact`].
pub fn capped_process_kernel(k: u64, l: u64, m: u64, c: u64) -> f64 {
    assert!(c >= 1, "cap must be at least 1");
    ProcessSolver::<f64>::new(c).win_probability(k, l, m)
}

/// Arithmetic needed by the sequential-process recursion.
pub(crate) trait ProcessValue: Clone {
    fn ratio(num: u64, den: u64) -> Self;
    fn accumulate(acc: &mut Self, weight: &Self, value: &Self);
}

impl ProcessValue for f64 {
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn accumulate(acc: &mut Self, weight: &Self, value: &Self) {
        *acc += weight * value;
    }
}

/// Per-party occupancy: `levels[v]` voters currently hold `v + 1` votes.
type Levels = Vec<u32>;

/// Recursion over the exchangeable state of the sequential process. Voters
/// of one party at the same vote level are interchangeable, so a state is the
/// level histogram of each party plus the votes still to place.
pub(crate) struct ProcessSolver<V> {
    cap: u64,
    memo: HashMap<(Levels, Levels, u64), V>,
}

impl<V: ProcessValue> ProcessSolver<V> {
    pub(crate) fn new(cap: u64) -> Self {
        Self { cap, memo: HashMap::new() }
    }

    pub(crate) fn win_probability(&mut self, k: u64, l: u64, m: u64) -> V {
        let mut a = vec![0u32; self.cap as usize];
        let mut b = vec![0u32; self.cap as usize];
        a[0] = k as u32;
        b[0] = l as u32;
        self.solve(a, b, m)
    }

    fn solve(&mut self, a: Levels, b: Levels, m: u64) -> V {
        let uncapped = uncapped_count(&a) + uncapped_count(&b);
        if m == 0 || uncapped == 0 {
            return final_tally(&a, &b);
        }
        let key = (a, b, m);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let (a, b, m) = key;
        let mut acc = V::ratio(0, 1);
        for party in 0..2 {
            let levels = if party == 0 { &a } else { &b };
            for level in 0..levels.len() - 1 {
                let count = levels[level];
                if count == 0 {
                    continue;
                }
                let mut next = levels.clone();
                next[level] -= 1;
                next[level + 1] += 1;
                let value = if party == 0 {
                    self.solve(next, b.clone(), m - 1)
                } else {
                    self.solve(a.clone(), next, m - 1)
                };
                V::accumulate(&mut acc, &V::ratio(u64::from(count), uncapped), &value);
            }
        }
        self.memo.insert((a, b, m), acc.clone());
        acc
    }
}

fn uncapped_count(levels: &[u32]) -> u64 {
    levels[..levels.len() - 1].iter().map(|&c| u64::from(c)).sum()
}

fn votes(levels: &[u32]) -> u64 {
    levels.iter().enumerate().map(|(v, &c)| (v as u64 + 1) * u64::from(c)).sum()
}

fn final_tally<V: ProcessValue>(a: &[u32], b: &[u32]) -> V {
    use std::cmp::Ordering::*;
    match votes(a).cmp(&votes(b)) {
        Greater => V::ratio(1, 1),
        Equal => V::ratio(1, 2),
        Less => V::ratio(0, 1),
    }
}
