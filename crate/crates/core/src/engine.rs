//! Outer sums over the voter count and voter types.
//!
//! Every policy shares the same shape,
//! `Σ_i F(i) Σ_k C(i,k) p^k (1-p)^(i-k) K(k, i-k)`, and differs only in the
//! kernel `K`. The outer sum is cut at the budget's truncation index and the
//! discarded tail mass is reported as the error bound.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{TruncationBudget, VoterCountDistribution};
use crate::error::{Error, Result};
use crate::kernels::{
    capped_delegation_kernel, capped_process_kernel, free_delegation_kernel, majority_indicator,
};
use crate::special::binomial_pmf;

/// Largest number of delegators the engine evaluates under the sequential
/// capped process; beyond this use the simulator.
pub const PROCESS_ENGINE_MAX_DELEGATORS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DelegationPolicy {
    Conventional,
    Free { m: u64 },
    CappedFormula { m: u64, c: u64 },
    CappedProcess { m: u64, c: u64 },
}

impl DelegationPolicy {
    pub fn delegators(&self) -> u64 {
        match *self {
            Self::Conventional => 0,
            Self::Free { m } | Self::CappedFormula { m, .. } | Self::CappedProcess { m, .. } => m,
        }
    }

    pub fn cap(&self) -> Option<u64> {
        match *self {
            Self::CappedFormula { c, .. } | Self::CappedProcess { c, .. } => Some(c),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cap() == Some(0) {
            return Err(Error::InvalidCap);
        }
        Ok(())
    }

    /// Win probability for fixed party sizes `k` and `l`.
    pub fn kernel(&self, k: u64, l: u64) -> f64 {
        match *self {
            Self::Conventional => majority_indicator(k, l),
            Self::Free { m } => free_delegation_kernel(k, l, m),
            Self::CappedFormula { m, c } => capped_delegation_kernel(k, l, m, c),
            Self::CappedProcess { m, c } => capped_process_kernel(k, l, m, c),
        }
    }
}

impl fmt::Display for DelegationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Conventional => write!(f, "conv"),
            Self::Free { m } => write!(f, "free:{m}"),
            Self::CappedFormula { m, c } => write!(f, "capped:{m},{c}"),
            Self::CappedProcess { m, c } => write!(f, "capped-process:{m},{c}"),
        }
    }
}

impl FromStr for DelegationPolicy {
    type Err = Error;

    /// Parses `conv`, `free:<m>`, `capped:<m>,<c>` or `capped-process:<m>,<c>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPolicy(s.to_string());
        let (head, body) = match s.trim().split_once(':') {
            Some((h, b)) => (h.trim(), Some(b.trim())),
            None => (s.trim(), None),
        };
        let int = |v: &str| v.trim().parse::<u64>().map_err(|_| bad());
        let pair = |body: Option<&str>| -> Result<(u64, u64)> {
            let (m, c) = body.and_then(|b| b.split_once(',')).ok_or_else(bad)?;
            Ok((int(m)?, int(c)?))
        };
        let policy = match (head, body) {
            ("conv" | "conventional", None) => Self::Conventional,
            ("free", Some(b)) => Self::Free { m: int(b)? },
            ("capped", b) => {
                let (m, c) = pair(b)?;
                Self::CappedFormula { m, c }
            }
            ("capped-process", b) => {
                let (m, c) = pair(b)?;
                Self::CappedProcess { m, c }
            }
            _ => return Err(bad()),
        };
        policy.validate().map_err(|_| bad())?;
        Ok(policy)
    }
}

/// A computed win probability with its truncation certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinProbability {
    pub value: f64,
    /// Upper bound on `|value - exact|` from the discarded voter-count tail.
    pub truncation_error: f64,
    pub truncation_index: u64,
    pub policy: DelegationPolicy,
    pub p: f64,
    pub dist: VoterCountDistribution,
}

impl WinProbability {
    /// `[value - err, value + err]` clamped to `[0, 1]`.
    pub fn bounds(&self) -> (f64, f64) {
        (
            (self.value - self.truncation_error).max(0.0),
            (self.value + self.truncation_error).min(1.0),
        )
    }
}

fn check_open_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

type RowCache = HashMap<(DelegationPolicy, u64), Arc<Vec<f64>>>;

/// Evaluator that memoizes kernel rows `K(k, i-k), k = 0..=i` per policy and
/// electorate size, so grids over `p` or over distributions reuse them.
#[derive(Debug, Default)]
pub struct Engine {
    budget: TruncationBudget,
    rows: Mutex<RowCache>,
}

impl Engine {
    pub fn new(budget: TruncationBudget) -> Self {
        Self { budget, rows: Mutex::new(HashMap::new()) }
    }

    pub fn budget(&self) -> &TruncationBudget {
        &self.budget
    }

    fn kernel_row(&self, policy: DelegationPolicy, i: u64) -> Arc<Vec<f64>> {
        if let Some(row) = self.rows.lock().unwrap().get(&(policy, i)) {
            return Arc::clone(row);
        }
        let row: Arc<Vec<f64>> = Arc::new((0..=i).map(|k| policy.kernel(k, i - k)).collect());
        self.rows
            .lock()
            .unwrap()
            .entry((policy, i))
            .or_insert(row)
            .clone()
    }

    /// Evaluates any policy for `p ∈ [0, 1]`.
    pub fn evaluate(
        &self,
        dist: &VoterCountDistribution,
        p: f64,
        policy: DelegationPolicy,
    ) -> Result<WinProbability> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        policy.validate()?;
        if let DelegationPolicy::CappedProcess { m, .. } = policy {
            if m > PROCESS_ENGINE_MAX_DELEGATORS {
                return Err(Error::InvalidPolicy(format!(
                    "exact capped-process evaluation supports at most {PROCESS_ENGINE_MAX_DELEGATORS} delegators; simulate instead"
                )));
            }
        }
        let truncation = dist.truncate(&self.budget)?;
        // per-i terms are computed in parallel, then reduced in index order
        let terms: Vec<f64> = (0..=truncation.index)
            .into_par_iter()
            .map(|i| {
                let weight = dist.pmf(i);
                if weight == 0.0 {
                    return 0.0;
                }
                let row = self.kernel_row(policy, i);
                let inner: f64 = (0..=i)
                    .map(|k| {
                        let kernel = row[k as usize];
                        if kernel == 0.0 {
                            0.0
                        } else {
                            binomial_pmf(i, k, p) * kernel
                        }
                    })
                    .sum();
                weight * inner
            })
            .collect();
        let value: f64 = terms.iter().sum();
        Ok(WinProbability {
            value: value.clamp(0.0, 1.0),
            truncation_error: truncation.tail_mass,
            truncation_index: truncation.index,
            policy,
            p,
            dist: dist.clone(),
        })
    }

    pub fn conventional(&self, dist: &VoterCountDistribution, p: f64) -> Result<WinProbability> {
        check_open_probability(p)?;
        self.evaluate(dist, p, DelegationPolicy::Conventional)
    }

    pub fn free_delegation(&self, dist: &VoterCountDistribution, p: f64, m: u64) -> Result<WinProbability> {
        check_open_probability(p)?;
        self.evaluate(dist, p, DelegationPolicy::Free { m })
    }

    pub fn capped_delegation(
        &self,
        dist: &VoterCountDistribution,
        p: f64,
        m: u64,
        c: u64,
    ) -> Result<WinProbability> {
        check_open_probability(p)?;
        self.evaluate(dist, p, DelegationPolicy::CappedFormula { m, c })
    }

    pub fn capped_process(
        &self,
        dist: &VoterCountDistribution,
        p: f64,
        m: u64,
        c: u64,
    ) -> Result<WinProbability> {
        check_open_probability(p)?;
        self.evaluate(dist, p, DelegationPolicy::CappedProcess { m, c })
    }
}

/// `P(p)`, conventional voting.
pub fn conventional(dist: &VoterCountDistribution, p: f64, budget: &TruncationBudget) -> Result<WinProbability> {
    Engine::new(*budget).conventional(dist, p)
}

/// `P(p, m)`, free delegation.
pub fn free_delegation(
    dist: &VoterCountDistribution,
    p: f64,
    m: u64,
    budget: &TruncationBudget,
) -> Result<WinProbability> {
    Engine::new(*budget).free_delegation(dist, p, m)
}

/// `P_c(p, m)`, capped delegation by the closed-form kernel.
pub fn capped_delegation(
    dist: &VoterCountDistribution,
    p: f64,
    m: u64,
    c: u64,
    budget: &TruncationBudget,
) -> Result<WinProbability> {
    Engine::new(*budget).capped_delegation(dist, p, m, c)
}

fn check_ascending(grid: &[f64]) -> Result<()> {
    if grid.windows(2).all(|w| w[0] < w[1]) {
        Ok(())
    } else {
        Err(Error::InvalidPolicy("grid must be strictly ascending".into()))
    }
}

/// `P(p, m)` along an ascending grid in `(0, 1]`. At `p = 1` every voter
/// backs A and the sum collapses to `Σ_i F(i) g(i + m, 0)`.
pub fn limit_check_p_to_1(
    dist: &VoterCountDistribution,
    m: u64,
    p_grid: &[f64],
    budget: &TruncationBudget,
) -> Result<Vec<(f64, WinProbability)>> {
    check_ascending(p_grid)?;
    let engine = Engine::new(*budget);
    p_grid
        .iter()
        .map(|&p| {
            if p == 1.0 {
                let truncation = dist.truncate(budget)?;
                let value: f64 = (0..=truncation.index)
                    .map(|i| dist.pmf(i) * majority_indicator(i + m, 0))
                    .sum();
                let wp = WinProbability {
                    value: value.min(1.0),
                    truncation_error: truncation.tail_mass,
                    truncation_index: truncation.index,
                    policy: DelegationPolicy::Free { m },
                    p,
                    dist: dist.clone(),
                };
                Ok((p, wp))
            } else {
                Ok((p, engine.free_delegation(dist, p, m)?))
            }
        })
        .collect()
}

/// One point of a large-electorate sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElectorateRow {
    pub n: f64,
    pub m: u64,
    pub probability: WinProbability,
}

/// `P(n, p, m(n))` for Poisson(n) electorates along `n_grid`.
pub fn limit_check_n_to_inf(
    p: f64,
    m_rule: impl Fn(f64) -> u64,
    n_grid: &[f64],
    budget: &TruncationBudget,
) -> Result<Vec<ElectorateRow>> {
    check_ascending(n_grid)?;
    let engine = Engine::new(*budget);
    n_grid
        .iter()
        .map(|&n| {
            let m = m_rule(n);
            let dist = VoterCountDistribution::poisson(n)?;
            Ok(ElectorateRow { n, m, probability: engine.free_delegation(&dist, p, m)? })
        })
        .collect()
}

/// One point of a delegator sweep, with the shortfall against conventional
/// voting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelegatorRow {
    pub m: u64,
    pub free: WinProbability,
    /// `P(p) - P(p, m)`.
    pub gap: f64,
}

/// `P(p, m)` along an ascending `m_grid`, reporting the gap to `P(p)`.
pub fn limit_check_m_to_inf(
    dist: &VoterCountDistribution,
    p: f64,
    m_grid: &[u64],
    budget: &TruncationBudget,
) -> Result<Vec<DelegatorRow>> {
    if !m_grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidPolicy("grid must be strictly ascending".into()));
    }
    let engine = Engine::new(*budget);
    let base = engine.conventional(dist, p)?;
    m_grid
        .iter()
        .map(|&m| {
            let free = engine.free_delegation(dist, p, m)?;
            let gap = base.value - free.value;
            Ok(DelegatorRow { m, free, gap })
        })
        .collect()
}

/// Comparison of free and capped delegation at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingRow {
    pub dist: VoterCountDistribution,
    pub p: f64,
    pub m: u64,
    pub c: u64,
    pub conventional: f64,
    pub free: f64,
    pub capped: f64,
    pub truncation_error: f64,
    /// `free ≤ capped` up to twice the truncation error.
    pub free_below_capped: bool,
}

/// Tabulates whether capped delegation sits between free delegation and
/// conventional voting. Rows where `free > capped` are flagged, not rejected.
pub fn ordering_survey(
    dists: &[VoterCountDistribution],
    ps: &[f64],
    ms: &[u64],
    cs: &[u64],
    budget: &TruncationBudget,
) -> Result<Vec<OrderingRow>> {
    let engine = Engine::new(*budget);
    let mut rows = Vec::new();
    for dist in dists {
        for &p in ps {
            let conventional = engine.conventional(dist, p)?;
            for &m in ms {
                let free = engine.free_delegation(dist, p, m)?;
                for &c in cs {
                    let capped = engine.capped_delegation(dist, p, m, c)?;
                    let err = conventional.truncation_error;
                    rows.push(OrderingRow {
                        dist: dist.clone(),
                        p,
                        m,
                        c,
                        conventional: conventional.value,
                        free: free.value,
                        capped: capped.value,
                        truncation_error: err,
                        free_below_capped: free.value <= capped.value + 2.0 * err + 1e-15,
                    });
                }
            }
        }
    }
    Ok(rows)
}
