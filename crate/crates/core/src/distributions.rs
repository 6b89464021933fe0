//! Random voter-count distributions and their truncation.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::special::poisson_pmf;

/// Tolerance within which an explicit pmf is silently renormalized.
const EXPLICIT_NORMALIZE_TOL: f64 = 1e-9;

/// Distribution of the number of voters.
#[derive(Debug, Clone, PartialEq)]
pub struct VoterCountDistribution {
    kind: DistributionKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    Poisson { mean: f64 },
    /// Sorted by count, counts unique, masses summing to one.
    Explicit(Vec<(u64, f64)>),
    PointMass(u64),
}

impl VoterCountDistribution {
    pub fn poisson(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "poisson mean must be positive and finite, got {mean}"
            )));
        }
        Ok(Self { kind: DistributionKind::Poisson { mean } })
    }

    pub fn point(count: u64) -> Self {
        Self { kind: DistributionKind::PointMass(count) }
    }

    /// Builds a finite-support distribution. Duplicate counts are merged and
    /// masses within 1e-9 of summing to one are renormalized.
    pub fn explicit<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        let mut merged: Vec<(u64, f64)> = Vec::new();
        for (count, mass) in entries {
            if !(mass.is_finite() && (0.0..=1.0).contains(&mass)) {
                return Err(Error::InvalidDistribution(format!(
                    "mass {mass} for count {count} is not in [0, 1]"
                )));
            }
            match merged.iter_mut().find(|(c, _)| *c == count) {
                Some(entry) => entry.1 += mass,
                None => merged.push((count, mass)),
            }
        }
        if merged.is_empty() {
            return Err(Error::InvalidDistribution("explicit pmf has no entries".into()));
        }
        let total: f64 = merged.iter().map(|(_, m)| m).sum();
        if (total - 1.0).abs() > EXPLICIT_NORMALIZE_TOL {
            return Err(Error::InvalidDistribution(format!(
                "explicit masses sum to {total}, expected 1"
            )));
        }
        for entry in &mut merged {
            entry.1 /= total;
        }
        merged.sort_by_key(|(c, _)| *c);
        Ok(Self { kind: DistributionKind::Explicit(merged) })
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            DistributionKind::Poisson { mean } => *mean,
            DistributionKind::Explicit(entries) => {
                entries.iter().map(|(c, m)| *c as f64 * m).sum()
            }
            DistributionKind::PointMass(c) => *c as f64,
        }
    }

    /// `F(i)`, the probability of exactly `i` voters.
    pub fn pmf(&self, i: u64) -> f64 {
        match &self.kind {
            DistributionKind::Poisson { mean } => poisson_pmf(*mean, i),
            DistributionKind::Explicit(entries) => entries
                .binary_search_by_key(&i, |(c, _)| *c)
                .map(|idx| entries[idx].1)
                .unwrap_or(0.0),
            DistributionKind::PointMass(c) => {
                if *c == i {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest count with positive mass, or `None` for unbounded support.
    pub fn max_support(&self) -> Option<u64> {
        match &self.kind {
            DistributionKind::Poisson { .. } => None,
            DistributionKind::Explicit(entries) => entries.last().map(|(c, _)| *c),
            DistributionKind::PointMass(c) => Some(*c),
        }
    }

    fn default_support_cap(&self) -> u64 {
        let natural = match &self.kind {
            DistributionKind::Poisson { mean } => (10.0 * mean).ceil() as u64,
            _ => self.max_support().unwrap_or(0),
        };
        natural.max(200)
    }

    /// Smallest index `I` whose upper tail `Σ_{i>I} F(i)` is within the budget,
    /// together with that tail mass.
    pub fn truncate(&self, budget: &TruncationBudget) -> Result<Truncation> {
        let cap = budget.max_support.unwrap_or_else(|| self.default_support_cap());
        let truncation = match &self.kind {
            DistributionKind::Poisson { mean } => poisson_truncation(*mean, budget.tail_mass_bound),
            _ => Truncation {
                index: self.max_support().unwrap_or(0),
                tail_mass: 0.0,
            },
        };
        if truncation.index > cap {
            return Err(Error::TruncationOverflow {
                needed: truncation.index,
                max_support: cap,
            });
        }
        Ok(truncation)
    }

    pub fn truncation_index(&self, budget: &TruncationBudget) -> Result<u64> {
        self.truncate(budget).map(|t| t.index)
    }
}

/// Walks the Poisson pmf down from far beyond the mean, accumulating the
/// upper tail without forming `1 - CDF`.
fn poisson_truncation(mean: f64, bound: f64) -> Truncation {
    let top = (mean + 40.0 * mean.sqrt() + 60.0).ceil() as u64;
    let mut tail = 0.0;
    let mut index = top;
    while index > 0 {
        let next_tail = tail + poisson_pmf(mean, index);
        if next_tail > bound {
            break;
        }
        tail = next_tail;
        index -= 1;
    }
    Truncation { index, tail_mass: tail }
}

/// Probability that exactly `k` of a Poisson(`mean`) electorate are A-voters
/// when each voter independently is one with probability `p`.
pub fn poisson_type_marginal(mean: f64, p: f64, k: u64) -> f64 {
    poisson_pmf(mean * p, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub index: u64,
    pub tail_mass: f64,
}

/// How much of an unbounded voter-count distribution may be discarded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationBudget {
    pub tail_mass_bound: f64,
    /// Safety cap on the truncation index; `None` uses `max(10·mean, 200)`.
    pub max_support: Option<u64>,
}

impl TruncationBudget {
    pub const DEFAULT_TAIL: f64 = 1e-9;

    pub fn new(tail_mass_bound: f64, max_support: Option<u64>) -> Result<Self> {
        if !(tail_mass_bound > 0.0 && tail_mass_bound < 1.0) {
            return Err(Error::InvalidBudget(format!(
                "tail mass bound must lie in (0, 1), got {tail_mass_bound}"
            )));
        }
        if max_support == Some(0) {
            return Err(Error::InvalidBudget("max support must be positive".into()));
        }
        Ok(Self { tail_mass_bound, max_support })
    }

    pub fn with_tail(tail_mass_bound: f64) -> Result<Self> {
        Self::new(tail_mass_bound, None)
    }
}

impl Default for TruncationBudget {
    fn default() -> Self {
        Self { tail_mass_bound: Self::DEFAULT_TAIL, max_support: None }
    }
}

impl fmt::Display for VoterCountDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DistributionKind::Poisson { mean } => write!(f, "poisson:{mean}"),
            DistributionKind::PointMass(c) => write!(f, "point:{c}"),
            DistributionKind::Explicit(entries) => {
                write!(f, "explicit:")?;
                for (idx, (c, m)) in entries.iter().enumerate() {
                    if idx > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}={m}")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for VoterCountDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for VoterCountDistribution {
    type Err = Error;

    /// Parses `poisson:<mean>`, `point:<count>` or `explicit:<count>=<mass>,...`.
    fn from_str(literal: &str) -> Result<Self> {
        let syntax = |reason: &str| Error::DistributionSyntax {
            literal: literal.to_string(),
            reason: reason.to_string(),
        };
        let (head, body) = literal
            .trim()
            .split_once(':')
            .ok_or_else(|| syntax("expected `<kind>:<parameters>`"))?;
        match head.trim().to_ascii_lowercase().as_str() {
            "poisson" => {
                let mean: f64 = body.trim().parse().map_err(|_| syntax("mean is not a number"))?;
                Self::poisson(mean)
            }
            "point" => {
                let count: u64 = body
                    .trim()
                    .parse()
                    .map_err(|_| syntax("count is not a non-negative integer"))?;
                Ok(Self::point(count))
            }
            "explicit" => {
                let entries = body
                    .split(',')
                    .map(|pair| {
                        let (c, m) = pair
                            .split_once('=')
                            .ok_or_else(|| syntax("entries must look like `count=mass`"))?;
                        let c: u64 = c.trim().parse().map_err(|_| syntax("bad count"))?;
                        let m: f64 = m.trim().parse().map_err(|_| syntax("bad mass"))?;
                        Ok((c, m))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::explicit(entries)
            }
            _ => Err(syntax("unknown kind; use poisson, point or explicit")),
        }
    }
}
