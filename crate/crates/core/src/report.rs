//! Report rows and the canned scenarios behind the command-line tool.

use serde::Serialize;

use crate::distributions::{TruncationBudget, VoterCountDistribution};
use crate::engine::Engine;
use crate::error::Result;
use crate::exact::ExactProbability;
use crate::simulator::{simulate_joint, JointCountDistribution, SimulationReport};

/// Tolerance on each reproduced table entry.
pub const TABLE1_TOLERANCE: f64 = 5e-6;
pub const TABLE1_MEAN_VOTERS: f64 = 20.0;
pub const TABLE1_P: f64 = 0.6;
pub const TABLE1_CAP: u64 = 2;

/// Published reference values for a Poisson(20) electorate at p = 0.6 and
/// cap 2, as `(m, conventional, free, capped)`. Used only for comparison.
pub const TABLE1_PUBLISHED: [(u64, f64, f64, f64); 5] = [
    (1, 0.81413, 0.808443, 0.808443),
    (2, 0.81413, 0.804256, 0.804256),
    (5, 0.81413, 0.796578, 0.796616),
    (10, 0.81413, 0.791246, 0.792627),
    (300, 0.81413, 0.808516, 0.81413),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Simulated,
}

/// One line of tabular output. `error` is the truncation bound for exact rows
/// and the standard error for simulated rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario: String,
    pub dist: String,
    pub p: f64,
    pub m: u64,
    pub c: Option<u64>,
    pub method: Method,
    pub value: f64,
    pub error: f64,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub published: Option<f64>,
    pub delta: Option<f64>,
}

impl ReportRow {
    fn exact(scenario: &str, dist: &VoterCountDistribution, p: f64, m: u64, c: Option<u64>, value: f64, error: f64) -> Self {
        Self {
            scenario: scenario.to_string(),
            dist: dist.to_string(),
            p,
            m,
            c,
            method: Method::Exact,
            value,
            error,
            trials: None,
            seed: None,
            published: None,
            delta: None,
        }
    }

    fn against(mut self, published: f64) -> Self {
        self.published = Some(published);
        self.delta = Some(self.value - published);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Report {
    pub rows: Vec<ReportRow>,
    pub max_abs_delta: f64,
    pub tolerance: f64,
}

impl Table1Report {
    pub fn passed(&self) -> bool {
        self.max_abs_delta <= self.tolerance
    }
}

/// Recomputes every published entry with the exact engine: three rows per
/// delegator count (conventional, free, capped).
pub fn table1(budget: &TruncationBudget) -> Result<Table1Report> {
    let dist = VoterCountDistribution::poisson(TABLE1_MEAN_VOTERS)?;
    let engine = Engine::new(*budget);
    let p = TABLE1_P;
    let conventional = engine.conventional(&dist, p)?;
    let mut rows = Vec::with_capacity(3 * TABLE1_PUBLISHED.len());
    for &(m, conv_pub, free_pub, capped_pub) in &TABLE1_PUBLISHED {
        let free = engine.free_delegation(&dist, p, m)?;
        let capped = engine.capped_delegation(&dist, p, m, TABLE1_CAP)?;
        rows.push(
            ReportRow::exact("conventional", &dist, p, m, None, conventional.value, conventional.truncation_error)
                .against(conv_pub),
        );
        rows.push(ReportRow::exact("free", &dist, p, m, None, free.value, free.truncation_error).against(free_pub));
        rows.push(
            ReportRow::exact("capped", &dist, p, m, Some(TABLE1_CAP), capped.value, capped.truncation_error)
                .against(capped_pub),
        );
    }
    let max_abs_delta = rows.iter().filter_map(|r| r.delta).map(f64::abs).fold(0.0, f64::max);
    Ok(Table1Report { rows, max_abs_delta, tolerance: TABLE1_TOLERANCE })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    /// Delegator count minimizing the free-delegation probability.
    pub argmin_m: u64,
    pub min_value: f64,
    /// The free-delegation sequence both falls and rises somewhere.
    pub non_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<ReportRow>,
    pub summary: SweepSummary,
}

/// Free (and optionally capped) delegation for every `m` in `0..=m_max`.
pub fn sweep_m(
    dist: &VoterCountDistribution,
    p: f64,
    m_max: u64,
    cap: Option<u64>,
    budget: &TruncationBudget,
) -> Result<SweepReport> {
    let engine = Engine::new(*budget);
    let mut rows = Vec::new();
    let mut free_values = Vec::with_capacity(m_max as usize + 1);
    for m in 0..=m_max {
        let free = engine.free_delegation(dist, p, m)?;
        free_values.push(free.value);
        rows.push(ReportRow::exact("free", dist, p, m, None, free.value, free.truncation_error));
        if let Some(c) = cap {
            let capped = engine.capped_delegation(dist, p, m, c)?;
            rows.push(ReportRow::exact("capped", dist, p, m, Some(c), capped.value, capped.truncation_error));
        }
    }
    let (argmin, min_value) = free_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (m, &v)| if v < best.1 { (m, v) } else { best });
    let falls = free_values.windows(2).any(|w| w[1] < w[0]);
    let rises = free_values.windows(2).any(|w| w[1] > w[0]);
    Ok(SweepReport {
        rows,
        summary: SweepSummary { argmin_m: argmin as u64, min_value, non_monotone: falls && rises },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub delegators: u64,
    pub conventional_exact: ExactProbability,
    pub delegated_exact: ExactProbability,
    pub conventional: f64,
    pub delegated: f64,
    pub simulation: SimulationReport,
    pub simulation_covers_delegated: bool,
}

/// Correlated party sizes under which one delegated vote helps the likely
/// winner: exact values and a simulation of the delegated election.
pub fn counterexample(trials: u64, seed: u64) -> Result<CounterexampleReport> {
    let joint = JointCountDistribution::correlated_counterexample();
    let delegators = 1;
    let conventional_exact = joint.win_probability_exact(0)?;
    let delegated_exact = joint.win_probability_exact(delegators)?;
    let simulation = simulate_joint(&joint, delegators, trials, seed)?;
    let delegated = delegated_exact.to_f64();
    Ok(CounterexampleReport {
        delegators,
        conventional: conventional_exact.to_f64(),
        delegated,
        simulation_covers_delegated: simulation.ci_contains(delegated),
        conventional_exact,
        delegated_exact,
        simulation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_small() {
        let dist = VoterCountDistribution::poisson(5.0).unwrap();
        let report = sweep_m(&dist, 0.6, 4, Some(2), &TruncationBudget::default()).unwrap();
        assert_eq!(report.rows.len(), 10);
        assert_eq!(report.rows[0].m, 0);
        assert!(report.summary.argmin_m >= 1);
    }

    #[test]
    fn counterexample_values() {
        let r = counterexample(10_000, 1).unwrap();
        assert_eq!(r.conventional_exact, ExactProbability::from_ratio(3, 5).unwrap());
        assert_eq!(r.delegated_exact, ExactProbability::from_ratio(2, 3).unwrap());
    }
}
