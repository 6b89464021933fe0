//! `votedel`: evaluate, simulate and tabulate delegated elections.
//!
//! Exit status: 0 when every check passes, 1 on a numeric mismatch, 2 on a
//! usage or input error.

use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vote_delegation::engine::{DelegationPolicy, Engine};
use vote_delegation::report::{self, ReportRow};
use vote_delegation::simulator::{self, SimulationConfig};
use vote_delegation::weighted::{self, WeightedProfile};
use vote_delegation::{TruncationBudget, VoterCountDistribution};

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "votedel", version, about = "Winning probabilities under conventional, free and capped vote delegation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Recompute the reference table (Poisson(20) voters, p = 0.6, cap 2) and compare.
    Table1 {
        #[arg(long, default_value_t = TruncationBudget::DEFAULT_TAIL)]
        tail: f64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Exact win probability for one policy.
    Exact {
        #[arg(long)]
        dist: VoterCountDistribution,
        #[arg(long)]
        p: f64,
        /// Delegators; omit for conventional voting.
        #[arg(long)]
        m: Option<u64>,
        /// Cap on votes per voter; selects the closed-form capped kernel.
        #[arg(long, requires = "m")]
        c: Option<u64>,
        /// Explicit policy, overriding --m/--c.
        #[arg(long, conflicts_with_all = ["m", "c"])]
        policy: Option<DelegationPolicy>,
        #[arg(long, default_value_t = TruncationBudget::DEFAULT_TAIL)]
        tail: f64,
    },
    /// Monte Carlo estimate for one policy.
    Simulate {
        #[arg(long)]
        dist: VoterCountDistribution,
        #[arg(long)]
        p: f64,
        /// conv | free:m | capped:m,c | capped-process:m,c
        #[arg(long, default_value = "conv")]
        policy: DelegationPolicy,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Free (and optionally capped) delegation for m = 0..=m_max.
    SweepM {
        #[arg(long)]
        dist: VoterCountDistribution,
        #[arg(long)]
        p: f64,
        #[arg(long = "m-max")]
        m_max: u64,
        #[arg(long)]
        c: Option<u64>,
        #[arg(long, default_value_t = TruncationBudget::DEFAULT_TAIL)]
        tail: f64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Weighted against unweighted majority over independent signals.
    Weighted {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: f64,
        #[arg(long, value_delimiter = ',', conflicts_with = "random")]
        weights: Option<Vec<f64>>,
        /// Number of random Uniform[0,1) weight vectors to check.
        #[arg(long, requires = "n")]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Correlated party sizes where delegation helps the likely winner.
    Counterexample {
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Three voters, two delegators: abstention against delegation.
    Jury {
        #[arg(long)]
        p: f64,
    },
}

enum Failure {
    Usage(String),
    Mismatch(String),
}

impl From<vote_delegation::Error> for Failure {
    fn from(e: vote_delegation::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("write failed: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn print_json<T: Serialize>(value: &T) -> Outcome {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn print_csv(rows: &[ReportRow], trailer: Option<String>) -> Outcome {
    let mut out = io::stdout().lock();
    {
        let mut writer = csv::Writer::from_writer(&mut out);
        for row in rows {
            writer.serialize(row).map_err(|e| Failure::Usage(e.to_string()))?;
        }
        writer.flush()?;
    }
    if let Some(line) = trailer {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Table1 { tail, format } => {
            let table = report::table1(&TruncationBudget::with_tail(tail)?)?;
            match format {
                Format::Csv => print_csv(&table.rows, None)?,
                Format::Json => print_json(&table)?,
            }
            if !table.passed() {
                return Err(Failure::Mismatch(format!(
                    "max |delta| {:.3e} exceeds {:.0e}",
                    table.max_abs_delta, table.tolerance
                )));
            }
            Ok(())
        }
        Command::Exact { dist, p, m, c, policy, tail } => {
            let policy = policy.unwrap_or(match (m, c) {
                (None, _) => DelegationPolicy::Conventional,
                (Some(m), None) => DelegationPolicy::Free { m },
                (Some(m), Some(c)) => DelegationPolicy::CappedFormula { m, c },
            });
            if !(p > 0.0 && p < 1.0) {
                return Err(Failure::Usage(format!("--p must lie in (0, 1), got {p}")));
            }
            let engine = Engine::new(TruncationBudget::with_tail(tail)?);
            print_json(&engine.evaluate(&dist, p, policy)?)
        }
        Command::Simulate { dist, p, policy, trials, seed } => {
            let config = SimulationConfig { dist, p, policy, trials, seed };
            let report = simulator::simulate(&config)?;
            #[derive(Serialize)]
            struct Output<'a> {
                config: &'a SimulationConfig,
                #[serde(flatten)]
                report: simulator::SimulationReport,
            }
            print_json(&Output { config: &config, report })
        }
        Command::SweepM { dist, p, m_max, c, tail, format } => {
            if m_max == 0 {
                return Err(Failure::Usage("--m-max must be at least 1".into()));
            }
            let sweep = report::sweep_m(&dist, p, m_max, c, &TruncationBudget::with_tail(tail)?)?;
            match format {
                Format::Csv => {
                    let s = &sweep.summary;
                    let trailer = format!(
                        "# argmin_m={} min_value={} non_monotone={}",
                        s.argmin_m, s.min_value, s.non_monotone
                    );
                    print_csv(&sweep.rows, Some(trailer))
                }
                Format::Json => print_json(&sweep),
            }
        }
        Command::Weighted { n, p, weights, random, seed } => weighted_command(n, p, weights, random, seed),
        Command::Counterexample { trials, seed } => {
            let report = report::counterexample(trials, seed)?;
            print_json(&report)?;
            if !report.simulation_covers_delegated {
                return Err(Failure::Mismatch("simulation interval misses the exact value".into()));
            }
            Ok(())
        }
        Command::Jury { p } => print_json(&simulator::jury_example(p)?),
    }
}

fn weighted_command(n: Option<usize>, p: f64, weights: Option<Vec<f64>>, random: Option<usize>, seed: u64) -> Outcome {
    if let Some(count) = random {
        let n = n.expect("clap enforces --n with --random");
        if n > weighted::ENUMERATION_CAP {
            return Err(vote_delegation::Error::EnumerationCap { voters: n, cap: weighted::ENUMERATION_CAP }.into());
        }
        let samples = weighted::random_weight_vectors(n, count, seed);
        let report = weighted::weight_dominance_check(n, p, &samples)?;
        #[derive(Serialize)]
        struct Summary {
            n: usize,
            p: f64,
            samples: usize,
            seed: u64,
            unweighted: f64,
            violations: usize,
            min_gap: f64,
            max_gap: f64,
            light_winning_subsets: usize,
        }
        print_json(&Summary {
            n,
            p,
            samples: report.samples.len(),
            seed,
            unweighted: report.unweighted,
            violations: report.violations,
            min_gap: report.min_gap,
            max_gap: report.max_gap,
            light_winning_subsets: report.samples.iter().filter(|s| s.light_winning_subset).count(),
        })?;
        if report.violations > 0 {
            return Err(Failure::Mismatch(format!("{} weight vectors beat equal weights", report.violations)));
        }
        return Ok(());
    }
    let weights = match (weights, n) {
        (Some(w), Some(n)) if w.len() != n => {
            return Err(Failure::Usage(format!("--n {n} but {} weights given", w.len())));
        }
        (Some(w), _) => w,
        (None, Some(n)) => vec![1.0; n],
        (None, None) => return Err(Failure::Usage("give --weights, --n, or --n with --random".into())),
    };
    let profile = WeightedProfile::new(weights)?;
    let unweighted = weighted::unweighted_majority_prob(profile.voters() as u64, p)?;
    let weighted_value = weighted::weighted_majority_prob(&profile, p)?;
    #[derive(Serialize)]
    struct Comparison<'a> {
        n: usize,
        p: f64,
        weights: &'a [f64],
        unweighted: f64,
        weighted: f64,
        gap: f64,
        light_winning_subset: bool,
    }
    print_json(&Comparison {
        n: profile.voters(),
        p,
        weights: profile.weights(),
        unweighted,
        weighted: weighted_value,
        gap: unweighted - weighted_value,
        light_winning_subset: weighted::has_light_winning_subset(&profile),
    })?;
    if weighted_value > unweighted + 1e-12 {
        return Err(Failure::Mismatch("weighted profile beats equal weights".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Mismatch(msg)) => {
            eprintln!("mismatch: {msg}");
            ExitCode::from(EXIT_MISMATCH)
        }
    }
}
