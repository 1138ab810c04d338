use std::collections::HashMap;
use std::fmt;
use std::thread;

use thiserror::Error;

use crate::analysis::{analyze_system, AnalysisError, AnalysisReport};
use crate::model::{ActionId, SystemModel};
use crate::sim::{simulate, JitterMode, Phasing, SimConfig, SimError, SimTrace};
use crate::time::Time;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckConfig {
    pub runs: u32,
    /// Defaults to ten times the longest outer period.
    pub duration: Option<Time>,
    pub seed: u64,
    /// Subtracted from every analysed bound before comparison. Only for
    /// demonstrating that the check catches a wrong analysis.
    pub lower_bounds_by: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { runs: 20, duration: None, seed: 0, lower_bounds_by: 0 }
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("at least one simulation run is required")]
    ZeroRuns,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// An observed response above the analysed bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub action: ActionId,
    pub q: u32,
    pub observed: Time,
    pub bound: Time,
    pub run: u32,
    pub seed: u64,
    pub phasing: Phasing,
    pub jitter: JitterMode,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phasing = match self.phasing {
            Phasing::CriticalInstant => "critical",
            Phasing::RandomOffsets => "random",
        };
        let jitter = match self.jitter {
            JitterMode::MaxAlways => "max",
            JitterMode::RandomPerRelease => "random",
        };
        write!(
            f,
            "action {} instance {}: observed {} > bound {} (run {}, seed {}, phasing {phasing}, jitter {jitter})",
            self.action, self.q, self.observed, self.bound, self.run, self.seed
        )
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub report: AnalysisReport,
    pub duration: Time,
    pub runs: u32,
    /// Per action in report order: largest observed response over all runs
    /// and the bound it was compared with.
    pub observed: Vec<(ActionId, Option<Time>, Option<Time>)>,
    pub counterexamples: Vec<Counterexample>,
    pub notes: Vec<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

fn run_config(cfg: &CheckConfig, duration: Time, run: u32) -> SimConfig {
    let seed = cfg.seed.wrapping_add(run as u64);
    if run == 0 {
        SimConfig { seed, ..SimConfig::critical(duration) }
    } else {
        SimConfig::random(duration, seed)
    }
}

/// Analyses the model once, then simulates it `runs` times: first at the
/// critical instant with maximal jitter, then with random phasing and
/// jitter under seeds `seed + 1, seed + 2, …`. Every observed response is
/// compared with the analysed bound of its action.
pub fn check(model: &SystemModel, cfg: &CheckConfig) -> Result<CheckOutcome, CheckError> {
    if cfg.runs == 0 {
        return Err(CheckError::ZeroRuns);
    }
    let report = analyze_system(model)?;
    let mut notes = Vec::new();
    if model.actions.is_empty() {
        notes.push("no actions".to_owned());
        return Ok(CheckOutcome {
            report,
            duration: cfg.duration.unwrap_or(Time::ZERO),
            runs: 0,
            observed: Vec::new(),
            counterexamples: Vec::new(),
            notes,
        });
    }
    let longest = model.transactions.iter().map(|t| t.arrival.outer_period).max().unwrap_or(Time::ZERO);
    let duration = cfg.duration.unwrap_or(longest.saturating_mul(10).max(Time::new(1)));

    let bounds: HashMap<&ActionId, Time> = report
        .results
        .iter()
        .filter_map(|r| r.wcrt.map(|w| (&r.action, w.saturating_sub(Time::new(cfg.lower_bounds_by)))))
        .collect();
    for r in report.results.iter().filter(|r| r.wcrt.is_none()) {
        notes.push(format!("{}: no bound (analysis guard fired); responses not compared", r.action));
    }

    let traces = simulate_runs(model, cfg, duration)?;

    let mut counterexamples = Vec::new();
    let mut max_seen: HashMap<&ActionId, Time> = HashMap::new();
    for (run, trace) in traces.iter().enumerate() {
        let sim = run_config(cfg, duration, run as u32);
        // Worst offending instance per action and run.
        let mut worst: HashMap<&ActionId, (u32, Time)> = HashMap::new();
        for (action, q, value) in trace.responses() {
            let seen = max_seen.entry(action).or_insert(value);
            *seen = (*seen).max(value);
            match bounds.get(action) {
                Some(&bound) if value > bound => {
                    let entry = worst.entry(action).or_insert((q, value));
                    if value > entry.1 {
                        *entry = (q, value);
                    }
                }
                _ => {}
            }
        }
        for r in &report.results {
            if let Some(&(q, observed)) = worst.get(&r.action) {
                counterexamples.push(Counterexample {
                    action: r.action.clone(),
                    q,
                    observed,
                    bound: bounds[&r.action],
                    run: run as u32,
                    seed: sim.seed,
                    phasing: sim.phasing,
                    jitter: sim.jitter,
                });
            }
        }
    }

    let observed = report
        .results
        .iter()
        .map(|r| (r.action.clone(), max_seen.get(&r.action).copied(), bounds.get(&r.action).copied()))
        .collect();
    Ok(CheckOutcome { duration, runs: cfg.runs, observed, counterexamples, notes, report })
}

/// Runs are independent; they are spread over the available cores and
/// returned in run order.
fn simulate_runs(model: &SystemModel, cfg: &CheckConfig, duration: Time) -> Result<Vec<SimTrace>, SimError> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(cfg.runs as usize).max(1);
    let runs: Vec<u32> = (0..cfg.runs).collect();
    let chunk = runs.len().div_ceil(workers);
    thread::scope(|s| {
        let handles: Vec<_> = runs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter().map(|&r| simulate(model, &run_config(cfg, duration, r))).collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("simulation thread panicked")).collect()
    })
}
