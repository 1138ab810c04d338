//! Discrete-event simulator of non-preemptive, fixed-priority dispatch of
//! run-to-completion synchronous sets on one processor.
//!
//! The dispatcher keeps a run queue of released actions ordered by priority
//! (highest first), then release time, then transaction id. Whenever the
//! processor is free it takes the head of the queue and executes that
//! action's whole synchronous set: sub-actions in order, synchronous calls
//! inline, asynchronous sends queued at the instant their sub-action ends.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::arrival_time;
use crate::model::{natural_cmp, ActionId, ArrivalPattern, LinkKind, ModelError, SystemModel, Topology};
use crate::time::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phasing {
    /// Every transaction's first nominal arrival is at time 0.
    CriticalInstant,
    /// Each transaction is offset uniformly in `[0, T)`.
    RandomOffsets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JitterMode {
    MaxAlways,
    RandomPerRelease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimConfig {
    pub duration: Time,
    pub seed: u64,
    pub phasing: Phasing,
    pub jitter: JitterMode,
}

impl SimConfig {
    pub fn critical(duration: Time) -> Self {
        SimConfig { duration, seed: 0, phasing: Phasing::CriticalInstant, jitter: JitterMode::MaxAlways }
    }

    pub fn random(duration: Time, seed: u64) -> Self {
        SimConfig { duration, seed, phasing: Phasing::RandomOffsets, jitter: JitterMode::RandomPerRelease }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("simulation duration must be positive")]
    ZeroDuration,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no response of `{0}` was observed")]
    NoObservations(ActionId),
}

/// One external release: the nominal arrival and the time the event
/// reaches the run queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Release {
    pub nominal: Time,
    pub released: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEvent {
    Arrival { action: ActionId, q: u32, nominal: Time, released: Time },
    Start { action: ActionId, q: u32, at: Time },
    Finish { action: ActionId, q: u32, at: Time },
    /// Finish time minus the nominal arrival of the external event.
    Response { action: ActionId, q: u32, value: Time },
}

impl TraceEvent {
    pub fn action(&self) -> &ActionId {
        match self {
            TraceEvent::Arrival { action, .. }
            | TraceEvent::Start { action, .. }
            | TraceEvent::Finish { action, .. }
            | TraceEvent::Response { action, .. } => action,
        }
    }
}

/// Chronological record of one simulation run. `q` counts releases of the
/// transaction's external event from 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SimTrace {
    pub events: Vec<TraceEvent>,
}

impl SimTrace {
    pub fn responses(&self) -> impl Iterator<Item = (&ActionId, u32, Time)> + '_ {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Response { action, q, value } => Some((action, *q, *value)),
            _ => None,
        })
    }

    /// Largest response observed for `action`.
    pub fn max_observed(&self, action: &str) -> Result<Time, SimError> {
        self.responses()
            .filter(|(a, _, _)| a.as_str() == action)
            .map(|(_, _, v)| v)
            .max()
            .ok_or_else(|| SimError::NoObservations(action.into()))
    }

    /// Writes `kind,action,q,time,nominal,response` rows, LF-terminated.
    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["kind", "action", "q", "time", "nominal", "response"])?;
        let s = |t: &Time| t.to_string();
        for e in &self.events {
            let row: [String; 6] = match e {
                TraceEvent::Arrival { action, q, nominal, released } => {
                    ["arrival".into(), action.to_string(), q.to_string(), s(released), s(nominal), String::new()]
                }
                TraceEvent::Start { action, q, at } => {
                    ["start".into(), action.to_string(), q.to_string(), s(at), String::new(), String::new()]
                }
                TraceEvent::Finish { action, q, at } => {
                    ["finish".into(), action.to_string(), q.to_string(), s(at), String::new(), String::new()]
                }
                TraceEvent::Response { action, q, value } => {
                    ["response".into(), action.to_string(), q.to_string(), String::new(), String::new(), s(value)]
                }
            };
            w.write_record(&row)?;
        }
        w.flush()
    }
}

/// Stream selector for a transaction's random draws, stable across runs and
/// independent of the other transactions in the model.
fn stream_of(id: &str) -> u64 {
    // FNV-1a
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Nominal and actual release times of one external event over
/// `[0, cfg.duration]`.
///
/// A stream's events reach the queue in order: a release is never earlier
/// than its predecessor, which keeps it within `[nominal, nominal + J]`.
pub fn generate_arrivals<R: Rng>(pattern: &ArrivalPattern, cfg: &SimConfig, rng: &mut R) -> Vec<Release> {
    let phase = match cfg.phasing {
        Phasing::CriticalInstant => Time::ZERO,
        Phasing::RandomOffsets => Time::new(rng.gen_range(0..pattern.outer_period.get().max(1))),
    };
    let mut out: Vec<Release> = Vec::new();
    for q in 1.. {
        let nominal = phase.saturating_add(arrival_time(q, pattern));
        if nominal > cfg.duration {
            break;
        }
        let delay = match cfg.jitter {
            JitterMode::MaxAlways => pattern.jitter,
            JitterMode::RandomPerRelease => Time::new(rng.gen_range(0..=pattern.jitter.get())),
        };
        let mut released = nominal + delay;
        if let Some(prev) = out.last() {
            released = released.max(prev.released);
        }
        out.push(Release { nominal, released });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Job {
    priority: u32,
    release: Time,
    txn_rank: usize,
    seq: u64,
    action: usize,
    q: u32,
    nominal: Time,
}

impl Ord for Job {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the greatest: highest priority, then the earliest
        // release, lowest transaction rank, oldest enqueue.
        self.priority
            .cmp(&other.priority)
            .then_with(|| other.release.cmp(&self.release))
            .then_with(|| other.txn_rank.cmp(&self.txn_rank))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Job {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Machine<'a> {
    topo: &'a Topology<'a>,
    txn_rank: &'a [usize],
    now: Time,
    queue: BinaryHeap<Job>,
    seq: u64,
    log: Vec<(Time, TraceEvent)>,
}

impl Machine<'_> {
    fn enqueue(&mut self, action: usize, q: u32, nominal: Time, release: Time) {
        let a = &self.topo.model().actions[action];
        self.log.push((release, TraceEvent::Arrival { action: a.id.clone(), q, nominal, released: release }));
        self.seq += 1;
        self.queue.push(Job {
            priority: a.priority.0,
            release,
            txn_rank: self.txn_rank[self.topo.transaction_of(action)],
            seq: self.seq,
            action,
            q,
            nominal,
        });
    }

    fn run_set(&mut self, action: usize, q: u32, nominal: Time) {
        let topo = self.topo;
        let a = &topo.model().actions[action];
        self.log.push((self.now, TraceEvent::Start { action: a.id.clone(), q, at: self.now }));
        for sub in &a.sub_actions {
            self.now += sub.exec_time;
            let Some(link) = &sub.generates else { continue };
            let target = topo.index_of(link.target.as_str()).expect("validated target");
            match link.kind {
                LinkKind::CallSync => {
                    let id = topo.id(target).clone();
                    self.log.push((
                        self.now,
                        TraceEvent::Arrival { action: id, q, nominal, released: self.now },
                    ));
                    self.run_set(target, q, nominal);
                }
                LinkKind::SendAsync => self.enqueue(target, q, nominal, self.now),
            }
        }
        self.log.push((self.now, TraceEvent::Finish { action: a.id.clone(), q, at: self.now }));
        let value = self.now.saturating_sub(nominal);
        self.log.push((self.now, TraceEvent::Response { action: a.id.clone(), q, value }));
    }
}

/// Runs the model until every release in `[0, duration]` and all the work
/// it causes has completed.
pub fn simulate(model: &SystemModel, cfg: &SimConfig) -> Result<SimTrace, SimError> {
    if cfg.duration.is_zero() {
        return Err(SimError::ZeroDuration);
    }
    let topo = Topology::new(model)?;

    let mut by_id: Vec<usize> = (0..model.transactions.len()).collect();
    by_id.sort_by(|&x, &y| natural_cmp(model.transactions[x].id.as_str(), model.transactions[y].id.as_str()));
    let mut txn_rank = vec![0; by_id.len()];
    for (rank, &t) in by_id.iter().enumerate() {
        txn_rank[t] = rank;
    }

    // (released, rank, q, nominal, root)
    let mut external = Vec::new();
    for (k, txn) in model.transactions.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream_of(txn.id.as_str()));
        let root = topo.index_of(txn.root.as_str())?;
        for (q, r) in generate_arrivals(&txn.arrival, cfg, &mut rng).into_iter().enumerate() {
            external.push((r.released, txn_rank[k], q as u32 + 1, r.nominal, root));
        }
    }
    external.sort();

    let mut m = Machine { topo: &topo, txn_rank: &txn_rank, now: Time::ZERO, queue: BinaryHeap::new(), seq: 0, log: Vec::new() };
    let mut next = 0;
    loop {
        while let Some(&(released, _, q, nominal, root)) = external.get(next) {
            if released > m.now {
                break;
            }
            m.enqueue(root, q, nominal, released);
            next += 1;
        }
        if let Some(job) = m.queue.pop() {
            m.run_set(job.action, job.q, job.nominal);
        } else if let Some(&(released, ..)) = external.get(next) {
            m.now = released;
        } else {
            break;
        }
    }

    // Arrivals that happened while a set was running were logged when the
    // set ended; a stable sort by time puts them back in place.
    m.log.sort_by_key(|(t, _)| *t);
    Ok(SimTrace { events: m.log.into_iter().map(|(_, e)| e).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{case_study, independent, singleton};

    fn t(x: u64) -> Time {
        Time::new(x)
    }

    fn nominals(p: &ArrivalPattern, cfg: &SimConfig) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        generate_arrivals(p, cfg, &mut rng).iter().map(|r| r.nominal.get()).collect()
    }

    #[test]
    fn periodic_arrivals_cover_the_closed_duration() {
        let p = ArrivalPattern::periodic(t(60), t(0));
        assert_eq!(nominals(&p, &SimConfig::critical(t(180))), [0, 60, 120, 180]);
    }

    #[test]
    fn bursty_arrivals() {
        let p = ArrivalPattern::sporadically_periodic(t(900), t(300), 3, t(0));
        assert_eq!(nominals(&p, &SimConfig::critical(t(900))), [0, 300, 600, 900]);
    }

    #[test]
    fn max_jitter_delays_every_release() {
        let p = ArrivalPattern::periodic(t(60), t(3));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for r in generate_arrivals(&p, &SimConfig::critical(t(600)), &mut rng) {
            assert_eq!(r.released, r.nominal + t(3));
        }
    }

    #[test]
    fn random_jitter_stays_in_bounds_and_in_order() {
        let p = ArrivalPattern::sporadically_periodic(t(50), t(2), 5, t(7));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rs = generate_arrivals(&p, &SimConfig::random(t(5000), 9), &mut rng);
        assert!(rs.len() > 400);
        for w in rs.windows(2) {
            assert!(w[0].released <= w[1].released);
        }
        for r in &rs {
            assert!(r.nominal <= r.released && r.released <= r.nominal + t(7));
        }
    }

    #[test]
    fn lone_action_responds_in_its_cost() {
        let trace = simulate(&singleton(5, 100, 0, 100), &SimConfig::critical(t(200))).unwrap();
        let rs: Vec<u64> = trace.responses().map(|(_, _, v)| v.get()).collect();
        assert_eq!(rs, [5, 5, 5]);
        assert_eq!(trace.max_observed("A").unwrap(), t(5));
        assert_eq!(trace.max_observed("B"), Err(SimError::NoObservations("B".into())));
    }

    #[test]
    fn higher_priority_goes_first_on_simultaneous_release() {
        let m = independent(&[("A", 2, 4, 100, 0), ("B", 1, 6, 100, 0)]);
        let trace = simulate(&m, &SimConfig::critical(t(50))).unwrap();
        assert_eq!(trace.max_observed("A").unwrap(), t(4));
        assert_eq!(trace.max_observed("B").unwrap(), t(10));
    }

    #[test]
    fn lower_priority_blocks_when_released_first() {
        // B released at 0, A one tick later: A waits for B to finish.
        let mut m = independent(&[("A", 2, 4, 100, 1), ("B", 1, 6, 100, 0)]);
        m.transactions[0].arrival.jitter = t(1);
        let trace = simulate(&m, &SimConfig::critical(t(50))).unwrap();
        // A: nominal 0, released 1, starts 6, finishes 10.
        assert_eq!(trace.max_observed("A").unwrap(), t(10));
        assert_eq!(trace.max_observed("B").unwrap(), t(6));
    }

    #[test]
    fn synchronous_set_runs_without_interleaving() {
        let trace = simulate(&case_study(), &SimConfig::critical(t(1800))).unwrap();
        let model = case_study();
        let topo = model.topology().unwrap();
        let mut open: Option<(ActionId, Vec<ActionId>)> = None;
        for e in &trace.events {
            match e {
                TraceEvent::Start { action, .. } => match &open {
                    Some((_, members)) => assert!(members.contains(action), "{action} interleaved"),
                    None => open = Some((action.clone(), topo.synchronous_set(action.as_str()).unwrap())),
                },
                TraceEvent::Finish { action, .. } if open.as_ref().is_some_and(|(r, _)| r == action) => {
                    open = None;
                }
                _ => {}
            }
        }
    }

    #[test]
    fn case_study_first_instance_order() {
        let trace = simulate(&case_study(), &SimConfig::critical(t(100))).unwrap();
        // τ3 is released at 0 and τ1 at 3 (jitter): τ3's set runs first.
        let starts: Vec<(&str, u64)> = trace
            .events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Start { action, q: 1, at } => Some((action.as_str(), at.get())),
                _ => None,
            })
            .take(6)
            .collect();
        assert_eq!(starts, [("A3", 0), ("A10", 1), ("A11", 13), ("A1", 25), ("A4", 30), ("A6", 38)]);
    }

    #[test]
    fn trace_is_chronological_and_well_formed() {
        let m = case_study();
        let trace = simulate(&m, &SimConfig::random(t(3000), 5)).unwrap();
        let time_of = |e: &TraceEvent| match e {
            TraceEvent::Arrival { released, .. } => Some(*released),
            TraceEvent::Start { at, .. } | TraceEvent::Finish { at, .. } => Some(*at),
            TraceEvent::Response { .. } => None,
        };
        let times: Vec<Time> = trace.events.iter().filter_map(time_of).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));

        use std::collections::HashMap;
        let mut seen: HashMap<(&str, u32), (Time, Time, Option<Time>)> = HashMap::new();
        for e in &trace.events {
            match e {
                TraceEvent::Arrival { action, q, nominal, released } => {
                    assert!(nominal <= released);
                    seen.insert((action.as_str(), *q), (*nominal, *released, None));
                }
                TraceEvent::Start { action, q, at } => {
                    let s = seen.get_mut(&(action.as_str(), *q)).unwrap();
                    assert!(s.1 <= *at);
                    s.2 = Some(*at);
                }
                TraceEvent::Finish { action, q, at } => {
                    let s = seen[&(action.as_str(), *q)];
                    assert!(s.2.unwrap() < *at);
                }
                TraceEvent::Response { action, q, value } => {
                    let s = seen[&(action.as_str(), *q)];
                    assert!(*value >= s.1.saturating_sub(s.0));
                }
            }
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let m = case_study();
        let a = simulate(&m, &SimConfig::random(t(5000), 42)).unwrap();
        let b = simulate(&m, &SimConfig::random(t(5000), 42)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&m, &SimConfig::random(t(5000), 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn adding_a_transaction_keeps_other_draws() {
        let m = case_study();
        let mut bigger = case_study();
        bigger.transactions.push(crate::model::Transaction {
            id: "extra".into(),
            arrival: ArrivalPattern::periodic(t(1000), t(2)),
            root: "X".into(),
        });
        bigger.actions.push(crate::model::Action {
            id: "X".into(),
            transaction: "extra".into(),
            priority: crate::model::Priority(1),
            deadline: t(1000),
            trigger: crate::model::Trigger::External,
            sub_actions: vec![crate::model::SubAction::plain(1)],
            owner: None,
        });
        let arrivals = |tr: &SimTrace| -> Vec<(String, u32, Time, Time)> {
            tr.events
                .iter()
                .filter_map(|e| match e {
                    TraceEvent::Arrival { action, q, nominal, released } if action.as_str() == "A1" => {
                        Some((action.to_string(), *q, *nominal, *released))
                    }
                    _ => None,
                })
                .collect()
        };
        let cfg = SimConfig::random(t(2000), 7);
        assert_eq!(arrivals(&simulate(&m, &cfg).unwrap()), arrivals(&simulate(&bigger, &cfg).unwrap()));
    }

    #[test]
    fn csv_export() {
        let trace = simulate(&singleton(5, 100, 2, 100), &SimConfig::critical(t(50))).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "kind,action,q,time,nominal,response\n\
             arrival,A,1,2,0,\n\
             start,A,1,2,,\n\
             finish,A,1,7,,\n\
             response,A,1,,,7\n"
        );
    }

    #[test]
    fn zero_duration_is_rejected() {
        assert_eq!(
            simulate(&singleton(5, 100, 0, 100), &SimConfig::critical(Time::ZERO)),
            Err(SimError::ZeroDuration)
        );
    }
}
