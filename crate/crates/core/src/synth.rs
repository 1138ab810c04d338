//! Random valid models for property tests, the acceptance suite and
//! benchmarks.
//!
//! Each transaction is a random tree grown from its root: every new action
//! hangs off an earlier one through a sub-action that either calls it (same
//! priority) or signals it (priority no higher than the sender's).

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{
    Action, AnalysisConfig, ArrivalPattern, LinkKind, Priority, SubAction, SystemModel, Transaction,
    Trigger,
};
use crate::time::Time;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub max_transactions: usize,
    pub max_actions: usize,
    pub sub_actions: RangeInclusive<usize>,
    pub exec_time: RangeInclusive<u64>,
    pub outer_period: RangeInclusive<u64>,
    pub burst: RangeInclusive<u32>,
    pub jitter: RangeInclusive<u64>,
    pub priorities: RangeInclusive<u32>,
    /// Long-run processor demand is kept at or below this fraction; draws
    /// above it are discarded and redrawn.
    pub max_utilization: f64,
    /// Only single-action, strictly periodic, jitter-free transactions.
    pub independent: bool,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            max_transactions: 3,
            max_actions: 6,
            sub_actions: 1..=3,
            exec_time: 1..=10,
            outer_period: 20..=200,
            burst: 1..=3,
            jitter: 0..=5,
            priorities: 1..=10,
            max_utilization: 0.9,
            independent: false,
        }
    }
}

impl SynthParams {
    /// Single-action periodic transactions without jitter.
    pub fn independent() -> Self {
        SynthParams { independent: true, ..SynthParams::default() }
    }
}

/// Processor demand per unit of time in the long run.
pub fn utilization(model: &SystemModel) -> f64 {
    model
        .transactions
        .iter()
        .map(|txn| {
            let cost: Time = model.actions_of(&txn.id).map(Action::exec_time).sum();
            let a = &txn.arrival;
            (cost.get() * a.burst as u64) as f64 / a.outer_period.get() as f64
        })
        .sum()
}

pub fn random_model<R: Rng>(rng: &mut R, params: &SynthParams) -> SystemModel {
    loop {
        let m = draw(rng, params);
        if utilization(&m) <= params.max_utilization {
            debug_assert!(m.validate().is_empty(), "{:?}", m.validate());
            return m;
        }
    }
}

fn draw<R: Rng>(rng: &mut R, p: &SynthParams) -> SystemModel {
    let max_txn = p.max_transactions.min(p.max_actions).max(1);
    let n_txn = rng.gen_range(1..=max_txn);
    let n_actions = if p.independent { n_txn } else { rng.gen_range(n_txn..=p.max_actions.max(n_txn)) };

    // Every transaction has its root; the rest are scattered.
    let mut sizes = vec![1usize; n_txn];
    for _ in n_txn..n_actions {
        sizes[rng.gen_range(0..n_txn)] += 1;
    }

    let mut model = SystemModel { config: AnalysisConfig::default(), ..SystemModel::default() };
    let mut next_id = 1;
    for (k, &size) in sizes.iter().enumerate() {
        let txn_id = format!("T{}", k + 1);
        let arrival = random_pattern(rng, p);
        let first = model.actions.len();
        for j in 0..size {
            let id = format!("A{next_id}");
            next_id += 1;
            let n_subs = if p.independent { 1 } else { rng.gen_range(p.sub_actions.clone()) };
            let subs = (0..n_subs).map(|_| SubAction::plain(rng.gen_range(p.exec_time.clone()))).collect();
            let (trigger, priority) = if j == 0 {
                (Trigger::External, Priority(rng.gen_range(p.priorities.clone())))
            } else {
                attach(rng, &mut model.actions[first..], &id)
            };
            model.actions.push(Action {
                id: id.into(),
                transaction: txn_id.clone().into(),
                priority,
                deadline: Time::ZERO,
                trigger,
                sub_actions: subs,
                owner: None,
            });
        }
        let deadline_cap = arrival.outer_period.get() * 2;
        for a in &mut model.actions[first..] {
            a.deadline = Time::new(rng.gen_range(a.exec_time().get().max(1)..=deadline_cap.max(1)));
        }
        model.transactions.push(Transaction {
            id: txn_id.into(),
            arrival,
            root: model.actions[first].id.clone(),
        });
    }
    model
}

fn random_pattern<R: Rng>(rng: &mut R, p: &SynthParams) -> ArrivalPattern {
    let outer = Time::new(rng.gen_range(p.outer_period.clone()));
    if p.independent {
        return ArrivalPattern::periodic(outer, Time::ZERO);
    }
    let jitter = Time::new(rng.gen_range(p.jitter.clone()));
    let burst = rng.gen_range(p.burst.clone());
    if burst == 1 {
        return if rng.gen_bool(0.5) {
            ArrivalPattern::periodic(outer, jitter)
        } else {
            ArrivalPattern::aperiodic(outer, jitter)
        };
    }
    let inner = rng.gen_range(1..=outer.get() / burst as u64);
    ArrivalPattern::sporadically_periodic(outer, Time::new(inner), burst, jitter)
}

/// Links a new action `id` under a random earlier action of the same
/// transaction, reusing an unlinked sub-action when there is one.
fn attach<R: Rng>(rng: &mut R, earlier: &mut [Action], id: &str) -> (Trigger, Priority) {
    let parent = earlier.choose_mut(rng).expect("transaction has a root");
    let free: Vec<usize> =
        (0..parent.sub_actions.len()).filter(|&s| parent.sub_actions[s].generates.is_none()).collect();
    let slot = match free.choose(rng) {
        Some(&s) => s,
        None => {
            parent.sub_actions.push(SubAction::plain(1));
            parent.sub_actions.len() - 1
        }
    };
    let exec = parent.sub_actions[slot].exec_time;
    let from = parent.id.clone();
    if rng.gen_bool(0.5) {
        parent.sub_actions[slot] = SubAction::call(exec, id);
        (Trigger::Call { from, sub_action: slot }, parent.priority)
    } else {
        parent.sub_actions[slot] = SubAction::send(exec, id);
        let prio = rng.gen_range(1..=parent.priority.0);
        (Trigger::Signal { from, sub_action: slot }, Priority(prio))
    }
}

/// True if any sub-action of the model generates the given link kind.
pub fn has_link(model: &SystemModel, kind: LinkKind) -> bool {
    model.actions.iter().flat_map(|a| &a.sub_actions).any(|s| s.generates.as_ref().is_some_and(|l| l.kind == kind))
}
