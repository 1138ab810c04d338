//! Worst-case response-time analysis.
//!
//! For each action the analysis walks the instances `q = 1, 2, …` of a
//! busy period that starts at a critical instant. The start time of each
//! instance is the least fixed point of
//!
//! ```text
//! W = B + Σ_{k≠τ} other_k(W) + past(q) + future(q, W)
//! ```
//!
//! and its finish time adds the cost of the action's synchronous set.
//! Synchronously called actions are analysed through the signal- or
//! externally-triggered root of their synchronous set, plus the part of
//! that set already executed when the call is made.

mod arrivals;

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    natural_cmp, ActionId, AnalysisConfig, ModelError, Priority, SystemModel, Topology,
    TransactionId, Violation,
};
use crate::time::Time;

pub use arrivals::{
    arrival_time, burst_index, interference_count_other, releases_in, BurstPosition,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("model failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    ValidationFailed(Vec<Violation>),
    #[error(transparent)]
    Model(ModelError),
    #[error("start of instance {q} of `{action}` exceeded the {limit}-tick window")]
    WindowOverflow { action: ActionId, q: u32, limit: Time },
    #[error("busy period of `{action}` still open after {limit} instances")]
    BusyPeriodOverflow { action: ActionId, limit: u32 },
}

impl From<ModelError> for AnalysisError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Invalid(v) => AnalysisError::ValidationFailed(v),
            e => AnalysisError::Model(e),
        }
    }
}

/// Start, finish and response of one instance in the busy period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InstanceResult {
    pub q: u32,
    pub start: Time,
    pub finish: Time,
    pub response: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActionResult {
    pub action: ActionId,
    pub transaction: TransactionId,
    pub priority: Priority,
    pub deadline: Time,
    /// `None` when a termination guard fired and no bound was found.
    pub wcrt: Option<Time>,
    pub instances: u32,
    pub per_instance: Vec<InstanceResult>,
    pub feasible: bool,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub results: Vec<ActionResult>,
    pub system_feasible: bool,
    pub diagnostics: Vec<String>,
}

impl AnalysisReport {
    pub fn result(&self, action: &str) -> Option<&ActionResult> {
        self.results.iter().find(|r| r.action.as_str() == action)
    }
}

/// Analysis context for one model. Per-action sums that do not depend on
/// the window are computed once up front.
#[derive(Debug, Clone)]
pub struct Analysis<'m> {
    topo: Topology<'m>,
    config: AnalysisConfig,
    blocking: Vec<Time>,
    /// Σ C(A_l) over the same transaction with π(A_l) ≥ π(A_i).
    same_ge: Vec<Time>,
    /// As `same_ge`, restricted to actions not caused by A_i.
    not_caused: Vec<Time>,
    /// `other_ge[i][k]`: Σ C(A_l) over transaction k with π(A_l) ≥ π(A_i).
    other_ge: Vec<Vec<Time>>,
}

impl<'m> Analysis<'m> {
    pub fn new(model: &'m SystemModel) -> Result<Self, AnalysisError> {
        let topo = Topology::new(model)?;
        let actions = &model.actions;
        let n = actions.len();
        let txns = model.transactions.len();

        let blocking = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&k| k != i && actions[k].priority < actions[i].priority)
                    .map(|k| topo.sync_set_cost_idx(k))
                    .max()
                    .unwrap_or(Time::ZERO)
            })
            .collect();

        let mut same_ge = vec![Time::ZERO; n];
        let mut not_caused = vec![Time::ZERO; n];
        let mut other_ge = vec![vec![Time::ZERO; txns]; n];
        for i in 0..n {
            for l in 0..n {
                if actions[l].priority < actions[i].priority {
                    continue;
                }
                let c = actions[l].exec_time();
                if topo.transaction_of(l) == topo.transaction_of(i) {
                    same_ge[i] += c;
                    if !topo.causes_idx(i, l) {
                        not_caused[i] += c;
                    }
                } else {
                    other_ge[i][topo.transaction_of(l)] += c;
                }
            }
        }

        Ok(Analysis { topo, config: model.config, blocking, same_ge, not_caused, other_ge })
    }

    pub fn topology(&self) -> &Topology<'m> {
        &self.topo
    }

    fn model(&self) -> &'m SystemModel {
        self.topo.model()
    }

    fn pattern(&self, i: usize) -> &'m crate::model::ArrivalPattern {
        &self.model().transactions[self.topo.transaction_of(i)].arrival
    }

    fn idx(&self, id: &str) -> Result<usize, AnalysisError> {
        Ok(self.topo.index_of(id)?)
    }

    fn txn_idx(&self, id: &str) -> Result<usize, AnalysisError> {
        self.model()
            .transactions
            .iter()
            .position(|t| t.id.as_str() == id)
            .ok_or_else(|| AnalysisError::Model(ModelError::UnknownAction(id.into())))
    }

    /// Longest strictly-lower-priority synchronous set: the single
    /// non-preemptible section that can be running when A_i is released.
    pub fn blocking(&self, action: &str) -> Result<Time, AnalysisError> {
        Ok(self.blocking[self.idx(action)?])
    }

    fn other_idx(&self, i: usize, k: usize, window: Time) -> Time {
        let sum = self.other_ge[i][k];
        if sum.is_zero() {
            return Time::ZERO;
        }
        let p = &self.model().transactions[k].arrival;
        sum.saturating_mul(interference_count_other(p, window))
    }

    /// Interference on A_i in `[0, W]` from transaction `k ≠ τ(i)`.
    pub fn interference_other(
        &self,
        action: &str,
        transaction: &str,
        window: Time,
    ) -> Result<Time, AnalysisError> {
        let (i, k) = (self.idx(action)?, self.txn_idx(transaction)?);
        if k == self.topo.transaction_of(i) {
            return Ok(Time::ZERO);
        }
        Ok(self.other_idx(i, k, window))
    }

    fn all_others(&self, i: usize, window: Time) -> Time {
        let own = self.topo.transaction_of(i);
        (0..self.model().transactions.len())
            .filter(|&k| k != own)
            .map(|k| self.other_idx(i, k, window))
            .sum()
    }

    fn past_idx(&self, i: usize, q: u32) -> Time {
        let p = self.pattern(i);
        let before = burst_index(q, p).preceding(p.burst);
        self.same_ge[i].saturating_mul(before)
    }

    /// Work of the `q − 1` earlier instances of A_i's own transaction.
    pub fn interference_same_past(&self, action: &str, q: u32) -> Result<Time, AnalysisError> {
        Ok(self.past_idx(self.idx(action)?, q))
    }

    /// Releases of instance `q` onward of the own transaction inside
    /// `[0, W]`, floored at zero. Instance `q` may have been delayed by the
    /// full jitter while later ones were not, so the window is widened by
    /// `J` as for other transactions.
    fn future_count(&self, i: usize, q: u32, window: Time) -> u64 {
        let p = self.pattern(i);
        let before = burst_index(q, p).preceding(p.burst);
        releases_in(window.saturating_add(p.jitter), p).saturating_sub(before)
    }

    fn future_idx(&self, i: usize, q: u32, window: Time) -> Time {
        self.not_caused[i].saturating_mul(self.future_count(i, q, window))
    }

    /// Interference from instances `q, q+1, …` of the own transaction,
    /// counting only actions A_i does not cause.
    pub fn interference_same_future(
        &self,
        action: &str,
        q: u32,
        window: Time,
    ) -> Result<Time, AnalysisError> {
        Ok(self.future_idx(self.idx(action)?, q, window))
    }

    fn fixed_point(
        &self,
        i: usize,
        q: u32,
        seed: Time,
        rhs: impl Fn(Time) -> Time,
    ) -> Result<Time, AnalysisError> {
        let limit = self.config.max_window;
        let mut w = seed;
        loop {
            if w > limit {
                return Err(AnalysisError::WindowOverflow {
                    action: self.topo.id(i).clone(),
                    q,
                    limit,
                });
            }
            let next = rhs(w);
            debug_assert!(next >= w, "fixed-point iteration must be monotone");
            if next == w {
                return Ok(w);
            }
            w = next;
        }
    }

    fn start_async_idx(&self, i: usize, q: u32) -> Result<Time, AnalysisError> {
        let base = self.blocking[i].saturating_add(self.past_idx(i, q));
        self.fixed_point(i, q, base, |w| {
            base.saturating_add(self.all_others(i, w)).saturating_add(self.future_idx(i, q, w))
        })
    }

    fn start_sync_idx(&self, i: usize, q: u32) -> Result<Time, AnalysisError> {
        let g = self.topo.async_root_idx(i);
        let chain = self.topo.partial_chain_cost_idx(g, i).unwrap_or(Time::ZERO);
        let base = self.blocking[g]
            .saturating_add(self.past_idx(g, q))
            .saturating_add(chain)
            .saturating_add(self.not_caused[g]);
        self.fixed_point(i, q, base, |w| {
            let later = self.future_count(g, q, w).saturating_sub(1);
            base.saturating_add(self.all_others(g, w))
                .saturating_add(self.not_caused[g].saturating_mul(later))
        })
    }

    fn start_idx(&self, i: usize, q: u32) -> Result<Time, AnalysisError> {
        if self.topo.is_sync_called(i) {
            self.start_sync_idx(i, q)
        } else {
            self.start_async_idx(i, q)
        }
    }

    /// Worst-case start of instance `q` of a signal- or externally-triggered
    /// action.
    pub fn start_time_async(&self, action: &str, q: u32) -> Result<Time, AnalysisError> {
        let i = self.idx(action)?;
        debug_assert!(!self.topo.is_sync_called(i));
        self.start_async_idx(i, q)
    }

    /// Worst-case start of instance `q` of a synchronously called action.
    pub fn start_time_sync(&self, action: &str, q: u32) -> Result<Time, AnalysisError> {
        let i = self.idx(action)?;
        debug_assert!(self.topo.is_sync_called(i));
        self.start_sync_idx(i, q)
    }

    /// Dispatches to the asynchronous or synchronous start-time equation.
    pub fn start_time(&self, action: &str, q: u32) -> Result<Time, AnalysisError> {
        self.start_idx(self.idx(action)?, q)
    }

    /// `F = S + C(Υ(A_i))`.
    pub fn finish_time(&self, action: &str, start: Time) -> Result<Time, AnalysisError> {
        Ok(start + self.topo.sync_set_cost_idx(self.idx(action)?))
    }

    /// Level-π(A_i) demand released in `[0, w)` after a critical instant,
    /// counting whole own-transaction instances at priority ≥ π(A_i). The
    /// longest busy period is its least fixed point; a release exactly at
    /// its end opens a new one.
    fn busy_demand(&self, i: usize, w: Time) -> Time {
        let p = self.pattern(i);
        let before = w.saturating_sub(Time::new(1));
        self.blocking[i]
            .saturating_add(self.all_others(i, before))
            .saturating_add(self.same_ge[i].saturating_mul(releases_in(before.saturating_add(p.jitter), p)))
    }

    fn analyze_idx(&self, i: usize) -> ActionResult {
        let a = &self.model().actions[i];
        let p = self.pattern(i);
        let cost = self.topo.sync_set_cost_idx(i);
        let mut per_instance = Vec::new();
        let mut guard = None;

        // Busy-period iterate, advanced lazily; it only ever needs to be
        // compared with the next release.
        let mut busy = self.blocking[i].saturating_add(self.same_ge[i]);
        let mut busy_closed = false;
        let mut q = 1;
        loop {
            if q > self.config.max_busy_instances {
                guard = Some(AnalysisError::BusyPeriodOverflow {
                    action: a.id.clone(),
                    limit: self.config.max_busy_instances,
                });
                break;
            }
            let start = match self.start_idx(i, q) {
                Ok(s) => s,
                Err(e) => {
                    guard = Some(e);
                    break;
                }
            };
            let finish = start + cost;
            let arrival = arrival_time(q, p);
            let response = finish.saturating_add(p.jitter).saturating_sub(arrival);
            per_instance.push(InstanceResult { q, start, finish, response });
            // Instance q+1 is released no earlier than Arr(q+1) − J. It
            // needs examining if that is before instance q finishes or
            // before the busy period can end: work caused by earlier
            // instances (asynchronous descendants) may still be pending.
            let next = arrival_time(q + 1, p).saturating_sub(p.jitter);
            while !busy_closed && busy <= next {
                let grown = self.busy_demand(i, busy);
                busy_closed = grown == busy;
                busy = grown;
            }
            if finish <= next && busy <= next {
                break;
            }
            q += 1;
        }

        self.result(i, per_instance, guard)
    }

    fn result(&self, i: usize, per_instance: Vec<InstanceResult>, guard: Option<AnalysisError>) -> ActionResult {
        let a = &self.model().actions[i];
        let wcrt = match guard {
            None => per_instance.iter().map(|r| r.response).max(),
            Some(_) => None,
        };
        ActionResult {
            action: a.id.clone(),
            transaction: a.transaction.clone(),
            priority: a.priority,
            deadline: a.deadline,
            wcrt,
            instances: per_instance.len() as u32,
            per_instance,
            feasible: wcrt.is_some_and(|r| r <= a.deadline),
            diagnostic: guard.map(|e| e.to_string()),
        }
    }

    pub fn analyze_action(&self, action: &str) -> Result<ActionResult, AnalysisError> {
        Ok(self.analyze_idx(self.idx(action)?))
    }

    /// Results for every action, ordered by transaction id, then action id.
    pub fn analyze_system(&self) -> AnalysisReport {
        let actions = &self.model().actions;
        let mut order: Vec<usize> = (0..actions.len()).collect();
        order.sort_by(|&x, &y| report_order(&actions[x].transaction, &actions[x].id, &actions[y].transaction, &actions[y].id));
        let results: Vec<ActionResult> = order.into_iter().map(|i| self.analyze_idx(i)).collect();
        let diagnostics = results
            .iter()
            .filter_map(|r| r.diagnostic.as_ref().map(|d| format!("{}: {d}", r.action)))
            .collect();
        AnalysisReport {
            system_feasible: results.iter().all(|r| r.feasible),
            results,
            diagnostics,
        }
    }
}

fn report_order(tx: &TransactionId, ax: &ActionId, ty: &TransactionId, ay: &ActionId) -> Ordering {
    natural_cmp(tx.as_str(), ty.as_str()).then_with(|| natural_cmp(ax.as_str(), ay.as_str()))
}

/// Analyses every action of a valid model.
pub fn analyze_system(model: &SystemModel) -> Result<AnalysisReport, AnalysisError> {
    Ok(Analysis::new(model)?.analyze_system())
}

pub fn analyze_action(model: &SystemModel, action: &str) -> Result<ActionResult, AnalysisError> {
    Analysis::new(model)?.analyze_action(action)
}
