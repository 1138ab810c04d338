use std::collections::HashMap;

use thiserror::Error;

use super::{natural_cmp, ActionId, LinkKind, PatternKind, SystemModel, TransactionId, Trigger};
use crate::time::Time;

/// A broken structural rule. Violations are reported, not raised.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Error)]
pub enum Violation {
    #[error("duplicate transaction id `{0}`")]
    DuplicateTransaction(TransactionId),
    #[error("duplicate action id `{0}`")]
    DuplicateAction(ActionId),
    #[error("transaction `{transaction}`: {reason}")]
    InvalidArrival { transaction: TransactionId, reason: &'static str },
    #[error("transaction `{transaction}`: burst of {burst} x {inner} exceeds outer period {outer}")]
    BurstExceedsOuterPeriod { transaction: TransactionId, burst: u32, inner: Time, outer: Time },
    #[error("transaction `{transaction}`: periodic and aperiodic events need n = 1 and t = T")]
    NotABurstPattern { transaction: TransactionId },
    #[error("action `{action}` belongs to unknown transaction `{transaction}`")]
    UnknownTransaction { action: ActionId, transaction: TransactionId },
    #[error("action `{0}` has priority 0; priorities are positive")]
    ZeroPriority(ActionId),
    #[error("transaction `{transaction}` has no externally triggered root `{root}`")]
    MissingRoot { transaction: TransactionId, root: ActionId },
    #[error("action `{0}` is externally triggered but is not its transaction's root")]
    NonRootExternal(ActionId),
    #[error("sub-action {sub_action} of `{action}` targets unknown action `{target}`")]
    UnresolvedTarget { action: ActionId, sub_action: usize, target: ActionId },
    #[error("`{action}` links to `{target}` in another transaction")]
    CrossTransactionLink { action: ActionId, target: ActionId },
    #[error("action `{0}` is triggered by more than one sub-action")]
    MultipleTriggers(ActionId),
    #[error("trigger of action `{0}` does not match the sub-action that generates it")]
    TriggerMismatch(ActionId),
    #[error("`{callee}` (priority {callee_priority}) is called synchronously by `{caller}` (priority {caller_priority})")]
    PrioritiesDifferOnSyncCall { caller: ActionId, callee: ActionId, caller_priority: u32, callee_priority: u32 },
    #[error("`{sender}` (priority {sender_priority}) signals higher-priority `{target}` (priority {target_priority})")]
    SignalRaisesPriority { sender: ActionId, target: ActionId, sender_priority: u32, target_priority: u32 },
    #[error("event graph has a cycle through {}", display_ids(.0))]
    CyclicEventGraph(Vec<ActionId>),
}

fn display_ids(ids: &[ActionId]) -> String {
    ids.iter().map(|a| format!("`{a}`")).collect::<Vec<_>>().join(", ")
}

/// Checks every structural rule and returns the violations found.
pub fn validate(model: &SystemModel) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut txns = HashMap::new();
    for t in &model.transactions {
        if txns.insert(t.id.as_str(), t).is_some() {
            out.push(Violation::DuplicateTransaction(t.id.clone()));
        }
        check_arrival(t.id.clone(), &t.arrival, &mut out);
    }

    let mut actions = HashMap::new();
    for a in &model.actions {
        if actions.insert(a.id.as_str(), a).is_some() {
            out.push(Violation::DuplicateAction(a.id.clone()));
        }
        if !txns.contains_key(a.transaction.as_str()) {
            out.push(Violation::UnknownTransaction {
                action: a.id.clone(),
                transaction: a.transaction.clone(),
            });
        }
        if a.priority.0 == 0 {
            out.push(Violation::ZeroPriority(a.id.clone()));
        }
    }

    for t in &model.transactions {
        let ok = actions
            .get(t.root.as_str())
            .is_some_and(|a| a.transaction == t.id && a.trigger == Trigger::External);
        if !ok {
            out.push(Violation::MissingRoot { transaction: t.id.clone(), root: t.root.clone() });
        }
    }

    // Generators per target, from the sub-action side.
    let mut generators: HashMap<&str, Vec<(&ActionId, usize, LinkKind)>> = HashMap::new();
    for a in &model.actions {
        for (j, sub) in a.sub_actions.iter().enumerate() {
            let Some(link) = &sub.generates else { continue };
            let Some(target) = actions.get(link.target.as_str()) else {
                out.push(Violation::UnresolvedTarget {
                    action: a.id.clone(),
                    sub_action: j,
                    target: link.target.clone(),
                });
                continue;
            };
            if target.transaction != a.transaction {
                out.push(Violation::CrossTransactionLink {
                    action: a.id.clone(),
                    target: link.target.clone(),
                });
            }
            match link.kind {
                LinkKind::CallSync if target.priority != a.priority => {
                    out.push(Violation::PrioritiesDifferOnSyncCall {
                        caller: a.id.clone(),
                        callee: target.id.clone(),
                        caller_priority: a.priority.0,
                        callee_priority: target.priority.0,
                    });
                }
                LinkKind::SendAsync if target.priority > a.priority => {
                    out.push(Violation::SignalRaisesPriority {
                        sender: a.id.clone(),
                        target: target.id.clone(),
                        sender_priority: a.priority.0,
                        target_priority: target.priority.0,
                    });
                }
                _ => {}
            }
            generators.entry(link.target.as_str()).or_default().push((&a.id, j, link.kind));
        }
    }

    for a in &model.actions {
        let gens = generators.get(a.id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        if gens.len() > 1 {
            out.push(Violation::MultipleTriggers(a.id.clone()));
            continue;
        }
        match &a.trigger {
            Trigger::External => {
                let is_root = txns.get(a.transaction.as_str()).is_some_and(|t| t.root == a.id);
                if !is_root {
                    out.push(Violation::NonRootExternal(a.id.clone()));
                } else if !gens.is_empty() {
                    out.push(Violation::TriggerMismatch(a.id.clone()));
                }
            }
            Trigger::Signal { from, sub_action } | Trigger::Call { from, sub_action } => {
                let kind = if a.trigger.is_call() { LinkKind::CallSync } else { LinkKind::SendAsync };
                let matches = gens
                    .first()
                    .is_some_and(|&(g, j, k)| g == from && j == *sub_action && k == kind);
                if !matches {
                    out.push(Violation::TriggerMismatch(a.id.clone()));
                }
            }
        }
    }

    find_cycles(&actions, &mut out);
    out
}

fn check_arrival(
    transaction: TransactionId,
    p: &super::ArrivalPattern,
    out: &mut Vec<Violation>,
) {
    let reason = if p.outer_period.is_zero() {
        Some("outer period must be positive")
    } else if p.inner_period.is_zero() {
        Some("inner period must be positive")
    } else if p.burst == 0 {
        Some("burst count must be at least 1")
    } else {
        None
    };
    if let Some(reason) = reason {
        out.push(Violation::InvalidArrival { transaction, reason });
        return;
    }
    if p.inner_period.saturating_mul(p.burst as u64) > p.outer_period {
        out.push(Violation::BurstExceedsOuterPeriod {
            transaction: transaction.clone(),
            burst: p.burst,
            inner: p.inner_period,
            outer: p.outer_period,
        });
    }
    let single = matches!(p.kind, PatternKind::Periodic | PatternKind::Aperiodic);
    if single && (p.burst != 1 || p.inner_period != p.outer_period) {
        out.push(Violation::NotABurstPattern { transaction });
    }
}

/// Reports each non-trivial strongly connected component of the link graph
/// once, with its members in natural id order.
fn find_cycles(
    actions: &HashMap<&str, &super::Action>,
    out: &mut Vec<Violation>,
) {
    let mut ids: Vec<&str> = actions.keys().copied().collect();
    ids.sort_by(|a, b| natural_cmp(a, b));
    let pos: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let succ: Vec<Vec<usize>> = ids
        .iter()
        .map(|id| {
            let mut s: Vec<usize> = actions[id]
                .sub_actions
                .iter()
                .filter_map(|sub| sub.generates.as_ref())
                .filter_map(|l| pos.get(l.target.as_str()).copied())
                .collect();
            s.sort_unstable();
            s
        })
        .collect();

    let mut sccs = tarjan(&succ);
    sccs.retain(|c| c.len() > 1 || succ[c[0]].contains(&c[0]));
    for c in &mut sccs {
        c.sort_unstable();
    }
    sccs.sort();
    for c in sccs {
        out.push(Violation::CyclicEventGraph(c.into_iter().map(|i| ActionId::from(ids[i])).collect()));
    }
}

fn tarjan(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        succ: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        out: Vec<Vec<usize>>,
    }

    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for k in 0..s.succ[v].len() {
            let w = s.succ[v][k];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = s.stack.pop() {
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            s.out.push(comp);
        }
    }

    let n = succ.len();
    let mut s = State {
        succ,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        out: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.out
}

/// Set view used by tests to compare violation lists regardless of order.
#[cfg(test)]
pub(crate) fn as_set(v: &[Violation]) -> std::collections::HashSet<Violation> {
    v.iter().cloned().collect()
}
