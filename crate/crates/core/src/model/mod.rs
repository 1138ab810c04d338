//! Domain model: transactions, actions, sub-actions and the event links
//! between them.
//!
//! A [`SystemModel`] is plain data. Structural rules are checked by
//! [`validate`]; the derived relations (causes, synchronous sets, call-chain
//! costs) live on [`Topology`], which can only be built from a valid model.

mod topology;
mod validate;

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::Time;

pub use topology::Topology;
pub use validate::{validate, Violation};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

string_id!(
    /// Identifier of an action (and of the event that triggers it).
    ActionId
);
string_id!(
    /// Identifier of a transaction.
    TransactionId
);

/// Fixed priority of an action. Larger numbers are more urgent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Priority(pub u32);

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Periodic,
    Aperiodic,
    SporadicallyPeriodic,
}

/// Arrival pattern of a transaction's external event.
///
/// Releases come in bursts of `burst` events spaced `inner_period` apart;
/// bursts start `outer_period` apart. Every release may be delayed by up to
/// `jitter`. Periodic and aperiodic events are the degenerate case
/// `burst == 1`, `inner_period == outer_period`, where the period of an
/// aperiodic event is its worst-case inter-arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArrivalPattern {
    pub outer_period: Time,
    pub inner_period: Time,
    pub burst: u32,
    pub jitter: Time,
    pub kind: PatternKind,
}

impl ArrivalPattern {
    pub fn periodic(period: Time, jitter: Time) -> Self {
        ArrivalPattern {
            outer_period: period,
            inner_period: period,
            burst: 1,
            jitter,
            kind: PatternKind::Periodic,
        }
    }

    pub fn aperiodic(min_interarrival: Time, jitter: Time) -> Self {
        ArrivalPattern {
            kind: PatternKind::Aperiodic,
            ..ArrivalPattern::periodic(min_interarrival, jitter)
        }
    }

    pub fn sporadically_periodic(outer: Time, inner: Time, burst: u32, jitter: Time) -> Self {
        ArrivalPattern {
            outer_period: outer,
            inner_period: inner,
            burst,
            jitter,
            kind: PatternKind::SporadicallyPeriodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    /// Asynchronous signal: the target is queued when the sub-action ends.
    SendAsync,
    /// Synchronous call: the target runs inline, the caller resumes after
    /// the callee's synchronous set completes.
    CallSync,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Link {
    pub target: ActionId,
    pub kind: LinkKind,
}

/// Primitive step of an action.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubAction {
    pub exec_time: Time,
    pub generates: Option<Link>,
}

impl SubAction {
    pub fn plain(exec_time: impl Into<Time>) -> Self {
        SubAction { exec_time: exec_time.into(), generates: None }
    }

    pub fn send(exec_time: impl Into<Time>, target: impl Into<ActionId>) -> Self {
        SubAction {
            exec_time: exec_time.into(),
            generates: Some(Link { target: target.into(), kind: LinkKind::SendAsync }),
        }
    }

    pub fn call(exec_time: impl Into<Time>, target: impl Into<ActionId>) -> Self {
        SubAction {
            exec_time: exec_time.into(),
            generates: Some(Link { target: target.into(), kind: LinkKind::CallSync }),
        }
    }
}

/// What triggers an action. Sub-action indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Trigger {
    External,
    Signal { from: ActionId, sub_action: usize },
    Call { from: ActionId, sub_action: usize },
}

impl Trigger {
    pub fn is_call(&self) -> bool {
        matches!(self, Trigger::Call { .. })
    }
}

/// Run-to-completion handler for one event.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Action {
    pub id: ActionId,
    pub transaction: TransactionId,
    pub priority: Priority,
    /// Relative to the nominal arrival of the transaction's external event.
    pub deadline: Time,
    pub trigger: Trigger,
    pub sub_actions: Vec<SubAction>,
    /// Owning active object. Informational only.
    pub owner: Option<String>,
}

impl Action {
    /// `C(A)`: the sum of the sub-action execution times.
    pub fn exec_time(&self) -> Time {
        self.sub_actions.iter().map(|s| s.exec_time).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub id: TransactionId,
    pub arrival: ArrivalPattern,
    pub root: ActionId,
}

/// Termination guards for the busy-period analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnalysisConfig {
    pub max_busy_instances: u32,
    pub max_window: Time,
}

impl AnalysisConfig {
    pub const DEFAULT_MAX_BUSY_INSTANCES: u32 = 4096;
    pub const DEFAULT_MAX_WINDOW: Time = Time::new(1 << 24);
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            max_busy_instances: Self::DEFAULT_MAX_BUSY_INSTANCES,
            max_window: Self::DEFAULT_MAX_WINDOW,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SystemModel {
    pub transactions: Vec<Transaction>,
    pub actions: Vec<Action>,
    pub config: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown action `{0}`")]
    UnknownAction(ActionId),
    #[error("action `{action}` is not a proper member of the synchronous set of `{root}`")]
    NotSynchronouslyReachable { root: ActionId, action: ActionId },
    #[error("model is invalid: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl SystemModel {
    pub fn action(&self, id: &str) -> Option<&Action> {
        self.actions.iter().find(|a| a.id.as_str() == id)
    }

    pub fn transaction(&self, id: &str) -> Option<&Transaction> {
        self.transactions.iter().find(|t| t.id.as_str() == id)
    }

    pub fn actions_of<'a>(&'a self, txn: &'a TransactionId) -> impl Iterator<Item = &'a Action> + 'a {
        self.actions.iter().filter(move |a| &a.transaction == txn)
    }

    /// Structural violations; empty when the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    pub fn topology(&self) -> Result<Topology<'_>, ModelError> {
        Topology::new(self)
    }

    pub fn causes(&self, a: &str, b: &str) -> Result<bool, ModelError> {
        self.topology()?.causes(a, b)
    }

    pub fn synchronous_set(&self, a: &str) -> Result<Vec<ActionId>, ModelError> {
        self.topology()?.synchronous_set(a)
    }

    pub fn sync_set_cost(&self, a: &str) -> Result<Time, ModelError> {
        self.topology()?.sync_set_cost(a)
    }

    pub fn partial_chain_cost(&self, root: &str, member: &str) -> Result<Time, ModelError> {
        self.topology()?.partial_chain_cost(root, member)
    }

    pub fn async_root(&self, a: &str) -> Result<ActionId, ModelError> {
        self.topology()?.async_root(a)
    }

    /// Orders identifiers so that `A2` sorts before `A10`.
    pub fn id_order(a: &str, b: &str) -> std::cmp::Ordering {
        natural_cmp(a, b)
    }
}

/// Compares strings treating runs of ASCII digits as numbers.
pub fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    use std::cmp::Ordering;

    let (mut x, mut y) = (a.as_bytes(), b.as_bytes());
    loop {
        match (x.first(), y.first()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(cx), Some(cy)) if cx.is_ascii_digit() && cy.is_ascii_digit() => {
                let nx = x.iter().take_while(|c| c.is_ascii_digit()).count();
                let ny = y.iter().take_while(|c| c.is_ascii_digit()).count();
                let (dx, dy) = (trim_zeros(&x[..nx]), trim_zeros(&y[..ny]));
                let ord = dx.len().cmp(&dy.len()).then_with(|| dx.cmp(dy));
                if ord != Ordering::Equal {
                    return ord;
                }
                x = &x[nx..];
                y = &y[ny..];
            }
            (Some(cx), Some(cy)) => {
                if cx != cy {
                    return cx.cmp(cy);
                }
                x = &x[1..];
                y = &y[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let n = digits.iter().take_while(|&&c| c == b'0').count();
    &digits[n..]
}

#[cfg(test)]
pub(crate) mod fixtures;
