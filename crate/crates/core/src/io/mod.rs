//! JSON model files, report rendering and the analysis-versus-simulation
//! check.
//!
//! A model file lists transactions, each with its arrival pattern and its
//! actions. Sub-action references in triggers are 1-based:
//!
//! ```json
//! {
//!   "transactions": [
//!     {
//!       "id": "tau1",
//!       "arrival": { "T": 60, "t": 60, "n": 1, "J": 3, "kind": "periodic" },
//!       "actions": [
//!         { "id": "A1", "priority": 10, "deadline": 60, "trigger": "external",
//!           "sub_actions": [ { "C": 5, "calls": "A4" }, { "C": 1 } ] },
//!         { "id": "A4", "priority": 10, "deadline": 60,
//!           "trigger": { "call_from": ["A1", 1] },
//!           "sub_actions": [ { "C": 6 } ] }
//!       ]
//!     }
//!   ],
//!   "config": { "max_busy_instances": 4096, "max_window": 16777216 }
//! }
//! ```

mod check;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{
    Action, AnalysisConfig, ArrivalPattern, Link, LinkKind, PatternKind, Priority, SubAction,
    SystemModel, Transaction, Trigger, Violation,
};
use crate::time::Time;

pub use check::{check, CheckConfig, CheckError, CheckOutcome, Counterexample};
pub use report::{render_report, ReportFormat};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read `{}`: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error{}: {message}", context_suffix(.context))]
    Schema { context: Option<String>, message: String },
    #[error("model failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    ValidationFailed(Vec<Violation>),
}

fn context_suffix(context: &Option<String>) -> String {
    context.as_ref().map(|c| format!(" in {c}")).unwrap_or_default()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    transactions: Vec<TransactionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<ConfigDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransactionDoc {
    id: String,
    arrival: ArrivalDoc,
    actions: Vec<ActionDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct ArrivalDoc {
    T: u64,
    t: u64,
    n: u32,
    J: u64,
    kind: PatternKind,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionDoc {
    id: String,
    priority: u32,
    deadline: u64,
    trigger: TriggerDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    owner: Option<String>,
    sub_actions: Vec<SubActionDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum TriggerDoc {
    External,
    SignalFrom(String, usize),
    CallFrom(String, usize),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct SubActionDoc {
    C: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sends: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    calls: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    #[serde(default = "default_instances")]
    max_busy_instances: u32,
    #[serde(default = "default_window")]
    max_window: u64,
}

fn default_instances() -> u32 {
    AnalysisConfig::DEFAULT_MAX_BUSY_INSTANCES
}

fn default_window() -> u64 {
    AnalysisConfig::DEFAULT_MAX_WINDOW.get()
}

pub fn parse_model_file(path: impl AsRef<Path>) -> Result<SystemModel, LoadError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| LoadError::Io { path: path.to_owned(), source })?;
    parse_model(&bytes)
}

/// Parses and validates a model document.
pub fn parse_model(bytes: &[u8]) -> Result<SystemModel, LoadError> {
    let model = parse_unvalidated(bytes)?;
    let violations = model.validate();
    if violations.is_empty() {
        Ok(model)
    } else {
        Err(LoadError::ValidationFailed(violations))
    }
}

/// Parses a model document without checking the model rules.
pub fn parse_unvalidated(bytes: &[u8]) -> Result<SystemModel, LoadError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| LoadError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e),
    })?;
    let doc = ModelDoc::deserialize(&value).map_err(|e| LoadError::Schema {
        context: locate_schema_error(&value),
        message: e.to_string(),
    })?;
    from_doc(doc)
}

fn strip_position(e: &serde_json::Error) -> String {
    let text = e.to_string();
    match text.rfind(" at line ") {
        Some(i) => text[..i].to_owned(),
        None => text,
    }
}

/// Names the innermost transaction or action whose subtree fails to
/// deserialize.
fn locate_schema_error(value: &Value) -> Option<String> {
    let txns = value.get("transactions")?.as_array()?;
    let label = |v: &Value, kind: &str, i: usize| match v.get("id").and_then(Value::as_str) {
        Some(id) => format!("{kind} `{id}`"),
        None => format!("{kind} #{}", i + 1),
    };
    for (i, txn) in txns.iter().enumerate() {
        if TransactionDoc::deserialize(txn).is_ok() {
            continue;
        }
        let here = label(txn, "transaction", i);
        let actions = txn.get("actions").and_then(Value::as_array);
        for (j, action) in actions.into_iter().flatten().enumerate() {
            if ActionDoc::deserialize(action).is_err() {
                return Some(format!("{here}, {}", label(action, "action", j)));
            }
        }
        return Some(here);
    }
    None
}

fn schema(context: String, message: impl Into<String>) -> LoadError {
    LoadError::Schema { context: Some(context), message: message.into() }
}

fn from_doc(doc: ModelDoc) -> Result<SystemModel, LoadError> {
    let mut model = SystemModel::default();
    if let Some(c) = doc.config {
        if c.max_busy_instances == 0 || c.max_window == 0 {
            return Err(schema("config".into(), "guards must be positive"));
        }
        model.config = AnalysisConfig { max_busy_instances: c.max_busy_instances, max_window: Time::new(c.max_window) };
    }
    for txn in doc.transactions {
        let a = txn.arrival;
        let arrival = ArrivalPattern {
            outer_period: Time::new(a.T),
            inner_period: Time::new(a.t),
            burst: a.n,
            jitter: Time::new(a.J),
            kind: a.kind,
        };
        let mut root = None;
        for action in txn.actions {
            let context = format!("transaction `{}`, action `{}`", txn.id, action.id);
            let trigger = match action.trigger {
                TriggerDoc::External => {
                    root.get_or_insert_with(|| action.id.clone());
                    Trigger::External
                }
                TriggerDoc::SignalFrom(from, index) => {
                    Trigger::Signal { from: from.into(), sub_action: zero_based(index, &context)? }
                }
                TriggerDoc::CallFrom(from, index) => {
                    Trigger::Call { from: from.into(), sub_action: zero_based(index, &context)? }
                }
            };
            let mut sub_actions = Vec::with_capacity(action.sub_actions.len());
            for (k, s) in action.sub_actions.into_iter().enumerate() {
                let generates = match (s.sends, s.calls) {
                    (None, None) => None,
                    (Some(target), None) => Some(Link { target: target.into(), kind: LinkKind::SendAsync }),
                    (None, Some(target)) => Some(Link { target: target.into(), kind: LinkKind::CallSync }),
                    (Some(_), Some(_)) => {
                        return Err(schema(context, format!("sub-action {} both sends and calls", k + 1)));
                    }
                };
                sub_actions.push(SubAction { exec_time: Time::new(s.C), generates });
            }
            model.actions.push(Action {
                id: action.id.into(),
                transaction: txn.id.clone().into(),
                priority: Priority(action.priority),
                deadline: Time::new(action.deadline),
                trigger,
                sub_actions,
                owner: action.owner,
            });
        }
        model.transactions.push(Transaction {
            id: txn.id.into(),
            arrival,
            // An empty root is reported by validation as a missing root.
            root: root.unwrap_or_default().into(),
        });
    }
    Ok(model)
}

fn zero_based(index: usize, context: &str) -> Result<usize, LoadError> {
    index.checked_sub(1).ok_or_else(|| schema(context.to_owned(), "sub-action indices start at 1"))
}

/// Renders a model as a pretty-printed document, actions grouped under
/// their transactions in list order. The default config is omitted.
pub fn serialize_model(model: &SystemModel) -> String {
    let transactions = model
        .transactions
        .iter()
        .map(|txn| TransactionDoc {
            id: txn.id.to_string(),
            arrival: ArrivalDoc {
                T: txn.arrival.outer_period.get(),
                t: txn.arrival.inner_period.get(),
                n: txn.arrival.burst,
                J: txn.arrival.jitter.get(),
                kind: txn.arrival.kind,
            },
            actions: model.actions_of(&txn.id).map(action_doc).collect(),
        })
        .collect();
    let config = (model.config != AnalysisConfig::default()).then(|| ConfigDoc {
        max_busy_instances: model.config.max_busy_instances,
        max_window: model.config.max_window.get(),
    });
    let mut out = serde_json::to_string_pretty(&ModelDoc { transactions, config }).expect("model documents serialize");
    out.push('\n');
    out
}

fn action_doc(a: &Action) -> ActionDoc {
    ActionDoc {
        id: a.id.to_string(),
        priority: a.priority.0,
        deadline: a.deadline.get(),
        trigger: match &a.trigger {
            Trigger::External => TriggerDoc::External,
            Trigger::Signal { from, sub_action } => TriggerDoc::SignalFrom(from.to_string(), sub_action + 1),
            Trigger::Call { from, sub_action } => TriggerDoc::CallFrom(from.to_string(), sub_action + 1),
        },
        owner: a.owner.clone(),
        sub_actions: a
            .sub_actions
            .iter()
            .map(|s| {
                let target = |kind| {
                    s.generates.as_ref().filter(|l| l.kind == kind).map(|l| l.target.to_string())
                };
                SubActionDoc { C: s.exec_time.get(), sends: target(LinkKind::SendAsync), calls: target(LinkKind::CallSync) }
            })
            .collect(),
    }
}
