//! Worst-case response-time analysis for object-oriented real-time control
//! models executed non-preemptively, one run-to-completion action at a time,
//! under fixed priorities.
//!
//! The crate is split into:
//!
//! - [`model`]: transactions, actions, sub-actions and structural checks;
//! - [`analysis`]: blocking, interference and busy-period fixed points;
//! - [`sim`]: a discrete-event simulator of the same execution semantics,
//!   used as an independent oracle for the analysis;
//! - [`io`]: the JSON model format, report rendering and the
//!   analysis-versus-simulation check.

pub mod analysis;
pub mod io;
pub mod model;
pub mod sim;
pub mod synth;
pub mod time;

pub use analysis::{analyze_action, analyze_system, ActionResult, AnalysisReport};
pub use model::{
    Action, ActionId, AnalysisConfig, ArrivalPattern, Link, LinkKind, ModelError, PatternKind,
    Priority, SubAction, SystemModel, Transaction, TransactionId, Trigger, Violation,
};
pub use sim::{simulate, SimConfig, SimTrace};
pub use time::Time;
