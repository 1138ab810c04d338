//! Hand-built models shared by unit tests.

use super::*;

fn action(
    id: &str,
    txn: &str,
    prio: u32,
    deadline: u64,
    trigger: Trigger,
    subs: Vec<SubAction>,
) -> Action {
    Action {
        id: id.into(),
        transaction: txn.into(),
        priority: Priority(prio),
        deadline: Time::new(deadline),
        trigger,
        sub_actions: subs,
        owner: None,
    }
}

fn signal(from: &str, sub: usize) -> Trigger {
    Trigger::Signal { from: from.into(), sub_action: sub }
}

fn call(from: &str, sub: usize) -> Trigger {
    Trigger::Call { from: from.into(), sub_action: sub }
}

/// The automatic gauge control case study: three transactions, twelve
/// actions. The second transaction's external event is named after its
/// root action `A2`; `J` of the third transaction is zero.
pub(crate) fn case_study() -> SystemModel {
    use SubAction as S;
    let t = Time::new;
    SystemModel {
        transactions: vec![
            Transaction {
                id: "tau1".into(),
                arrival: ArrivalPattern::periodic(t(60), t(3)),
                root: "A1".into(),
            },
            Transaction {
                id: "tau2".into(),
                arrival: ArrivalPattern::aperiodic(t(200), t(5)),
                root: "A2".into(),
            },
            Transaction {
                id: "tau3".into(),
                arrival: ArrivalPattern::sporadically_periodic(t(900), t(300), 3, t(0)),
                root: "A3".into(),
            },
        ],
        actions: vec![
            action(
                "A1",
                "tau1",
                10,
                60,
                Trigger::External,
                vec![S::call(5, "A4"), S::send(1, "A5"), S::call(1, "A6")],
            ),
            action("A4", "tau1", 10, 60, call("A1", 0), vec![S::plain(5), S::plain(1)]),
            action("A5", "tau1", 10, 60, signal("A1", 1), vec![S::plain(5)]),
            action("A6", "tau1", 10, 60, call("A1", 2), vec![S::plain(3)]),
            action(
                "A2",
                "tau2",
                9,
                125,
                Trigger::External,
                vec![S::plain(4), S::send(1, "A7"), S::plain(5)],
            ),
            action(
                "A7",
                "tau2",
                9,
                125,
                signal("A2", 1),
                vec![S::call(4, "A8"), S::call(1, "A9"), S::plain(5), S::plain(1)],
            ),
            action("A8", "tau2", 9, 125, call("A7", 0), vec![S::plain(6), S::plain(1)]),
            action("A9", "tau2", 9, 125, call("A7", 1), vec![S::plain(8), S::plain(1)]),
            action(
                "A3",
                "tau3",
                8,
                250,
                Trigger::External,
                vec![
                    S::call(1, "A10"),
                    S::plain(3),
                    S::call(1, "A11"),
                    S::send(1, "A12"),
                    S::plain(4),
                ],
            ),
            action("A10", "tau3", 8, 250, call("A3", 0), vec![S::plain(7), S::plain(1)]),
            action("A11", "tau3", 8, 250, call("A3", 2), vec![S::plain(6), S::plain(1)]),
            action("A12", "tau3", 7, 250, signal("A3", 3), vec![S::plain(30)]),
        ],
        config: AnalysisConfig::default(),
    }
}

/// One transaction holding one action with a single sub-action.
pub(crate) fn singleton(c: u64, period: u64, jitter: u64, deadline: u64) -> SystemModel {
    SystemModel {
        transactions: vec![Transaction {
            id: "t".into(),
            arrival: ArrivalPattern::periodic(Time::new(period), Time::new(jitter)),
            root: "A".into(),
        }],
        actions: vec![action("A", "t", 1, deadline, Trigger::External, vec![SubAction::plain(c)])],
        config: AnalysisConfig::default(),
    }
}

/// Independent single-action transactions `(id, priority, C, T, J)`.
pub(crate) fn independent(tasks: &[(&str, u32, u64, u64, u64)]) -> SystemModel {
    let mut m = SystemModel::default();
    for &(id, prio, c, period, jitter) in tasks {
        let txn = format!("t_{id}");
        m.transactions.push(Transaction {
            id: txn.as_str().into(),
            arrival: ArrivalPattern::periodic(Time::new(period), Time::new(jitter)),
            root: id.into(),
        });
        m.actions.push(action(id, &txn, prio, period, Trigger::External, vec![SubAction::plain(c)]));
    }
    m
}
