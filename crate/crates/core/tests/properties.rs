use std::collections::HashMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtsched_core::io::{parse_model, serialize_model};
use rtsched_core::sim::{simulate, SimConfig, TraceEvent};
use rtsched_core::synth::{random_model, SynthParams};
use rtsched_core::{analyze_system, AnalysisReport, SystemModel, Time};

fn model_from(seed: u64) -> SystemModel {
    random_model(&mut ChaCha8Rng::seed_from_u64(seed), &SynthParams::default())
}

fn bounds(report: &AnalysisReport) -> HashMap<String, Option<Time>> {
    report.results.iter().map(|r| (r.action.to_string(), r.wcrt)).collect()
}

fn longest_period(m: &SystemModel) -> u64 {
    m.transactions.iter().map(|t| t.arrival.outer_period.get()).max().unwrap()
}

/// `None` means unbounded.
fn not_below(after: Option<Time>, before: Option<Time>) -> bool {
    match (after, before) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(a), Some(b)) => a >= b,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simulated_responses_never_exceed_bounds(model_seed: u64, sim_seed: u64, critical: bool) {
        let m = model_from(model_seed);
        let report = analyze_system(&m).unwrap();
        let duration = Time::new(12 * longest_period(&m));
        let cfg = if critical { SimConfig::critical(duration) } else { SimConfig::random(duration, sim_seed) };
        let trace = simulate(&m, &cfg).unwrap();
        for r in &report.results {
            if let (Some(bound), Ok(seen)) = (r.wcrt, trace.max_observed(r.action.as_str())) {
                prop_assert!(seen <= bound, "{}: observed {} > bound {}", r.action, seen, bound);
            }
        }
    }

    #[test]
    fn finish_minus_start_is_the_synchronous_set_cost(seed: u64) {
        let m = model_from(seed);
        let topo = m.topology().unwrap();
        for r in analyze_system(&m).unwrap().results {
            let cost = topo.sync_set_cost(r.action.as_str()).unwrap();
            for (k, inst) in r.per_instance.iter().enumerate() {
                prop_assert_eq!(inst.finish, inst.start + cost);
                prop_assert_eq!(inst.q as usize, k + 1);
            }
            prop_assert_eq!(r.instances as usize, r.per_instance.len());
            prop_assert_eq!(r.feasible, r.wcrt.is_some_and(|w| w <= r.deadline));
        }
    }

    #[test]
    fn longer_execution_never_shortens_responses(seed: u64, pick: u64) {
        let m = model_from(seed);
        let before = bounds(&analyze_system(&m).unwrap());
        let mut bumped = m.clone();
        let subs: Vec<(usize, usize)> = bumped.actions.iter().enumerate()
            .flat_map(|(a, x)| (0..x.sub_actions.len()).map(move |s| (a, s))).collect();
        let (a, s) = subs[(pick % subs.len() as u64) as usize];
        bumped.actions[a].sub_actions[s].exec_time += Time::new(1);
        let after = bounds(&analyze_system(&bumped).unwrap());
        for (id, b) in &before {
            prop_assert!(not_below(after[id], *b), "{id}: {:?} -> {:?}", b, after[id]);
        }
    }

    #[test]
    fn more_jitter_never_shortens_responses(seed: u64, pick: u64) {
        let m = model_from(seed);
        let before = bounds(&analyze_system(&m).unwrap());
        let mut bumped = m.clone();
        let k = (pick % bumped.transactions.len() as u64) as usize;
        bumped.transactions[k].arrival.jitter += Time::new(1);
        let after = bounds(&analyze_system(&bumped).unwrap());
        for (id, b) in &before {
            prop_assert!(not_below(after[id], *b), "{id}: {:?} -> {:?}", b, after[id]);
        }
    }

    #[test]
    fn scaling_time_scales_results(seed: u64, s in 2u64..5) {
        let m = model_from(seed);
        let mut scaled = m.clone();
        for t in &mut scaled.transactions {
            let a = &mut t.arrival;
            a.outer_period = a.outer_period.saturating_mul(s);
            a.inner_period = a.inner_period.saturating_mul(s);
            a.jitter = a.jitter.saturating_mul(s);
        }
        for a in &mut scaled.actions {
            a.deadline = a.deadline.saturating_mul(s);
            for sub in &mut a.sub_actions {
                sub.exec_time = sub.exec_time.saturating_mul(s);
            }
        }
        let (base, big) = (analyze_system(&m).unwrap(), analyze_system(&scaled).unwrap());
        prop_assert_eq!(base.system_feasible, big.system_feasible);
        for (x, y) in base.results.iter().zip(&big.results) {
            prop_assert_eq!(x.feasible, y.feasible);
            prop_assert_eq!(x.wcrt.map(|w| w.saturating_mul(s)), y.wcrt);
            prop_assert_eq!(x.per_instance.len(), y.per_instance.len());
            for (p, q) in x.per_instance.iter().zip(&y.per_instance) {
                prop_assert_eq!(p.start.saturating_mul(s), q.start);
                prop_assert_eq!(p.finish.saturating_mul(s), q.finish);
                prop_assert_eq!(p.response.saturating_mul(s), q.response);
            }
        }
    }

    #[test]
    fn reordering_lists_changes_nothing(seed: u64, shuffle_seed: u64) {
        use rand::seq::SliceRandom;
        let m = model_from(seed);
        let mut shuffled = m.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        shuffled.actions.shuffle(&mut rng);
        shuffled.transactions.shuffle(&mut rng);
        prop_assert_eq!(analyze_system(&m).unwrap(), analyze_system(&shuffled).unwrap());
    }

    #[test]
    fn serialization_round_trips(seed: u64) {
        let m = model_from(seed);
        let text = serialize_model(&m);
        let back = parse_model(text.as_bytes()).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(serialize_model(&back), text);
    }

    #[test]
    fn traces_respect_the_dispatch_rules(seed: u64, sim_seed: u64) {
        let m = model_from(seed);
        let topo = m.topology().unwrap();
        let cfg = SimConfig::random(Time::new(8 * longest_period(&m)), sim_seed);
        let trace = simulate(&m, &cfg).unwrap();

        let mut released: HashMap<(String, u32), (Time, Time)> = HashMap::new();
        let mut started: HashMap<(String, u32), Time> = HashMap::new();
        let mut finished: HashMap<(String, u32), Time> = HashMap::new();
        let mut last_finish_q: HashMap<String, u32> = HashMap::new();
        // Root of the synchronous set currently running and its members.
        let mut running: Option<(String, Vec<String>)> = None;
        let mut busy_until = Time::ZERO;
        let mut pending: Vec<Time> = Vec::new();
        for e in &trace.events {
            match e {
                TraceEvent::Arrival { action, q, nominal, released: r } => {
                    prop_assert!(nominal <= r);
                    released.insert((action.to_string(), *q), (*nominal, *r));
                    pending.push(*r);
                }
                TraceEvent::Start { action, q, at } => {
                    let key = (action.to_string(), *q);
                    prop_assert!(released[&key].1 <= *at);
                    started.insert(key, *at);
                    match &running {
                        Some((_, members)) => prop_assert!(members.contains(&action.to_string()), "{action} interleaved"),
                        None => {
                            // Work conservation: no idle gap while something was released.
                            if let Some(&earliest) = pending.iter().min() {
                                prop_assert!(*at <= earliest.max(busy_until), "idle while work was pending");
                            }
                            let members = topo.synchronous_set(action.as_str()).unwrap().iter().map(|x| x.to_string()).collect();
                            running = Some((action.to_string(), members));
                        }
                    }
                    let pos = pending.iter().position(|t| *t == released[&(action.to_string(), *q)].1).unwrap();
                    pending.swap_remove(pos);
                }
                TraceEvent::Finish { action, q, at } => {
                    let key = (action.to_string(), *q);
                    prop_assert!(started[&key] < *at);
                    finished.insert(key, *at);
                    if let Some(prev) = last_finish_q.insert(action.to_string(), *q) {
                        prop_assert!(prev < *q, "{action} finished out of order");
                    }
                    if running.as_ref().is_some_and(|(root, _)| root == action.as_str()) {
                        running = None;
                        busy_until = *at;
                    }
                }
                TraceEvent::Response { action, q, value } => {
                    let key = (action.to_string(), *q);
                    prop_assert_eq!(*value, finished[&key].saturating_sub(released[&key].0));
                }
            }
        }
        prop_assert!(running.is_none());
    }
}

#[test]
fn generator_varies_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let sizes: std::collections::HashSet<(usize, usize)> = (0..200)
        .map(|_| {
            let m = random_model(&mut ChaCha8Rng::seed_from_u64(rng.gen()), &SynthParams::default());
            (m.transactions.len(), m.actions.len())
        })
        .collect();
    assert!(sizes.len() >= 8, "{sizes:?}");
}
