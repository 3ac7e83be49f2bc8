use proptest::prelude::*;
use serde_json::{json, Value};

use super::criteria::check_criterion;
use super::*;
use crate::agent::ScriptedAgent;
use crate::env::ToolCall;
use crate::fixtures;
use crate::runner::{run_episode, Termination};
use crate::task::{Criterion, DomainState, FaultBehavior, FaultSpec, Trigger};

fn metric(success: bool, calls: u32) -> TaskMetrics {
    TaskMetrics {
        task_id: "t".into(),
        task_success: success,
        tool_calls_used: calls,
        invalid_calls: 0,
        policy_violations: 0,
        fault_affected: false,
        recovery_success: None,
        time_to_recovery: None,
        budget_exceeded: false,
        catastrophic: false,
    }
}

#[test]
fn recovery_after_two_steps() {
    let task = fixtures::with_faults(
        fixtures::files_task(),
        vec![FaultSpec {
            trigger: Trigger::ToolName {
                tool: "read_file".into(),
            },
            behavior: FaultBehavior::Timeout {
                fail_count_before_recovery: 2,
            },
        }],
    );
    let read = AgentAction::Call(ToolCall::new("read_file").arg("path", "logs/app.log"));
    let actions = vec![
        AgentAction::Call(ToolCall::new("list_dir").arg("path", "logs")),
        read.clone(),
        read.clone(),
        read,
        AgentAction::Finish,
    ];
    let trace = run_episode(&task, &mut ScriptedAgent::new(actions));
    let m = score_task(&trace, &task).unwrap();
    assert!(m.fault_affected);
    assert_eq!(m.recovery_success, Some(true));
    assert_eq!(m.time_to_recovery, Some(2));
    assert_eq!(m.tool_calls_used, 4);
    assert!(!m.task_success && !m.catastrophic && !m.budget_exceeded);
}

#[test]
fn clean_trace_has_no_recovery_fields() {
    let task = fixtures::crud_task();
    let trace = run_episode(
        &task,
        &mut ScriptedAgent::new(vec![
            AgentAction::Call(ToolCall::new("read_record")),
            AgentAction::Call(ToolCall::new("nope")),
            AgentAction::Finish,
        ]),
    );
    let m = score_task(&trace, &task).unwrap();
    assert!(!m.fault_affected);
    assert_eq!((m.recovery_success, m.time_to_recovery), (None, None));
    assert_eq!(m.invalid_calls, 2);
}

#[test]
fn mismatched_task_is_error() {
    let task = fixtures::crud_task();
    let trace = run_episode(&task, &mut ScriptedAgent::new(vec![AgentAction::Finish]));
    let mut other = task.clone();
    other.task_id = "other".into();
    assert!(matches!(
        score_task(&trace, &other),
        Err(ScoringError::TaskMismatch { .. })
    ));
}

#[test]
fn overflow_is_catastrophic_budget_is_not() {
    let mut task = fixtures::with_faults(
        fixtures::crud_task(),
        vec![FaultSpec {
            trigger: Trigger::ToolName {
                tool: "list_records".into(),
            },
            behavior: FaultBehavior::Timeout {
                fail_count_before_recovery: 0,
            },
        }],
    );
    task.budgets.max_retries = 0;
    let list = AgentAction::Call(ToolCall::new("list_records"));
    let trace = run_episode(&task, &mut ScriptedAgent::new(vec![list.clone(); 5]));
    assert_eq!(trace.termination, Termination::RetryOverflow);
    let m = score_task(&trace, &task).unwrap();
    assert!(m.catastrophic && !m.budget_exceeded);
    assert_eq!(m.recovery_success, Some(false));
}

#[test]
fn budgeted_success_edge_cases() {
    assert_eq!(budgeted_success(&[], 4), Err(ScoringError::Empty));
    assert_eq!(budgeted_success(&[metric(true, 1)], 0), Err(ScoringError::ZeroCap));
    let failed: Vec<_> = (0..10).map(|i| metric(false, i)).collect();
    for k in BUDGET_CAPS {
        assert_eq!(budgeted_success(&failed, k).unwrap(), 0.0);
    }
}

#[test]
fn flat_curve_when_every_success_is_cheap() {
    let metrics: Vec<_> = (0..1000).map(|i| metric(i % 4 == 0, 1 + (i % 4) as u32)).collect();
    let tasks = vec![fixtures::crud_task(); 1000];
    let r = aggregate("flat", &metrics, &tasks).unwrap();
    for p in &r.budgeted_success {
        assert_eq!(p.success, 0.25);
    }
    assert_eq!(r.auc, 0.25);
}

#[test]
fn single_task_report() {
    let r = aggregate("a", &[metric(true, 3)], &[fixtures::crud_task()]).unwrap();
    assert_eq!(r.overall.success_rate, 1.0);
    assert_eq!(r.overall.mean_tool_calls, 3.0);
    assert_eq!(r.overall.recovery_rate, None);
    assert_eq!(r.by_fault.keys().collect::<Vec<_>>(), ["none"]);
    assert_eq!(r.by_domain.keys().collect::<Vec<_>>(), ["crud"]);
}

#[test]
fn echoes_table_shaped_aggregates() {
    // 20 tasks: 5 successes, 59 calls in total.
    let calls = [3u32, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 2];
    let metrics: Vec<_> = calls.iter().enumerate().map(|(i, &c)| metric(i < 5, c)).collect();
    let r = aggregate("x", &metrics, &vec![fixtures::crud_task(); 20]).unwrap();
    assert_eq!(r.overall.success_rate, 0.25);
    assert!((r.overall.mean_tool_calls - 2.95).abs() < 1e-12);
}

#[test]
fn length_mismatch() {
    assert!(matches!(
        aggregate("x", &[metric(true, 1)], &[]),
        Err(ScoringError::LengthMismatch { metrics: 1, tasks: 0 })
    ));
}

#[test]
fn tables_render() {
    let r = aggregate("heuristic", &[metric(true, 3)], &[fixtures::crud_task()]).unwrap();
    let t = tables::overall_table(std::slice::from_ref(&r));
    assert!(t.lines().next().unwrap().starts_with("Agent"));
    assert!(t.contains("heuristic"));
    assert_eq!(tables::fault_table(std::slice::from_ref(&r)).lines().count(), 8);
    assert_eq!(tables::budget_curve_csv(&r), "k,success\n4,1\n8,1\n16,1\n32,1\n");
}

fn arb_metric() -> impl Strategy<Value = TaskMetrics> {
    (
        any::<bool>(),
        0u32..40,
        0u32..5,
        0u32..3,
        prop::option::of((any::<bool>(), 1u32..6)),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(s, calls, inv, pv, fault, be, cat)| TaskMetrics {
            task_id: "t".into(),
            task_success: s,
            tool_calls_used: calls,
            invalid_calls: inv.min(calls),
            policy_violations: pv,
            fault_affected: fault.is_some(),
            recovery_success: fault.map(|f| f.0),
            time_to_recovery: fault.and_then(|(ok, t)| ok.then_some(t)),
            budget_exceeded: be,
            catastrophic: cat,
        })
}

/// Brute-force tree walk used as an independent oracle for criteria.
fn oracle(state: &Value, c: &Criterion, calls: u32, ok_calls: u32) -> bool {
    fn walk<'a>(v: &'a Value, segs: &[&str]) -> Option<&'a Value> {
        let Some((head, rest)) = segs.split_first() else {
            return Some(v);
        };
        let next = match v {
            Value::Object(m) => m.iter().find(|(k, _)| k == head).map(|(_, v)| v),
            Value::Array(a) => head.parse::<usize>().ok().and_then(|i| a.get(i)),
            _ => None,
        };
        walk(next?, rest)
    }
    let at = |p: &str| walk(state, &p.split('/').collect::<Vec<_>>());
    match c {
        Criterion::StateEquals { path, expected } => at(path) == Some(expected),
        Criterion::StateExists { path } => at(path).is_some(),
        Criterion::StateContains { path, member } => match at(path) {
            Some(Value::Array(a)) => a.iter().any(|x| x == member),
            Some(Value::Object(m)) => member.as_str().is_some_and(|k| m.keys().any(|x| x == k)),
            _ => false,
        },
        Criterion::StateKeyValue { path, key, expected } => match at(path) {
            Some(Value::Object(m)) => m.iter().any(|(k, v)| k == key && v == expected),
            _ => false,
        },
        Criterion::MinToolCalls { n } => calls >= *n,
        Criterion::MinSuccessfulToolCalls { n } => ok_calls >= *n,
    }
}

fn arb_state() -> impl Strategy<Value = Value> {
    let leaf = prop::sample::select(vec![json!(1), json!("a"), json!("b"), json!(true), json!(null)]);
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(Value::from),
            prop::collection::btree_map(prop::sample::select(vec!["a", "b", "0", "1"]), inner, 0..3)
                .prop_map(|m| Value::Object(m.into_iter().map(|(k, v)| (k.to_string(), v)).collect())),
        ]
    })
}

fn arb_criterion() -> impl Strategy<Value = Criterion> {
    let path = prop::collection::vec(prop::sample::select(vec!["a", "b", "0", "1"]), 1..4).prop_map(|s| s.join("/"));
    let val = prop::sample::select(vec![json!(1), json!("a"), json!("b"), json!(true), json!(null)]);
    prop_oneof![
        (path.clone(), val.clone()).prop_map(|(path, expected)| Criterion::StateEquals { path, expected }),
        path.clone().prop_map(|path| Criterion::StateExists { path }),
        (path.clone(), val.clone()).prop_map(|(path, member)| Criterion::StateContains { path, member }),
        (path, prop::sample::select(vec!["a", "b"]), val).prop_map(|(path, key, expected)| Criterion::StateKeyValue {
            path,
            key: key.into(),
            expected
        }),
        (1u32..5).prop_map(|n| Criterion::MinToolCalls { n }),
        (1u32..5).prop_map(|n| Criterion::MinSuccessfulToolCalls { n }),
    ]
}

proptest! {
    #[test]
    fn criteria_match_tree_walk(
        state in arb_state(),
        criteria in prop::collection::vec(arb_criterion(), 1..5),
        calls in 0u32..6,
        ok in 0u32..6,
    ) {
        let ok = ok.min(calls);
        let counts = CallCounts { tool_calls: calls, successful_calls: ok };
        let ds = DomainState(state.clone());
        for c in &criteria {
            prop_assert_eq!(check_criterion(&ds, &counts, c), oracle(&state, c, calls, ok), "{:?}", c);
        }
        let all = criteria.iter().all(|c| oracle(&state, c, calls, ok));
        prop_assert_eq!(check_criteria(&ds, &counts, &criteria), all);
    }

    #[test]
    fn budgeted_success_is_direct_sum(metrics in prop::collection::vec(arb_metric(), 1..50), k in 1u32..40) {
        let mut hits = 0.0;
        for m in &metrics {
            if m.task_success && m.tool_calls_used <= k {
                hits += 1.0;
            }
        }
        prop_assert_eq!(budgeted_success(&metrics, k).unwrap(), hits / metrics.len() as f64);
    }

    #[test]
    fn curve_monotone_and_auc_bounded(metrics in prop::collection::vec(arb_metric(), 1..50)) {
        let tasks = vec![fixtures::crud_task(); metrics.len()];
        let r = aggregate("p", &metrics, &tasks).unwrap();
        let s: Vec<f64> = r.budgeted_success.iter().map(|p| p.success).collect();
        prop_assert!(s.windows(2).all(|w| w[0] <= w[1]));
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= r.auc + 1e-12 && r.auc <= hi + 1e-12);
        // A cap covering every call reproduces the overall success rate.
        prop_assert_eq!(budgeted_success(&metrics, 40).unwrap(), r.overall.success_rate);
        let o = &r.overall;
        for v in [o.success_rate, o.invalid_call_rate, o.budget_exceeded_rate, o.catastrophic_rate] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if let Some(rr) = o.recovery_rate {
            prop_assert!((0.0..=1.0).contains(&rr));
        }
    }

    #[test]
    fn halves_combine_by_weight(metrics in prop::collection::vec(arb_metric(), 2..40), cut in any::<prop::sample::Index>()) {
        let at = 1 + cut.index(metrics.len() - 1);
        let (a, b) = metrics.split_at(at);
        let tasks = |n| vec![fixtures::crud_task(); n];
        let whole = aggregate("w", &metrics, &tasks(metrics.len())).unwrap().overall;
        let ra = aggregate("a", a, &tasks(a.len())).unwrap().overall;
        let rb = aggregate("b", b, &tasks(b.len())).unwrap().overall;
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let w = |x: f64, y: f64| (x * na + y * nb) / (na + nb);
        prop_assert!((whole.success_rate - w(ra.success_rate, rb.success_rate)).abs() < 1e-12);
        prop_assert!((whole.mean_tool_calls - w(ra.mean_tool_calls, rb.mean_tool_calls)).abs() < 1e-9);
        prop_assert!((whole.catastrophic_rate - w(ra.catastrophic_rate, rb.catastrophic_rate)).abs() < 1e-12);
        // The micro-averaged invalid rate combines by call counts instead.
        let (ca, cb) = (ra.mean_tool_calls * na, rb.mean_tool_calls * nb);
        if ca + cb > 0.0 {
            let combined = (ra.invalid_call_rate * ca + rb.invalid_call_rate * cb) / (ca + cb);
            prop_assert!((whole.invalid_call_rate - combined).abs() < 1e-9);
        }
        prop_assert_eq!(whole.fault_affected, ra.fault_affected + rb.fault_affected);
    }
}
