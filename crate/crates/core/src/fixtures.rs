//! Small hand-built tasks for tests and examples.

use serde_json::{json, Value};

use crate::env::catalog::default_schemas;
use crate::plan::slots;
use crate::task::{Budget, Criterion, Domain, DomainState, FaultSpec, GoalAnnotation, TaskRecord, BENCHMARK_VERSION};

pub fn budget(max_steps: u32, max_tool_calls: u32, max_retries: u32) -> Budget {
    Budget {
        max_steps,
        max_tool_calls,
        max_retries,
        per_call_timeout_ms: 1000,
    }
}

/// A task with default schemas and no faults.
pub fn task(domain: Domain, state: Value, criteria: Vec<Criterion>) -> TaskRecord {
    TaskRecord {
        task_id: format!("fixture-{domain}"),
        domain,
        instruction: format!("Fixture task in the {domain} domain."),
        tool_schemas: default_schemas(domain),
        initial_state: DomainState(state),
        goal_annotation: GoalAnnotation::default(),
        success_criteria: criteria,
        fault_plan: Vec::new(),
        policy_rules: Vec::new(),
        budgets: budget(12, 12, 2),
        seed: 7,
        version: BENCHMARK_VERSION.to_string(),
    }
}

/// Three seeded records; goal: create `ticket-009` and read it back.
pub fn crud_task() -> TaskRecord {
    let state = json!({"records": {
        "ticket-001": {"title": "Printer jam", "fields": {"status": "open"}},
        "ticket-002": {"title": "VPN drops", "fields": {"status": "closed"}},
        "ticket-003": {"title": "Badge reader", "fields": {"status": "open"}},
    }});
    let mut t = task(
        Domain::Crud,
        state,
        vec![
            Criterion::StateEquals {
                path: "records/ticket-009/fields/status".into(),
                expected: json!("open"),
            },
            Criterion::MinSuccessfulToolCalls { n: 2 },
        ],
    );
    t.instruction = "Create ticket ticket-009 titled 'Desk lamp' with status open, then read it back.".into();
    t.goal_annotation = GoalAnnotation {
        intent: "create_and_verify".into(),
        slots: slots(&[
            ("id", json!("ticket-009")),
            ("title", json!("Desk lamp")),
            ("fields", json!({"status": "open"})),
        ]),
        policy: Vec::new(),
    };
    t
}

/// Goal: append a line to `logs/app.log` and read it back.
pub fn files_task() -> TaskRecord {
    let state = json!({"files": {"logs/app.log": "boot\n", "notes/todo.txt": "milk"}});
    let mut t = task(
        Domain::Files,
        state,
        vec![
            Criterion::StateKeyValue {
                path: "files".into(),
                key: "logs/app.log".into(),
                expected: json!("boot\nready\n"),
            },
            Criterion::MinSuccessfulToolCalls { n: 2 },
        ],
    );
    t.instruction = "Append 'ready' to logs/app.log and read the file back.".into();
    t.goal_annotation = GoalAnnotation {
        intent: "append_log".into(),
        slots: slots(&[("path", json!("logs/app.log")), ("line", json!("ready\n"))]),
        policy: Vec::new(),
    };
    t
}

/// Two overlapping meetings (09:00-10:00 and 09:30-10:30, minutes since midnight).
pub fn scheduling_task() -> TaskRecord {
    let state = json!({
        "events": {
            "standup": {"start": 540, "end": 600, "title": "Standup"},
            "review": {"start": 570, "end": 630, "title": "Review"},
        },
        "conflicts": [["review", "standup"]],
        "allow_overlap": true,
    });
    task(
        Domain::Scheduling,
        state,
        vec![Criterion::StateExists {
            path: "events/retro".into(),
        }],
    )
}

pub fn with_faults(mut task: TaskRecord, faults: Vec<FaultSpec>) -> TaskRecord {
    task.fault_plan = faults;
    task
}
