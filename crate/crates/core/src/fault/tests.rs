use std::collections::BTreeMap;

use proptest::prelude::*;
use serde_json::json;

use super::*;
use crate::fixtures;
use crate::task::Domain;

fn spec(trigger: Trigger, behavior: FaultBehavior) -> FaultSpec {
    FaultSpec { trigger, behavior }
}

fn on(tool: &str) -> Trigger {
    Trigger::ToolName { tool: tool.into() }
}

fn title_drift() -> FaultBehavior {
    FaultBehavior::SchemaDrift {
        tool: "create_record".into(),
        param_renames: BTreeMap::from([("title".to_string(), "record_title".to_string())]),
        tool_rename: None,
    }
}

fn setup(task: &TaskRecord) -> (Environment, FaultRuntime) {
    let mut env = Environment::new(task);
    let mut rt = FaultRuntime::new(task);
    rt.apply_static_drift(&mut env);
    (env, rt)
}

fn read(path: &str) -> ToolCall {
    ToolCall::new("read_file").arg("path", path)
}

#[test]
fn transient_timeout_recovers_on_second_call() {
    let task = fixtures::with_faults(
        fixtures::files_task(),
        vec![spec(
            on("read_file"),
            FaultBehavior::Timeout {
                fail_count_before_recovery: 1,
            },
        )],
    );
    let (mut env, mut rt) = setup(&task);
    let call = read("logs/app.log");
    let err = rt.intercept(&mut env, &call, 1, 1).unwrap_err();
    assert_eq!(err.code, ErrorCode::Timeout);
    let ctx = err.fault_context.unwrap();
    assert_eq!((ctx.fault_type, ctx.fault_index), (FaultType::Timeout, 0));
    assert!(rt.intercept(&mut env, &call, 2, 2).is_ok());
}

#[test]
fn persistent_auth_blocks_every_call() {
    let task = fixtures::with_faults(
        fixtures::crud_task(),
        vec![spec(
            on("delete_record"),
            FaultBehavior::AuthFailure { persistent: true },
        )],
    );
    let (mut env, mut rt) = setup(&task);
    let call = ToolCall::new("delete_record").arg("id", "ticket-001");
    for i in 1..=5 {
        let err = rt.intercept(&mut env, &call, i, i).unwrap_err();
        assert_eq!(err.code, ErrorCode::Unauthorized);
    }
    assert_eq!(rt.injections(0), 5);
    let other = ToolCall::new("read_record").arg("id", "ticket-001");
    assert!(rt.intercept(&mut env, &other, 6, 6).is_ok());
}

#[test]
fn transient_auth_fires_once() {
    let task = fixtures::with_faults(
        fixtures::crud_task(),
        vec![spec(
            on("list_records"),
            FaultBehavior::AuthFailure { persistent: false },
        )],
    );
    let (mut env, mut rt) = setup(&task);
    let call = ToolCall::new("list_records");
    assert!(rt.intercept(&mut env, &call, 1, 1).is_err());
    assert!(rt.intercept(&mut env, &call, 2, 2).is_ok());
}

#[test]
fn empty_plan_passes_everything() {
    let task = fixtures::crud_task();
    let (mut env, mut rt) = setup(&task);
    for (i, tool) in ["list_records", "read_record", "delete_record"].iter().enumerate() {
        let call = ToolCall::new(*tool).arg("id", "ticket-001");
        let call = if *tool == "list_records" {
            ToolCall::new("list_records")
        } else {
            call
        };
        assert!(rt.intercept(&mut env, &call, i as u32 + 1, i as u32 + 1).is_ok());
    }
}

#[test]
fn certain_probability_always_fires() {
    let task = fixtures::with_faults(
        fixtures::files_task(),
        vec![spec(
            Trigger::Probabilistic { p: 1.0 },
            FaultBehavior::Timeout {
                fail_count_before_recovery: 0,
            },
        )],
    );
    let (mut env, mut rt) = setup(&task);
    for i in 1..=20 {
        assert!(rt.intercept(&mut env, &read("logs/app.log"), i, i).is_err());
    }
    assert_eq!(rt.evaluations(0), 20);
}

#[test]
fn nth_call_and_arg_pattern() {
    let task = fixtures::with_faults(
        fixtures::files_task(),
        vec![
            spec(
                Trigger::NthCall { n: 3 },
                FaultBehavior::Timeout {
                    fail_count_before_recovery: 0,
                },
            ),
            spec(
                Trigger::ArgPattern {
                    tool: "read_file".into(),
                    param: "path".into(),
                    substring: "notes/".into(),
                },
                FaultBehavior::AuthFailure { persistent: true },
            ),
        ],
    );
    let (mut env, mut rt) = setup(&task);
    assert!(rt.intercept(&mut env, &read("logs/app.log"), 1, 1).is_ok());
    assert_eq!(
        rt.intercept(&mut env, &read("notes/todo.txt"), 2, 2).unwrap_err().code,
        ErrorCode::Unauthorized
    );
    assert_eq!(
        rt.intercept(&mut env, &read("logs/app.log"), 3, 3).unwrap_err().code,
        ErrorCode::Timeout
    );
    assert!(rt.intercept(&mut env, &read("logs/app.log"), 4, 4).is_ok());
}

#[test]
fn auth_shadows_later_families() {
    let task = fixtures::with_faults(
        fixtures::files_task(),
        vec![
            spec(
                on("read_file"),
                FaultBehavior::Timeout {
                    fail_count_before_recovery: 0,
                },
            ),
            spec(on("read_file"), FaultBehavior::AuthFailure { persistent: true }),
            spec(
                on("read_file"),
                FaultBehavior::RateLimit {
                    retry_after_steps: 2,
                    recover_after_failures: 0,
                },
            ),
        ],
    );
    let (mut env, mut rt) = setup(&task);
    let err = rt.intercept(&mut env, &read("logs/app.log"), 1, 1).unwrap_err();
    assert_eq!(err.code, ErrorCode::Unauthorized);
    assert_eq!(err.fault_context.unwrap().fault_index, 1);
    assert_eq!((rt.injections(0), rt.injections(2)), (0, 0));
}

#[test]
fn first_declared_spec_in_family_wins() {
    let task = fixtures::with_faults(
        fixtures::files_task(),
        vec![
            spec(
                on("read_file"),
                FaultBehavior::Timeout {
                    fail_count_before_recovery: 1,
                },
            ),
            spec(
                on("read_file"),
                FaultBehavior::Timeout {
                    fail_count_before_recovery: 0,
                },
            ),
        ],
    );
    let (mut env, mut rt) = setup(&task);
    assert_eq!(
        rt.intercept(&mut env, &read("a/b"), 1, 1)
            .unwrap_err()
            .fault_context
            .unwrap()
            .fault_index,
        0
    );
    // The first spec has recovered and still decides for its family.
    assert!(rt.intercept(&mut env, &read("a/b"), 2, 2).is_ok());
    assert_eq!(rt.injections(1), 0);
}

#[test]
fn rate_limit_cooldown_in_steps() {
    let task = fixtures::with_faults(
        fixtures::files_task(),
        vec![spec(
            on("read_file"),
            FaultBehavior::RateLimit {
                retry_after_steps: 2,
                recover_after_failures: 0,
            },
        )],
    );
    let (mut env, mut rt) = setup(&task);
    let err = rt.intercept(&mut env, &read("a/b"), 1, 1).unwrap_err();
    assert_eq!((err.code, err.retry_after_steps), (ErrorCode::RateLimited, Some(2)));
    assert_eq!(
        rt.intercept(&mut env, &read("a/b"), 2, 2)
            .unwrap_err()
            .retry_after_steps,
        Some(1)
    );
    assert!(rt.intercept(&mut env, &read("a/b"), 3, 3).is_ok());
}

#[test]
fn rate_limit_recovers_after_failures() {
    let task = fixtures::with_faults(
        fixtures::files_task(),
        vec![spec(
            on("read_file"),
            FaultBehavior::RateLimit {
                retry_after_steps: 50,
                recover_after_failures: 2,
            },
        )],
    );
    let (mut env, mut rt) = setup(&task);
    assert!(rt.intercept(&mut env, &read("a/b"), 1, 1).is_err());
    assert!(rt.intercept(&mut env, &read("a/b"), 2, 2).is_err());
    assert!(rt.intercept(&mut env, &read("a/b"), 3, 3).is_ok());
}

#[test]
fn drift_error_carries_context() {
    let task = fixtures::with_faults(fixtures::crud_task(), vec![spec(on("create_record"), title_drift())]);
    let (mut env, mut rt) = setup(&task);
    let call = ToolCall::new("create_record")
        .arg("id", "x")
        .arg("title", "t")
        .arg("fields", json!({}));
    let err = rt.intercept(&mut env, &call, 1, 1).unwrap_err();
    assert_eq!(err.code, ErrorCode::InvalidArguments);
    assert_eq!(err.unknown_params, ["title"]);
    assert_eq!(err.missing_params, ["record_title"]);
    assert_eq!(err.fault_context.unwrap().fault_type, FaultType::SchemaDrift);

    // A plain mistake on the same tool is not blamed on the fault.
    let bad = ToolCall::new("create_record").arg("id", "x");
    assert!(rt.intercept(&mut env, &bad, 2, 2).unwrap_err().fault_context.is_none());
}

#[test]
fn dynamic_drift_applies_on_first_firing() {
    let task = fixtures::with_faults(
        fixtures::crud_task(),
        vec![spec(Trigger::NthCall { n: 2 }, title_drift())],
    );
    let (mut env, mut rt) = setup(&task);
    assert_eq!(env.effective_schemas(), task.tool_schemas.as_slice());
    let call = ToolCall::new("create_record")
        .arg("id", "x")
        .arg("title", "t")
        .arg("fields", json!({}));
    assert!(rt.intercept(&mut env, &call, 1, 1).is_ok());
    assert!(rt.intercept(&mut env, &call, 2, 2).is_err());
    assert!(rt.intercept(&mut env, &call, 3, 3).is_err());
}

#[test]
fn drift_renames_required_param() {
    let task = fixtures::crud_task();
    let mut env = Environment::new(&task);
    apply_drift(&title_drift(), &mut env);
    let schema = &env.effective_schemas()[0];
    assert!(schema.param("record_title").unwrap().required);
    assert!(schema.param("title").is_none());
    // Agent-facing schemas are untouched.
    assert_eq!(env.original_schemas(), task.tool_schemas.as_slice());
}

#[test]
fn empty_rename_is_identity() {
    let task = fixtures::crud_task();
    let mut env = Environment::new(&task);
    apply_drift(
        &FaultBehavior::SchemaDrift {
            tool: "create_record".into(),
            param_renames: BTreeMap::new(),
            tool_rename: None,
        },
        &mut env,
    );
    assert_eq!(env.effective_schemas(), task.tool_schemas.as_slice());
}

#[test]
fn tool_rename_makes_old_name_unknown() {
    let drift = FaultBehavior::SchemaDrift {
        tool: "delete_record".into(),
        param_renames: BTreeMap::new(),
        tool_rename: Some("remove_record".into()),
    };
    let task = fixtures::with_faults(fixtures::crud_task(), vec![spec(on("delete_record"), drift)]);
    let (mut env, mut rt) = setup(&task);
    let err = rt
        .intercept(&mut env, &ToolCall::new("delete_record").arg("id", "ticket-001"), 1, 1)
        .unwrap_err();
    assert_eq!(err.code, ErrorCode::UnknownTool);
    assert!(err.fault_context.is_some());
    let renamed = ToolCall::new("remove_record").arg("id", "ticket-001");
    assert!(rt.intercept(&mut env, &renamed, 2, 2).is_ok());
    assert!(env.execute(&renamed).ok);
}

fn missing_id() -> ErrorPayload {
    let mut e = ErrorPayload::invalid("read_record: missing required parameter(s): id");
    e.missing_params = vec!["id".into()];
    e
}

fn rewrite_task(style: RewriteStyle) -> TaskRecord {
    fixtures::with_faults(
        fixtures::crud_task(),
        vec![spec(
            Trigger::Probabilistic { p: 1.0 },
            FaultBehavior::AdversarialRewrite { style },
        )],
    )
}

#[test]
fn vague_rewrite_strips_hints() {
    let (env, mut rt) = setup(&rewrite_task(RewriteStyle::Vague));
    let mut err = missing_id();
    let r = rt.rewrite(&env, &ToolCall::new("read_record"), 1, &mut err).unwrap();
    assert_eq!(r.visible.message, "request failed");
    assert!(r.visible.missing_params.is_empty() && r.visible.unknown_params.is_empty());
    assert!(r.visible.fault_context.is_none());
    assert_eq!(r.visible.code, ErrorCode::InvalidArguments);
    // The trace copy keeps its hints and gains the rewrite's context.
    assert_eq!(err.missing_params, ["id"]);
    assert_eq!(err.fault_context.unwrap().fault_type, FaultType::AdversarialRewrite);
}

#[test]
fn misleading_points_at_next_param() {
    let (env, mut rt) = setup(&rewrite_task(RewriteStyle::MisleadingParam));
    let mut err = ErrorPayload::invalid("create_record: unexpected parameter(s): title");
    err.unknown_params = vec!["title".into()];
    let call = ToolCall::new("create_record").arg("title", "t");
    let r = rt.rewrite(&env, &call, 1, &mut err).unwrap();
    assert_eq!(r.visible.unknown_params, ["fields"]);
    assert!(r.visible.message.contains("fields"));
}

#[test]
fn cyclic_successor_by_enumeration() {
    let params: Vec<String> = ["id", "title", "fields"].map(String::from).to_vec();
    let expect = [
        ("id", "title"),
        ("title", "fields"),
        ("fields", "id"),
        ("titel", "fields"),
        ("record_title", "fields"),
    ];
    for (name, want) in expect {
        assert_eq!(misleading_name(name, &params), want, "{name}");
    }
}

#[test]
fn wrong_tool_hint_names_other_tool() {
    let (env, mut rt) = setup(&rewrite_task(RewriteStyle::WrongToolHint));
    let mut err = ErrorPayload::not_found("record x");
    let r = rt.rewrite(&env, &ToolCall::new("read_record"), 1, &mut err).unwrap();
    assert!(
        r.visible.message.ends_with("did you mean 'update_record'?"),
        "{}",
        r.visible.message
    );
    assert_eq!(r.visible.code, ErrorCode::NotFound);
}

#[test]
fn no_rewrite_spec_leaves_payload() {
    let task = fixtures::crud_task();
    let (env, mut rt) = setup(&task);
    let mut err = missing_id();
    assert!(rt.rewrite(&env, &ToolCall::new("read_record"), 1, &mut err).is_none());
    assert_eq!(err, missing_id());
}

#[test]
fn edit_distance_basics() {
    assert_eq!(edit_distance("kitten", "sitting"), 3);
    assert_eq!(edit_distance("", "abc"), 3);
    assert_eq!(edit_distance("title", "title"), 0);
}

fn arb_renames() -> impl Strategy<Value = BTreeMap<String, String>> {
    // Subsets of the create_record params mapped to fresh names.
    prop::sample::subsequence(vec!["id", "title", "fields"], 0..=3)
        .prop_map(|ps| ps.into_iter().map(|p| (p.to_string(), format!("{p}_v2"))).collect())
}

proptest! {
    #[test]
    fn drift_is_idempotent(renames in arb_renames(), rename_tool in any::<bool>()) {
        let behavior = FaultBehavior::SchemaDrift {
            tool: "create_record".into(),
            param_renames: renames,
            tool_rename: rename_tool.then(|| "make_record".to_string()),
        };
        let mut env = Environment::new(&fixtures::crud_task());
        apply_drift(&behavior, &mut env);
        let once = crate::canonical::canonical_bytes(env.effective_schemas()).unwrap();
        apply_drift(&behavior, &mut env);
        let twice = crate::canonical::canonical_bytes(env.effective_schemas()).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn probabilistic_injections_replay(p in 0.05f64..0.95, seed in any::<u64>(), n in 1u32..40) {
        let mut task = fixtures::with_faults(
            fixtures::task(Domain::Files, json!({"files": {"a/b": "x"}}), vec![]),
            vec![spec(Trigger::Probabilistic { p }, FaultBehavior::Timeout { fail_count_before_recovery: 0 })],
        );
        task.seed = seed;
        let run = || {
            let (mut env, mut rt) = setup(&task);
            (1..=n).map(|i| rt.intercept(&mut env, &read("a/b"), i, i).is_err()).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn at_most_one_family_injects(seed in any::<u64>(), n in 1u32..20) {
        let mut task = fixtures::with_faults(
            fixtures::files_task(),
            vec![
                spec(Trigger::Probabilistic { p: 0.5 }, FaultBehavior::AuthFailure { persistent: true }),
                spec(
                    Trigger::Probabilistic { p: 0.5 },
                    FaultBehavior::RateLimit { retry_after_steps: 1, recover_after_failures: 0 },
                ),
                spec(Trigger::Probabilistic { p: 0.5 }, FaultBehavior::Timeout { fail_count_before_recovery: 0 }),
            ],
        );
        task.seed = seed;
        let (mut env, mut rt) = setup(&task);
        let mut total_before = 0;
        for i in 1..=n {
            let res = rt.intercept(&mut env, &read("logs/app.log"), i, i);
            let total: u32 = (0..3).map(|k| rt.injections(k)).sum();
            prop_assert!(total - total_before <= 1);
            prop_assert_eq!(res.is_err(), total - total_before == 1);
            total_before = total;
        }
    }
}
