//! Fault placement and policy rules for generated tasks.
//!
//! Each faulted task gets one spec. Half of the variant codes aim it at a
//! required call, the other half at the optional tail call.

use std::collections::BTreeMap;

use crate::env::catalog::tool_names;
use crate::env::ToolCall;
use crate::plan::Plan;
use crate::stream::SeededStream;
use crate::task::{Budget, Domain, FaultBehavior, FaultSpec, FaultType, PolicyRule, RewriteStyle, ToolSchema, Trigger};

/// Number of distinct placement variants per family.
pub(crate) fn variant_count(family: FaultType) -> usize {
    match family {
        FaultType::Timeout | FaultType::SchemaDrift => 4,
        FaultType::AdversarialRewrite => 3,
        FaultType::RateLimit | FaultType::AuthFailure => 1,
    }
}

const PARAM_VARIANTS: &[(&str, &[&str])] = &[
    ("id", &["record_id", "identifier", "key"]),
    ("title", &["record_title", "name", "heading"]),
    ("fields", &["attributes", "values", "data"]),
    ("path", &["file_path", "filepath", "location"]),
    ("content", &["body", "text", "data"]),
    ("query", &["q", "search_query", "terms"]),
    ("text", &["answer", "answer_text", "response"]),
    ("start", &["start_time", "begin", "from"]),
    ("end", &["end_time", "until", "to"]),
    ("src", &["source", "from_path"]),
    ("dst", &["destination", "to_path"]),
];

const TOOL_RENAMES: &[(&str, &str)] = &[
    ("create_record", "add_record"),
    ("read_record", "get_record"),
    ("update_record", "modify_record"),
    ("delete_record", "remove_record"),
    ("list_records", "enumerate_records"),
    ("search", "search_docs"),
    ("fetch_document", "get_document"),
    ("submit_answer", "post_answer"),
    ("create_file", "new_file"),
    ("read_file", "cat_file"),
    ("append_file", "append_to_file"),
    ("list_dir", "list_directory"),
    ("move_file", "rename_file"),
    ("create_event", "add_event"),
    ("update_event", "modify_event"),
    ("cancel_event", "drop_event"),
    ("list_events", "get_events"),
    ("check_conflicts", "find_conflicts"),
];

fn renamed_tool(tool: &str) -> String {
    TOOL_RENAMES
        .iter()
        .find(|(from, _)| *from == tool)
        .map_or_else(|| format!("{tool}_v2"), |(_, to)| to.to_string())
}

/// A fresh name for the first parameter of `schema`, avoiding its other names.
fn param_variant(s: &mut SeededStream, schema: &ToolSchema) -> Option<(String, String)> {
    let first = schema.params.first()?;
    let pool = PARAM_VARIANTS.iter().find(|(name, _)| *name == first.name)?.1;
    let fresh: Vec<&str> = pool.iter().copied().filter(|v| schema.param(v).is_none()).collect();
    if fresh.is_empty() {
        return None;
    }
    Some((first.name.clone(), s.pick(&fresh).to_string()))
}

fn schema<'a>(schemas: &'a [ToolSchema], tool: &str) -> &'a ToolSchema {
    schemas
        .iter()
        .find(|t| t.name == tool)
        .expect("plan tools come from the catalog")
}

/// Picks a required step, preferring ones whose tool takes parameters when asked.
fn required_call<'a>(s: &mut SeededStream, plan: &'a Plan, needs_params: bool, schemas: &[ToolSchema]) -> &'a ToolCall {
    let candidates: Vec<&ToolCall> = plan
        .required
        .iter()
        .filter(|c| !needs_params || !schema(schemas, &c.tool).params.is_empty())
        .collect();
    let pool = if candidates.is_empty() {
        plan.required.iter().collect()
    } else {
        candidates
    };
    pool[s.next_below(pool.len() as u64) as usize]
}

/// Trigger for a required call: by tool name, or by its first string argument.
fn required_trigger(s: &mut SeededStream, call: &ToolCall) -> Trigger {
    let string_arg = call
        .arguments
        .iter()
        .find_map(|(k, v)| v.as_str().map(|v| (k.clone(), v.to_string())));
    match string_arg {
        Some((param, value)) if s.chance(1.0 / 3.0) => Trigger::ArgPattern {
            tool: call.tool.clone(),
            param,
            substring: value,
        },
        _ => Trigger::ToolName {
            tool: call.tool.clone(),
        },
    }
}

/// Trigger aimed at the optional tail: the call number it would have if every
/// earlier step succeeded first time.
fn tail_trigger(plan: &Plan) -> Trigger {
    Trigger::NthCall {
        n: plan.calls_before_tail() as u32 + 1,
    }
}

/// Builds the fault plan and, for adversarial tasks, adjusts the visible schemas.
pub(crate) fn place(
    family: FaultType,
    code: usize,
    plan: &Plan,
    schemas: &mut [ToolSchema],
    budgets: &Budget,
    s: &mut SeededStream,
) -> FaultSpec {
    match family {
        FaultType::Timeout => {
            let (trigger, fail_count) = match code {
                0 | 1 => {
                    let call = required_call(s, plan, false, schemas);
                    let fail_count = if code == 0 { 1 + s.next_below(2) as u32 } else { 0 };
                    (required_trigger(s, call), fail_count)
                }
                2 => (tail_trigger(plan), 1 + s.next_below(2) as u32),
                _ => (tail_trigger(plan), 0),
            };
            FaultSpec {
                trigger,
                behavior: FaultBehavior::Timeout {
                    fail_count_before_recovery: fail_count,
                },
            }
        }
        FaultType::SchemaDrift => {
            let (trigger, tool, rename_tool) = match code {
                0 => {
                    let call = required_call(s, plan, true, schemas);
                    (
                        Trigger::ToolName {
                            tool: call.tool.clone(),
                        },
                        call.tool.clone(),
                        false,
                    )
                }
                1 => {
                    let call = required_call(s, plan, false, schemas);
                    (
                        Trigger::ToolName {
                            tool: call.tool.clone(),
                        },
                        call.tool.clone(),
                        true,
                    )
                }
                _ => {
                    let tail = plan.tail.as_ref().expect("every plan has a tail");
                    (tail_trigger(plan), tail.tool.clone(), code == 3)
                }
            };
            let target = schema(schemas, &tool);
            let param_renames: BTreeMap<String, String> = if rename_tool {
                BTreeMap::new()
            } else {
                param_variant(s, target).into_iter().collect()
            };
            let tool_rename = (rename_tool || param_renames.is_empty()).then(|| renamed_tool(&tool));
            FaultSpec {
                trigger,
                behavior: FaultBehavior::SchemaDrift {
                    tool,
                    param_renames,
                    tool_rename,
                },
            }
        }
        FaultType::RateLimit => {
            let call = required_call(s, plan, false, schemas);
            FaultSpec {
                trigger: required_trigger(s, call),
                behavior: FaultBehavior::RateLimit {
                    retry_after_steps: budgets.max_steps + 1 + s.next_below(3) as u32,
                    recover_after_failures: 0,
                },
            }
        }
        FaultType::AuthFailure => {
            let call = required_call(s, plan, false, schemas);
            FaultSpec {
                trigger: required_trigger(s, call),
                behavior: FaultBehavior::AuthFailure { persistent: true },
            }
        }
        FaultType::AdversarialRewrite => {
            let tool = required_call(s, plan, true, schemas).tool.clone();
            let target = schemas.iter_mut().find(|t| t.name == tool).expect("plan tool");
            if let Some((_, variant)) = param_variant(s, target) {
                target.params[0].name = variant;
            }
            let trigger = if s.chance(0.7) {
                Trigger::ToolName { tool }
            } else {
                Trigger::Probabilistic {
                    p: *s.pick(&[0.5, 1.0]),
                }
            };
            let style = [
                RewriteStyle::Vague,
                RewriteStyle::MisleadingParam,
                RewriteStyle::WrongToolHint,
            ][code % 3];
            FaultSpec {
                trigger,
                behavior: FaultBehavior::AdversarialRewrite { style },
            }
        }
    }
}

/// Survey tool of a plan with a survey, paired with a prerequisite the plan never calls.
pub(crate) fn trap(domain: Domain, plan: &Plan, s: &mut SeededStream) -> Option<PolicyRule> {
    let survey = plan.survey.as_ref()?;
    let unused = unused_tools(domain, plan);
    Some(PolicyRule::RequireSuccessBefore {
        prerequisite: s.pick(&unused).to_string(),
        gated: survey.tool.clone(),
    })
}

fn unused_tools(domain: Domain, plan: &Plan) -> Vec<&'static str> {
    let used = plan.tools();
    tool_names(domain).into_iter().filter(|t| !used.contains(t)).collect()
}

/// Rules that a plan-following agent never trips.
pub(crate) fn non_binding(
    domain: Domain,
    plan: &Plan,
    budgets: &Budget,
    taken: &[PolicyRule],
    s: &mut SeededStream,
) -> Vec<PolicyRule> {
    let mut rules = Vec::new();
    let taken_tools: Vec<&str> = taken.iter().flat_map(PolicyRule::tools).collect();
    let free: Vec<&str> = unused_tools(domain, plan)
        .into_iter()
        .filter(|t| !taken_tools.contains(t))
        .collect();
    if !free.is_empty() && s.chance(0.5) {
        rules.push(PolicyRule::ForbiddenTool {
            tool: s.pick(&free).to_string(),
        });
    }
    if s.chance(0.5) {
        let tool = s.pick(&plan.required).tool.clone();
        rules.push(PolicyRule::MaxCallsPerTool {
            tool,
            limit: budgets.max_tool_calls,
        });
    }
    rules
}
