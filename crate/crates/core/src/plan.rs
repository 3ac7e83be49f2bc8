//! Reference solutions derived from a task's goal annotation.
//!
//! The generator places faults relative to these plans and the built-in agents
//! follow them. Calls use the domain's default parameter names; a task whose
//! schemas rename parameters will reject them until repaired.

use serde_json::{Map, Value};

use crate::env::ToolCall;
use crate::task::{Domain, GoalAnnotation};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub call: ToolCall,
    /// Repair-capable agents may skip past a failed optional step.
    pub optional: bool,
}

impl PlanStep {
    fn required(call: ToolCall) -> Self {
        Self { call, optional: false }
    }

    fn optional(call: ToolCall) -> Self {
        Self { call, optional: true }
    }
}

/// A plan split into its three parts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plan {
    /// Leading look-around call, present when the goal asks for it.
    pub survey: Option<ToolCall>,
    pub required: Vec<ToolCall>,
    /// Trailing confirmation call; never needed for the success criteria.
    pub tail: Option<ToolCall>,
}

impl Plan {
    pub fn steps(&self) -> Vec<PlanStep> {
        let mut out = Vec::new();
        out.extend(self.survey.clone().map(PlanStep::optional));
        out.extend(self.required.iter().cloned().map(PlanStep::required));
        out.extend(self.tail.clone().map(PlanStep::optional));
        out
    }

    /// Calls issued before the tail when every step succeeds first time.
    pub fn calls_before_tail(&self) -> usize {
        usize::from(self.survey.is_some()) + self.required.len()
    }

    pub fn tools(&self) -> Vec<&str> {
        self.survey
            .iter()
            .chain(&self.required)
            .chain(&self.tail)
            .map(|c| c.tool.as_str())
            .collect()
    }
}

fn slot<'a>(goal: &'a GoalAnnotation, key: &str) -> Option<&'a Value> {
    goal.slots.get(key)
}

fn s(goal: &GoalAnnotation, key: &str) -> Option<String> {
    slot(goal, key)?.as_str().map(str::to_string)
}

fn i(goal: &GoalAnnotation, key: &str) -> Option<i64> {
    slot(goal, key)?.as_i64()
}

fn parent_dir(path: &str) -> String {
    path.rsplit_once('/').map(|(d, _)| d.to_string()).unwrap_or_default()
}

/// Domain an intent belongs to. Intent names are unique across domains.
pub fn intent_domain(intent: &str) -> Option<Domain> {
    Some(match intent {
        "create_and_verify" | "update_field" | "delete_record" => Domain::Crud,
        "answer_question" => Domain::Retrieval,
        "write_note" | "append_log" | "archive_file" => Domain::Files,
        "book_meeting" | "reschedule" | "cancel_event" => Domain::Scheduling,
        _ => return None,
    })
}

/// Returns `None` when the intent is unknown or a slot is missing.
pub fn reference_plan(goal: &GoalAnnotation) -> Option<Plan> {
    let domain = intent_domain(&goal.intent)?;
    let survey = goal.slots.get("survey").and_then(Value::as_bool).unwrap_or(false);
    let mut plan = Plan::default();
    match (domain, goal.intent.as_str()) {
        (Domain::Crud, intent) => {
            let id = s(goal, "id")?;
            plan.required = match intent {
                "create_and_verify" => vec![
                    ToolCall::new("create_record")
                        .arg("id", id.clone())
                        .arg("title", s(goal, "title")?)
                        .arg("fields", slot(goal, "fields")?.clone()),
                    ToolCall::new("read_record").arg("id", id),
                ],
                "update_field" => {
                    let mut fields = Map::new();
                    fields.insert(s(goal, "field")?, slot(goal, "value")?.clone());
                    vec![
                        ToolCall::new("update_record")
                            .arg("id", id.clone())
                            .arg("fields", fields),
                        ToolCall::new("read_record").arg("id", id),
                    ]
                }
                "delete_record" => vec![
                    ToolCall::new("read_record").arg("id", id.clone()),
                    ToolCall::new("delete_record").arg("id", id),
                ],
                _ => return None,
            };
            plan.tail = Some(ToolCall::new("list_records"));
            if survey {
                plan.survey = Some(ToolCall::new("list_records"));
            }
        }
        (Domain::Retrieval, "answer_question") => {
            plan.required = vec![
                ToolCall::new("search").arg("query", s(goal, "query")?),
                ToolCall::new("fetch_document").arg("id", s(goal, "doc_id")?),
                ToolCall::new("submit_answer").arg("text", s(goal, "answer")?),
            ];
            plan.tail = Some(ToolCall::new("search").arg("query", s(goal, "answer")?));
        }
        (Domain::Files, intent) => {
            let (required, dir) = match intent {
                "write_note" => {
                    let path = s(goal, "path")?;
                    (
                        vec![
                            ToolCall::new("create_file")
                                .arg("path", path.clone())
                                .arg("content", s(goal, "content")?),
                            ToolCall::new("read_file").arg("path", path.clone()),
                        ],
                        parent_dir(&path),
                    )
                }
                "append_log" => {
                    let path = s(goal, "path")?;
                    (
                        vec![
                            ToolCall::new("append_file")
                                .arg("path", path.clone())
                                .arg("content", s(goal, "line")?),
                            ToolCall::new("read_file").arg("path", path.clone()),
                        ],
                        parent_dir(&path),
                    )
                }
                "archive_file" => {
                    let (src, dst) = (s(goal, "src")?, s(goal, "dst")?);
                    (
                        vec![
                            ToolCall::new("read_file").arg("path", src.clone()),
                            ToolCall::new("move_file").arg("src", src).arg("dst", dst.clone()),
                        ],
                        parent_dir(&dst),
                    )
                }
                _ => return None,
            };
            plan.required = required;
            plan.tail = Some(ToolCall::new("list_dir").arg("path", dir.clone()));
            if survey {
                plan.survey = Some(ToolCall::new("list_dir").arg("path", dir));
            }
        }
        (Domain::Scheduling, intent) => {
            let id = s(goal, "id")?;
            let (required, looker) = match intent {
                "book_meeting" => (
                    vec![
                        ToolCall::new("create_event")
                            .arg("id", id)
                            .arg("start", i(goal, "start")?)
                            .arg("end", i(goal, "end")?)
                            .arg("title", s(goal, "title")?),
                        ToolCall::new("list_events"),
                    ],
                    "check_conflicts",
                ),
                "reschedule" => (
                    vec![
                        ToolCall::new("update_event")
                            .arg("id", id)
                            .arg("start", i(goal, "start")?)
                            .arg("end", i(goal, "end")?),
                        ToolCall::new("check_conflicts"),
                    ],
                    "list_events",
                ),
                "cancel_event" => (
                    vec![
                        ToolCall::new("cancel_event").arg("id", id),
                        ToolCall::new("list_events"),
                    ],
                    "check_conflicts",
                ),
                _ => return None,
            };
            plan.required = required;
            plan.tail = Some(ToolCall::new(looker));
            if survey {
                plan.survey = Some(ToolCall::new(looker));
            }
        }
        _ => return None,
    }
    Some(plan)
}

/// Helper for building goal slots.
pub fn slots(pairs: &[(&str, Value)]) -> std::collections::BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}
