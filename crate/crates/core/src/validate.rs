//! Structural validation of task records.

use std::collections::BTreeSet;

use crate::env::{self, catalog};
use crate::task::{Criterion, FaultBehavior, PolicyRule, TaskRecord, Trigger};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("task_id: must be non-empty")]
    TaskId,
    #[error("instruction: must be non-empty")]
    InstructionPresence,
    #[error("tool_schemas[{tool}]: {detail}")]
    ToolSchema { tool: String, detail: String },
    #[error("initial_state: {0}")]
    DomainState(String),
    #[error("success_criteria: at least one criterion is required")]
    NoCriteria,
    #[error("success_criteria[{index}]: {detail}")]
    CriteriaStructure { index: usize, detail: String },
    #[error("fault_plan[{index}]: references unknown tool {tool}")]
    FaultRef { index: usize, tool: String },
    #[error("fault_plan[{index}]: {detail}")]
    FaultSpec { index: usize, detail: String },
    #[error("policy_rules[{index}]: references unknown tool {tool}")]
    PolicyRef { index: usize, tool: String },
    #[error("policy_rules[{index}]: {detail}")]
    PolicyRule { index: usize, detail: String },
    #[error("budgets: {0}")]
    Budget(String),
}

/// Returns every rule the record breaks; empty means valid.
pub fn validate_task(task: &TaskRecord) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    if task.task_id.trim().is_empty() {
        errors.push(ValidationError::TaskId);
    }
    if task.instruction.trim().is_empty() {
        errors.push(ValidationError::InstructionPresence);
    }

    let mut tool_names = BTreeSet::new();
    for schema in &task.tool_schemas {
        let bad = |detail: String| ValidationError::ToolSchema {
            tool: schema.name.clone(),
            detail,
        };
        if !tool_names.insert(schema.name.as_str()) {
            errors.push(bad("duplicate tool name".into()));
        }
        let mut params = BTreeSet::new();
        for p in &schema.params {
            if p.name.is_empty() {
                errors.push(bad("empty parameter name".into()));
            }
            if !params.insert(p.name.as_str()) {
                errors.push(bad(format!("duplicate parameter {}", p.name)));
            }
            if let Some(allowed) = &p.allowed_values {
                if allowed.is_empty() || !allowed.iter().all(|v| p.value_kind.matches(v)) {
                    errors.push(bad(format!(
                        "allowed_values of {} must be non-empty and match its kind",
                        p.name
                    )));
                }
            }
        }
        if let Err(detail) = catalog::check_signature(task.domain, schema) {
            errors.push(bad(detail));
        }
    }
    let has_tool = |t: &str| tool_names.contains(t);

    if let Err(detail) = env::check_state(task.domain, &task.initial_state) {
        errors.push(ValidationError::DomainState(detail));
    }

    if task.success_criteria.is_empty() {
        errors.push(ValidationError::NoCriteria);
    }
    for (index, c) in task.success_criteria.iter().enumerate() {
        let detail = match c {
            Criterion::MinToolCalls { n: 0 } | Criterion::MinSuccessfulToolCalls { n: 0 } => {
                Some("transcript counts must be at least 1".to_string())
            }
            Criterion::StateKeyValue { key, .. } if key.is_empty() => Some("key must be non-empty".into()),
            _ => match c.path() {
                Some(p) if p.is_empty() || p.split('/').any(str::is_empty) => Some(format!("malformed path '{p}'")),
                _ => None,
            },
        };
        if let Some(detail) = detail {
            errors.push(ValidationError::CriteriaStructure { index, detail });
        }
    }

    for (index, spec) in task.fault_plan.iter().enumerate() {
        let mut refs: Vec<&str> = Vec::new();
        match &spec.trigger {
            Trigger::ToolName { tool } => refs.push(tool),
            Trigger::ArgPattern { tool, param, substring } => {
                refs.push(tool);
                if substring.is_empty() {
                    errors.push(ValidationError::FaultSpec {
                        index,
                        detail: "arg pattern substring must be non-empty".into(),
                    });
                }
                if let Some(schema) = task.schema(tool) {
                    if schema.param(param).is_none() {
                        errors.push(ValidationError::FaultSpec {
                            index,
                            detail: format!("arg pattern names unknown parameter {tool}.{param}"),
                        });
                    }
                }
            }
            Trigger::NthCall { n: 0 } => errors.push(ValidationError::FaultSpec {
                index,
                detail: "nth call index is 1-based".into(),
            }),
            Trigger::NthCall { .. } => {}
            Trigger::Probabilistic { p } => {
                if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                    errors.push(ValidationError::FaultSpec {
                        index,
                        detail: format!("probability {p} outside (0, 1]"),
                    });
                }
            }
        }
        match &spec.behavior {
            FaultBehavior::SchemaDrift {
                tool,
                param_renames,
                tool_rename,
            } => {
                refs.push(tool);
                if let Some(schema) = task.schema(tool) {
                    let new_names: BTreeSet<&String> = param_renames.values().collect();
                    if new_names.len() != param_renames.len() {
                        errors.push(ValidationError::FaultSpec {
                            index,
                            detail: "param rename map is not injective".into(),
                        });
                    }
                    for (old, new) in param_renames {
                        if schema.param(old).is_none() {
                            errors.push(ValidationError::FaultSpec {
                                index,
                                detail: format!("renamed param {tool}.{old} does not exist"),
                            });
                        }
                        let collides = schema.param(new).is_some() && !param_renames.contains_key(new);
                        if new.is_empty() || collides {
                            errors.push(ValidationError::FaultSpec {
                                index,
                                detail: format!("rename target {new} is empty or already declared"),
                            });
                        }
                    }
                }
                if let Some(new) = tool_rename {
                    if new.is_empty() || has_tool(new) {
                        errors.push(ValidationError::FaultSpec {
                            index,
                            detail: format!("tool rename target {new} is empty or already declared"),
                        });
                    }
                }
            }
            FaultBehavior::RateLimit {
                retry_after_steps: 0, ..
            } => errors.push(ValidationError::FaultSpec {
                index,
                detail: "retry_after_steps must be positive".into(),
            }),
            _ => {}
        }
        for tool in refs {
            if !has_tool(tool) {
                errors.push(ValidationError::FaultRef {
                    index,
                    tool: tool.to_string(),
                });
            }
        }
    }

    for (index, rule) in task.policy_rules.iter().enumerate() {
        for tool in rule.tools() {
            if !has_tool(tool) {
                errors.push(ValidationError::PolicyRef {
                    index,
                    tool: tool.to_string(),
                });
            }
        }
        match rule {
            PolicyRule::MaxCallsPerTool { limit: 0, .. } => errors.push(ValidationError::PolicyRule {
                index,
                detail: "limit must be at least 1".into(),
            }),
            PolicyRule::RequireSuccessBefore { prerequisite, gated } if prerequisite == gated => {
                errors.push(ValidationError::PolicyRule {
                    index,
                    detail: "prerequisite and gated tool must differ".into(),
                })
            }
            _ => {}
        }
    }

    let b = &task.budgets;
    if b.max_steps == 0 || b.max_tool_calls == 0 || b.per_call_timeout_ms == 0 {
        errors.push(ValidationError::Budget(
            "steps, calls and timeout must be positive".into(),
        ));
    }
    if b.max_tool_calls > b.max_steps {
        errors.push(ValidationError::Budget("max_tool_calls exceeds max_steps".into()));
    }
    errors
}
