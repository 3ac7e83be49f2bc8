//! Declarative fault plans applied to tool calls.
//!
//! Families are evaluated in a fixed order on every call:
//!
//! 1. schema drift (mutates the enforced schemas, then validation reports it)
//! 2. authorization failure
//! 3. rate limit
//! 4. timeout
//! 5. adversarial rewrite (post-processes any error that reached the agent)
//!
//! Within a family only the first spec whose trigger fires decides, and at most
//! one of families 2-4 injects per call. Probabilistic triggers draw from a
//! per-spec stream labelled `fault/<task_id>/<fault_index>`, so replaying the
//! same call sequence reproduces the same injections.

use serde_json::Value;

use crate::env::{validate_against, Environment, ErrorCode, ErrorPayload, FaultContext, ToolCall};
use crate::stream::SeededStream;
use crate::task::{FaultBehavior, FaultSpec, FaultType, RewriteStyle, TaskRecord, ToolSchema, Trigger};

#[derive(Debug, Clone, PartialEq)]
struct SpecState {
    evaluations: u64,
    injections: u32,
    stream: SeededStream,
    /// Rate limit: step before which calls stay limited.
    cooldown_until: Option<u32>,
    drift_applied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultRuntime {
    specs: Vec<FaultSpec>,
    state: Vec<SpecState>,
}

/// An adversarial rewrite that fired on an error.
#[derive(Debug, Clone, PartialEq)]
pub struct Rewrite {
    pub fault_index: usize,
    pub style: RewriteStyle,
    pub visible: ErrorPayload,
}

impl FaultRuntime {
    pub fn new(task: &TaskRecord) -> Self {
        let state = (0..task.fault_plan.len())
            .map(|i| SpecState {
                evaluations: 0,
                injections: 0,
                stream: SeededStream::new(task.seed, format!("fault/{}/{i}", task.task_id)),
                cooldown_until: None,
                drift_applied: false,
            })
            .collect();
        Self {
            specs: task.fault_plan.clone(),
            state,
        }
    }

    pub fn specs(&self) -> &[FaultSpec] {
        &self.specs
    }

    /// Number of times spec `index` has injected an error.
    pub fn injections(&self, index: usize) -> u32 {
        self.state[index].injections
    }

    pub fn evaluations(&self, index: usize) -> u64 {
        self.state[index].evaluations
    }

    /// Applies every drift whose trigger is a tool name. Interface drift of that
    /// kind is static for the whole episode, so it happens before the first step.
    pub fn apply_static_drift(&mut self, env: &mut Environment) {
        for i in 0..self.specs.len() {
            if matches!(
                (&self.specs[i].trigger, &self.specs[i].behavior),
                (Trigger::ToolName { .. }, FaultBehavior::SchemaDrift { .. })
            ) {
                apply_drift(&self.specs[i].behavior, env);
                self.state[i].drift_applied = true;
            }
        }
    }

    fn context(&self, index: usize) -> FaultContext {
        FaultContext {
            fault_type: self.specs[index].fault_type(),
            fault_index: index,
            trigger: self.specs[index].trigger.to_string(),
        }
    }

    fn fires(&mut self, index: usize, call: &ToolCall, call_index: u32) -> bool {
        let st = &mut self.state[index];
        st.evaluations += 1;
        match &self.specs[index].trigger {
            Trigger::ToolName { tool } => call.tool == *tool,
            Trigger::NthCall { n } => call_index == *n,
            Trigger::ArgPattern { tool, param, substring } => {
                call.tool == *tool
                    && call
                        .arguments
                        .get(param)
                        .is_some_and(|v| render(v).contains(substring.as_str()))
            }
            Trigger::Probabilistic { p } => st.stream.next_unit() < *p,
        }
    }

    /// Indices of specs in one family, declaration order.
    fn family(&self, ty: FaultType) -> Vec<usize> {
        (0..self.specs.len())
            .filter(|&i| self.specs[i].fault_type() == ty)
            .collect()
    }

    /// Runs families 1-4 for one call. `call_index` is the 1-based call counter
    /// and `step` the 1-based episode step. `Ok` means the call may execute.
    pub fn intercept(
        &mut self,
        env: &mut Environment,
        call: &ToolCall,
        call_index: u32,
        step: u32,
    ) -> Result<(), ErrorPayload> {
        // (1) drift: dynamic triggers mutate the interface on first firing.
        for i in self.family(FaultType::SchemaDrift) {
            if self.state[i].drift_applied {
                continue;
            }
            if self.fires(i, call, call_index) {
                apply_drift(&self.specs[i].behavior, env);
                self.state[i].drift_applied = true;
                break;
            }
        }
        if let Err(mut err) = env.validate_call(call) {
            if validate_against(env.original_schemas(), call).is_ok() {
                err.fault_context = self.drift_responsible(env, &call.tool).map(|i| self.context(i));
            }
            return Err(err);
        }

        // (2) auth
        for i in self.family(FaultType::AuthFailure) {
            if self.fires(i, call, call_index) {
                let FaultBehavior::AuthFailure { persistent } = self.specs[i].behavior else {
                    unreachable!()
                };
                if persistent || self.state[i].injections == 0 {
                    return Err(self.inject(
                        i,
                        ErrorCode::Unauthorized,
                        format!("not authorized to call {}", call.tool),
                        None,
                    ));
                }
                break;
            }
        }

        // (3) rate limit
        for i in self.family(FaultType::RateLimit) {
            if self.fires(i, call, call_index) {
                let FaultBehavior::RateLimit {
                    retry_after_steps,
                    recover_after_failures,
                } = self.specs[i].behavior
                else {
                    unreachable!()
                };
                let st = &mut self.state[i];
                let recovered = recover_after_failures > 0 && st.injections >= recover_after_failures;
                if !recovered {
                    let until = *st.cooldown_until.get_or_insert(step + retry_after_steps);
                    if step < until {
                        let wait = until - step;
                        return Err(self.inject(
                            i,
                            ErrorCode::RateLimited,
                            format!("rate limited; retry after {wait} steps"),
                            Some(wait),
                        ));
                    }
                }
                break;
            }
        }

        // (4) timeout
        for i in self.family(FaultType::Timeout) {
            if self.fires(i, call, call_index) {
                let FaultBehavior::Timeout {
                    fail_count_before_recovery,
                } = self.specs[i].behavior
                else {
                    unreachable!()
                };
                if fail_count_before_recovery == 0 || self.state[i].injections < fail_count_before_recovery {
                    return Err(self.inject(i, ErrorCode::Timeout, format!("{} timed out", call.tool), None));
                }
                break;
            }
        }
        Ok(())
    }

    fn inject(&mut self, index: usize, code: ErrorCode, message: String, retry_after: Option<u32>) -> ErrorPayload {
        self.state[index].injections += 1;
        let mut err = ErrorPayload::new(code, message);
        err.retry_after_steps = retry_after;
        err.fault_context = Some(self.context(index));
        err
    }

    /// First applied drift spec that mutated the tool the agent called by its original name.
    fn drift_responsible(&self, env: &Environment, called: &str) -> Option<usize> {
        let original = env.original_schemas().iter().find(|s| s.name == called)?;
        (0..self.specs.len()).find(|&i| {
            self.state[i].drift_applied
                && matches!(&self.specs[i].behavior, FaultBehavior::SchemaDrift { tool, .. } if *tool == original.name)
        })
    }

    /// Family 5. Evaluated only for calls that produced an error; returns the
    /// agent-visible payload when a rewrite fires. `error` gains the rewrite's
    /// fault context if it had none.
    pub fn rewrite(
        &mut self,
        env: &Environment,
        call: &ToolCall,
        call_index: u32,
        error: &mut ErrorPayload,
    ) -> Option<Rewrite> {
        for i in self.family(FaultType::AdversarialRewrite) {
            if !self.fires(i, call, call_index) {
                continue;
            }
            let FaultBehavior::AdversarialRewrite { style } = self.specs[i].behavior else {
                unreachable!()
            };
            self.state[i].injections += 1;
            let mut visible = error.clone();
            visible.fault_context = None;
            rewrite_payload(
                style,
                &mut visible,
                call,
                env.original_schemas(),
                env.effective_schemas(),
            );
            if error.fault_context.is_none() {
                error.fault_context = Some(self.context(i));
            }
            return Some(Rewrite {
                fault_index: i,
                style,
                visible,
            });
        }
        None
    }
}

/// Applies a drift behavior to the environment's effective schemas. Renames
/// whose source name is gone are skipped, which makes reapplication a no-op.
pub fn apply_drift(behavior: &FaultBehavior, env: &mut Environment) {
    let FaultBehavior::SchemaDrift {
        tool,
        param_renames,
        tool_rename,
    } = behavior
    else {
        return;
    };
    let Some(idx) = env.original_schemas().iter().position(|s| s.name == *tool) else {
        return;
    };
    let schema = &mut env.effective_schemas_mut()[idx];
    for p in &mut schema.params {
        if let Some(new) = param_renames.get(&p.name) {
            p.name = new.clone();
        }
    }
    if let Some(new) = tool_rename {
        schema.name = new.clone();
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => crate::canonical::canonical_string(other).unwrap_or_default(),
    }
}

pub(crate) fn edit_distance(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != *cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Cyclic successor of `name` among the tool's declared parameters. Names not
/// declared are first snapped to the closest declared one.
fn misleading_name(name: &str, params: &[String]) -> String {
    if params.is_empty() {
        return name.to_string();
    }
    let pos = params.iter().position(|p| p == name).unwrap_or_else(|| {
        params
            .iter()
            .enumerate()
            .min_by_key(|(i, p)| (edit_distance(name, p), *i))
            .map(|(i, _)| i)
            .expect("non-empty")
    });
    params[(pos + 1) % params.len()].clone()
}

fn rewrite_payload(
    style: RewriteStyle,
    payload: &mut ErrorPayload,
    call: &ToolCall,
    visible_schemas: &[ToolSchema],
    effective_schemas: &[ToolSchema],
) {
    match style {
        RewriteStyle::Vague => {
            payload.message = "request failed".to_string();
            payload.unknown_params.clear();
            payload.missing_params.clear();
            payload.retry_after_steps = None;
        }
        RewriteStyle::MisleadingParam => {
            let params: Vec<String> = visible_schemas
                .iter()
                .chain(effective_schemas)
                .find(|s| s.name == call.tool)
                .map(|s| s.param_names().map(str::to_string).collect())
                .unwrap_or_default();
            if params.is_empty() || (payload.unknown_params.is_empty() && payload.missing_params.is_empty()) {
                return;
            }
            for n in payload
                .unknown_params
                .iter_mut()
                .chain(payload.missing_params.iter_mut())
            {
                *n = misleading_name(n, &params);
            }
            let mut parts = Vec::new();
            if !payload.missing_params.is_empty() {
                parts.push(format!(
                    "missing required parameter(s): {}",
                    payload.missing_params.join(", ")
                ));
            }
            if !payload.unknown_params.is_empty() {
                parts.push(format!(
                    "unexpected parameter(s): {}",
                    payload.unknown_params.join(", ")
                ));
            }
            payload.message = format!("{}: {}", call.tool, parts.join("; "));
        }
        RewriteStyle::WrongToolHint => {
            let names: Vec<&str> = visible_schemas.iter().map(|s| s.name.as_str()).collect();
            let other = match names.iter().position(|n| *n == call.tool) {
                Some(pos) if names.len() > 1 => Some(names[(pos + 1) % names.len()]),
                Some(_) => None,
                None => names.first().copied(),
            };
            if let Some(other) = other {
                payload.message = format!("{}; did you mean '{other}'?", payload.message);
            }
        }
    }
}

#[cfg(test)]
mod tests;
