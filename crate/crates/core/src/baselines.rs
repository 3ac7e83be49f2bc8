//! Deterministic reference agents.
//!
//! All three follow the reference plan built from the goal annotation and
//! differ only in how they react to errors:
//!
//! * `heuristic` gives up at the first error.
//! * `schema_repair` pairs missing and unexpected parameter names by edit
//!   distance, retries transient failures while the retry budget lasts, and
//!   skips failed optional steps.
//! * `policy_aware` adds plan edits for the announced policy rules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentAction, AgentError, Briefing, Observation};
use crate::env::{ErrorCode, ErrorPayload, ToolCall};
use crate::fault::edit_distance;
use crate::plan::{reference_plan, PlanStep};
use crate::task::PolicyRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Heuristic,
    SchemaRepair,
    PolicyAware,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::Heuristic,
        BaselineKind::SchemaRepair,
        BaselineKind::PolicyAware,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Heuristic => "heuristic",
            BaselineKind::SchemaRepair => "schema_repair",
            BaselineKind::PolicyAware => "policy_aware",
        }
    }

    pub fn agent(self) -> BaselineAgent {
        BaselineAgent::new(self)
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown baseline '{0}' (expected heuristic, schema_repair or policy_aware)")]
pub struct UnknownBaseline(pub String);

impl FromStr for BaselineKind {
    type Err = UnknownBaseline;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.replace('-', "_"))
            .ok_or_else(|| UnknownBaseline(s.to_string()))
    }
}

/// The call currently awaiting its result.
#[derive(Debug, Clone)]
struct InFlight {
    step: usize,
    call: ToolCall,
    /// Plan parameter name → name actually sent.
    names: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct BaselineAgent {
    kind: BaselineKind,
    steps: Vec<PlanStep>,
    cursor: usize,
    in_flight: Option<InFlight>,
    /// Per tool: plan parameter name → name that worked.
    learned: BTreeMap<String, BTreeMap<String, String>>,
    tried: BTreeSet<(String, String, String)>,
    calls_per_tool: BTreeMap<String, u32>,
    policy: Vec<PolicyRule>,
    last_failed: Option<String>,
    done: bool,
}

impl BaselineAgent {
    pub fn new(kind: BaselineKind) -> Self {
        Self {
            kind,
            steps: Vec::new(),
            cursor: 0,
            in_flight: None,
            learned: BTreeMap::new(),
            tried: BTreeSet::new(),
            calls_per_tool: BTreeMap::new(),
            policy: Vec::new(),
            last_failed: None,
            done: false,
        }
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    fn repairs(&self) -> bool {
        self.kind != BaselineKind::Heuristic
    }

    fn policy_aware(&self) -> bool {
        self.kind == BaselineKind::PolicyAware
    }

    /// Moves each in-plan prerequisite in front of the first step it gates.
    fn reorder_for_policy(&mut self) {
        for rule in self.policy.clone() {
            let PolicyRule::RequireSuccessBefore { prerequisite, gated } = rule else {
                continue;
            };
            let g = self.steps.iter().position(|s| s.call.tool == gated);
            let p = self.steps.iter().position(|s| s.call.tool == prerequisite);
            if let (Some(g), Some(p)) = (g, p) {
                if p > g {
                    let step = self.steps.remove(p);
                    self.steps.insert(g, step);
                }
            }
        }
    }

    fn forbidden(&self, tool: &str) -> bool {
        self.policy
            .iter()
            .any(|r| matches!(r, PolicyRule::ForbiddenTool { tool: t } if t == tool))
    }

    fn at_limit(&self, tool: &str) -> bool {
        let used = self.calls_per_tool.get(tool).copied().unwrap_or(0);
        self.policy
            .iter()
            .any(|r| matches!(r, PolicyRule::MaxCallsPerTool { tool: t, limit } if t == tool && used >= *limit))
    }

    /// The plan call for `step` with every learned rename applied.
    fn prepared(&self, step: usize) -> InFlight {
        let plan_call = &self.steps[step].call;
        let learned = self.learned.get(&plan_call.tool);
        let names: BTreeMap<String, String> = plan_call
            .arguments
            .keys()
            .map(|k| {
                (
                    k.clone(),
                    learned.and_then(|l| l.get(k)).cloned().unwrap_or_else(|| k.clone()),
                )
            })
            .collect();
        let mut call = ToolCall::new(plan_call.tool.clone());
        for (k, v) in &plan_call.arguments {
            call.arguments.insert(names[k].clone(), v.clone());
        }
        InFlight { step, call, names }
    }

    /// Pairs each missing name with the closest unused unexpected name.
    fn pairings(err: &ErrorPayload) -> Vec<(String, String)> {
        let mut used = BTreeSet::new();
        let mut out = Vec::new();
        for m in &err.missing_params {
            let best = err
                .unknown_params
                .iter()
                .enumerate()
                .filter(|(i, _)| !used.contains(i))
                .min_by_key(|(i, u)| (edit_distance(u, m), *i));
            if let Some((i, u)) = best {
                used.insert(i);
                out.push((u.clone(), m.clone()));
            }
        }
        out
    }

    /// A follow-up call for a failed one, or `None` to give up on it.
    fn recover(&mut self, failed: &InFlight, err: &ErrorPayload, obs: &Observation) -> Option<InFlight> {
        if obs.remaining.retries == 0 || obs.remaining.calls == 0 {
            return None;
        }
        if self.policy_aware() && self.at_limit(&failed.call.tool) {
            return None;
        }
        match err.code {
            ErrorCode::InvalidArguments | ErrorCode::SchemaDrift => {
                let pairs = Self::pairings(err);
                let fresh: Vec<_> = pairs
                    .iter()
                    .filter(|(u, m)| !self.tried.contains(&(failed.call.tool.clone(), u.clone(), m.clone())))
                    .collect();
                if fresh.is_empty() {
                    return None;
                }
                let mut next = failed.clone();
                for (u, m) in &pairs {
                    self.tried.insert((failed.call.tool.clone(), u.clone(), m.clone()));
                    if let Some(v) = next.call.arguments.remove(u) {
                        next.call.arguments.insert(m.clone(), v);
                    }
                    for sent in next.names.values_mut() {
                        if sent == u {
                            *sent = m.clone();
                        }
                    }
                }
                Some(next)
            }
            ErrorCode::Timeout => Some(failed.clone()),
            ErrorCode::RateLimited => {
                let wait = err.retry_after_steps.unwrap_or(0);
                (wait < obs.remaining.steps).then(|| failed.clone())
            }
            _ => None,
        }
    }

    /// Advances past skippable steps and returns the next call, if any.
    fn next_call(&mut self, obs: &Observation) -> Option<InFlight> {
        while self.cursor < self.steps.len() {
            let step = &self.steps[self.cursor];
            let tool = step.call.tool.clone();
            if self.policy_aware() && (self.forbidden(&tool) || self.at_limit(&tool)) {
                if step.optional {
                    self.cursor += 1;
                    continue;
                }
                return None;
            }
            if self.last_failed.as_deref() == Some(tool.as_str()) && obs.remaining.retries == 0 {
                return None;
            }
            return Some(self.prepared(self.cursor));
        }
        None
    }

    fn issue(&mut self, next: InFlight) -> AgentAction {
        let call = next.call.clone();
        self.in_flight = Some(next);
        AgentAction::Call(call)
    }

    fn finish(&mut self) -> AgentAction {
        self.done = true;
        AgentAction::Finish
    }
}

impl Agent for BaselineAgent {
    fn reset(&mut self, briefing: &Briefing) -> Result<(), AgentError> {
        *self = Self::new(self.kind);
        let plan = reference_plan(&briefing.goal_annotation).ok_or_else(|| {
            AgentError::Protocol(format!(
                "no reference plan for intent '{}'",
                briefing.goal_annotation.intent
            ))
        })?;
        self.steps = plan.steps();
        self.policy = briefing.goal_annotation.policy.clone();
        if self.policy_aware() {
            self.reorder_for_policy();
        }
        Ok(())
    }

    fn act(&mut self, obs: &Observation) -> Result<AgentAction, AgentError> {
        if self.done {
            return Ok(AgentAction::Finish);
        }
        if let Some(flight) = self.in_flight.take() {
            *self.calls_per_tool.entry(flight.call.tool.clone()).or_default() += 1;
            let result = obs
                .last_result
                .as_ref()
                .ok_or_else(|| AgentError::Protocol("missing result for the previous call".into()))?;
            if result.ok {
                let renames: BTreeMap<String, String> =
                    flight.names.into_iter().filter(|(plan, sent)| plan != sent).collect();
                if !renames.is_empty() {
                    self.learned
                        .entry(flight.call.tool.clone())
                        .or_default()
                        .extend(renames);
                }
                self.last_failed = None;
                self.cursor = flight.step + 1;
            } else {
                self.last_failed = Some(flight.call.tool.clone());
                if !self.repairs() {
                    return Ok(self.finish());
                }
                let err = result
                    .error
                    .clone()
                    .unwrap_or_else(|| ErrorPayload::new(ErrorCode::Conflict, ""));
                if let Some(next) = self.recover(&flight, &err, obs) {
                    return Ok(self.issue(next));
                }
                if !self.steps[flight.step].optional {
                    return Ok(self.finish());
                }
                self.cursor = flight.step + 1;
            }
        }
        match self.next_call(obs) {
            Some(next) => Ok(self.issue(next)),
            None => Ok(self.finish()),
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::fixtures;
    use crate::runner::{run_episode, Termination};
    use crate::task::{FaultBehavior, FaultSpec, Trigger};

    fn drift_title(task: crate::task::TaskRecord) -> crate::task::TaskRecord {
        fixtures::with_faults(
            task,
            vec![FaultSpec {
                trigger: Trigger::ToolName {
                    tool: "create_record".into(),
                },
                behavior: FaultBehavior::SchemaDrift {
                    tool: "create_record".into(),
                    param_renames: BTreeMap::from([("title".to_string(), "record_title".to_string())]),
                    tool_rename: None,
                },
            }],
        )
    }

    #[test]
    fn names_round_trip() {
        for k in BaselineKind::ALL {
            assert_eq!(k.as_str().parse::<BaselineKind>().unwrap(), k);
        }
        assert!("schema-repair".parse::<BaselineKind>().is_ok());
        assert!("oracle".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn all_solve_a_clean_task() {
        for k in BaselineKind::ALL {
            let trace = run_episode(&fixtures::crud_task(), &mut k.agent());
            assert_eq!(trace.termination, Termination::Success, "{k}");
            assert_eq!(trace.counters.tool_calls, 2);
        }
    }

    #[test]
    fn repair_fixes_drift_and_heuristic_does_not() {
        let task = drift_title(fixtures::crud_task());
        let h = run_episode(&task, &mut BaselineKind::Heuristic.agent());
        assert_eq!(h.termination, Termination::FinishWithoutSuccess);
        assert_eq!(h.counters.tool_calls, 1);

        let r = run_episode(&task, &mut BaselineKind::SchemaRepair.agent());
        assert_eq!(r.termination, Termination::Success);
        let AgentAction::Call(fixed) = &r.steps[1].action else {
            panic!()
        };
        assert!(fixed.arguments.contains_key("record_title"));
    }

    #[test]
    fn repair_retries_timeouts_within_budget() {
        let task = fixtures::with_faults(
            fixtures::files_task(),
            vec![FaultSpec {
                trigger: Trigger::ToolName {
                    tool: "append_file".into(),
                },
                behavior: FaultBehavior::Timeout {
                    fail_count_before_recovery: 2,
                },
            }],
        );
        let r = run_episode(&task, &mut BaselineKind::SchemaRepair.agent());
        assert_eq!(r.termination, Termination::Success);
        assert_eq!(r.counters.retries, 2);

        let mut tight = task.clone();
        tight.budgets.max_retries = 1;
        let r = run_episode(&tight, &mut BaselineKind::SchemaRepair.agent());
        assert_eq!(r.termination, Termination::FinishWithoutSuccess);
    }

    #[test]
    fn repair_never_overflows_retries() {
        let mut task = fixtures::with_faults(
            fixtures::files_task(),
            vec![FaultSpec {
                trigger: Trigger::ToolName {
                    tool: "append_file".into(),
                },
                behavior: FaultBehavior::Timeout {
                    fail_count_before_recovery: 0,
                },
            }],
        );
        for retries in 0..4 {
            task.budgets.max_retries = retries;
            for k in BaselineKind::ALL {
                let t = run_episode(&task, &mut k.agent());
                assert_ne!(t.termination, Termination::RetryOverflow);
            }
        }
    }

    #[test]
    fn policy_aware_reorders_prerequisite() {
        let mut task = fixtures::crud_task();
        let rule = PolicyRule::RequireSuccessBefore {
            prerequisite: "read_record".into(),
            gated: "create_record".into(),
        };
        task.policy_rules = vec![rule.clone()];
        task.goal_annotation.policy = vec![rule];
        let p = run_episode(&task, &mut BaselineKind::PolicyAware.agent());
        // The moved read fails (nothing created yet) but breaks no rule.
        assert_eq!(p.counters.violations, 0);
        let r = run_episode(&task, &mut BaselineKind::SchemaRepair.agent());
        assert_eq!(r.counters.violations, 1);
    }

    #[test]
    fn optional_survey_is_skipped_after_violation() {
        let mut task = fixtures::crud_task();
        task.goal_annotation
            .slots
            .insert("survey".into(), serde_json::json!(true));
        let rule = PolicyRule::RequireSuccessBefore {
            prerequisite: "delete_record".into(),
            gated: "list_records".into(),
        };
        task.policy_rules = vec![rule.clone()];
        task.goal_annotation.policy = vec![rule];
        let h = run_episode(&task, &mut BaselineKind::Heuristic.agent());
        assert_eq!(
            (h.termination, h.counters.violations),
            (Termination::FinishWithoutSuccess, 1)
        );
        for k in [BaselineKind::SchemaRepair, BaselineKind::PolicyAware] {
            let t = run_episode(&task, &mut k.agent());
            assert_eq!((t.termination, t.counters.violations), (Termination::Success, 1), "{k}");
        }
    }

    #[test]
    fn unknown_intent_is_protocol_error() {
        let mut task = fixtures::crud_task();
        task.goal_annotation.intent = "dance".into();
        let t = run_episode(&task, &mut BaselineKind::Heuristic.agent());
        assert_eq!(t.termination, Termination::AgentProtocolError);
    }
}
