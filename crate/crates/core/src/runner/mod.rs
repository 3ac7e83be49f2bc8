//! Drives one agent through one task.
//!
//! Each call goes through policy check, the fault engine (drift, validation,
//! auth, rate limit, timeout), execution, and finally adversarial rewriting of
//! any error before the agent sees it. Success is evaluated after every step,
//! so no trace contains a step taken after the criteria were met.

use std::collections::{BTreeMap, BTreeSet};

use crate::agent::{Agent, AgentAction, Briefing, Observation, Remaining};
use crate::env::{Environment, ErrorCode, ErrorPayload, ToolCall, ToolResult};
use crate::fault::FaultRuntime;
use crate::scoring::criteria::{check_criteria, CallCounts};
use crate::task::{PolicyRule, TaskRecord};

mod replay;
mod trace;

pub use replay::{replay, ReplayVerdict};
pub use trace::{
    Counters, EpisodeSummary, EpisodeTrace, PolicyEvent, RewriteRecord, StepRecord, Termination, TraceError, TraceLine,
    ValidationOutcome,
};

/// Policy bookkeeping for one episode.
#[derive(Debug, Default)]
struct PolicyLedger {
    calls_per_tool: BTreeMap<String, u32>,
    succeeded: BTreeSet<String>,
}

impl PolicyLedger {
    fn violations(&self, rules: &[PolicyRule], call: &ToolCall) -> Vec<PolicyEvent> {
        rules
            .iter()
            .enumerate()
            .filter(|(_, rule)| match rule {
                PolicyRule::ForbiddenTool { tool } => call.tool == *tool,
                PolicyRule::MaxCallsPerTool { tool, limit } => {
                    call.tool == *tool && self.calls_per_tool.get(tool).copied().unwrap_or(0) >= *limit
                }
                PolicyRule::RequireSuccessBefore { prerequisite, gated } => {
                    call.tool == *gated && !self.succeeded.contains(prerequisite)
                }
            })
            .map(|(rule_index, rule)| PolicyEvent {
                rule_index,
                rule: rule.to_string(),
            })
            .collect()
    }

    fn record(&mut self, tool: &str, ok: bool) {
        *self.calls_per_tool.entry(tool.to_string()).or_default() += 1;
        if ok {
            self.succeeded.insert(tool.to_string());
        }
    }
}

fn agent_view(result: &ToolResult) -> ToolResult {
    let mut visible = result.clone();
    if let Some(e) = visible.error.as_mut() {
        e.fault_context = None;
    }
    visible
}

pub fn run_episode(task: &TaskRecord, agent: &mut dyn Agent) -> EpisodeTrace {
    let mut env = Environment::new(task);
    let mut faults = FaultRuntime::new(task);
    faults.apply_static_drift(&mut env);
    let budget = task.budgets;

    let mut trace = EpisodeTrace {
        task_id: task.task_id.clone(),
        steps: Vec::new(),
        termination: Termination::AgentProtocolError,
        counters: Counters::default(),
        protocol_error: None,
    };
    if let Err(e) = agent.reset(&Briefing::for_task(task)) {
        trace.protocol_error = Some(e.to_string());
        return trace;
    }

    let mut counters = Counters::default();
    let mut chain = trace::genesis(&task.task_id);
    let mut last_visible: Option<ToolResult> = None;
    let mut last_failed_tool: Option<String> = None;
    let mut ledger = PolicyLedger::default();

    let termination = loop {
        if counters.steps >= budget.max_steps {
            break Termination::BudgetSteps;
        }
        if counters.tool_calls >= budget.max_tool_calls {
            break Termination::BudgetCalls;
        }
        let observation = Observation {
            step: counters.steps + 1,
            remaining: Remaining {
                steps: budget.max_steps - counters.steps,
                calls: budget.max_tool_calls - counters.tool_calls,
                retries: budget.max_retries.saturating_sub(counters.retries),
            },
            last_result: last_visible.take(),
        };
        let action = match agent.act(&observation) {
            Ok(a) => a,
            Err(e) => {
                trace.protocol_error = Some(e.to_string());
                break Termination::AgentProtocolError;
            }
        };
        counters.steps += 1;

        let call = match &action {
            AgentAction::Finish => {
                let met = check_criteria(env.state(), &call_counts(&counters), &task.success_criteria);
                let mut rec = StepRecord {
                    step: counters.steps,
                    action,
                    retry: false,
                    validation: None,
                    result: None,
                    rewrite: None,
                    policy_events: Vec::new(),
                    counters,
                    state_digest: env.state_digest(),
                    chain: String::new(),
                };
                rec.chain = trace::chain_link(&chain, &rec);
                trace.steps.push(rec);
                break if met {
                    Termination::Success
                } else {
                    Termination::FinishWithoutSuccess
                };
            }
            AgentAction::Call(call) => call.clone(),
        };

        counters.tool_calls += 1;
        let retry = last_failed_tool.as_deref() == Some(call.tool.as_str());
        if retry {
            counters.retries += 1;
        }

        let policy_events = ledger.violations(&task.policy_rules, &call);
        let (validation, mut result) = if !policy_events.is_empty() {
            counters.violations += 1;
            let rules: Vec<&str> = policy_events.iter().map(|e| e.rule.as_str()).collect();
            let err = ErrorPayload::new(
                ErrorCode::PolicyViolation,
                format!("policy violation: {}", rules.join("; ")),
            );
            (ValidationOutcome::NotReached, ToolResult::failure(err))
        } else {
            match faults.intercept(&mut env, &call, counters.tool_calls, counters.steps) {
                Ok(()) => (ValidationOutcome::Passed, env.execute(&call)),
                Err(err) => {
                    let outcome = if matches!(err.code, ErrorCode::UnknownTool | ErrorCode::InvalidArguments) {
                        ValidationOutcome::Failed
                    } else {
                        ValidationOutcome::Passed
                    };
                    (outcome, ToolResult::failure(err))
                }
            }
        };

        let rewrite = match result.error.as_mut() {
            Some(err) => faults
                .rewrite(&env, &call, counters.tool_calls, err)
                .map(|r| RewriteRecord {
                    fault_index: r.fault_index,
                    style: r.style,
                    visible: r.visible,
                }),
            None => None,
        };
        last_visible = Some(match &rewrite {
            Some(r) => ToolResult::failure(r.visible.clone()),
            None => agent_view(&result),
        });

        ledger.record(&call.tool, result.ok);
        if result.ok {
            counters.successful_calls += 1;
            last_failed_tool = None;
        } else {
            last_failed_tool = Some(call.tool.clone());
        }
        env.record(call.clone(), result.clone());

        let mut rec = StepRecord {
            step: counters.steps,
            action: AgentAction::Call(call),
            retry,
            validation: Some(validation),
            result: Some(result),
            rewrite,
            policy_events,
            counters,
            state_digest: env.state_digest(),
            chain: String::new(),
        };
        rec.chain = trace::chain_link(&chain, &rec);
        chain = rec.chain.clone();
        trace.steps.push(rec);

        if check_criteria(env.state(), &call_counts(&counters), &task.success_criteria) {
            break Termination::Success;
        }
        if retry && counters.retries > budget.max_retries {
            break Termination::RetryOverflow;
        }
    };
    trace.termination = termination;
    trace.counters = counters;
    trace
}

fn call_counts(c: &Counters) -> CallCounts {
    CallCounts {
        tool_calls: c.tool_calls,
        successful_calls: c.successful_calls,
    }
}
