use serde::{Deserialize, Serialize};

use crate::agent::AgentAction;
use crate::canonical::{self, CanonicalError};
use crate::env::{ErrorPayload, ToolResult};
use crate::scoring::Transcript;
use crate::task::RewriteStyle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Success,
    FinishWithoutSuccess,
    BudgetSteps,
    BudgetCalls,
    RetryOverflow,
    AgentProtocolError,
}

impl Termination {
    pub fn is_budget(self) -> bool {
        matches!(self, Termination::BudgetSteps | Termination::BudgetCalls)
    }

    pub fn is_catastrophic(self) -> bool {
        matches!(self, Termination::RetryOverflow | Termination::AgentProtocolError)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationOutcome {
    Passed,
    Failed,
    /// Rejected by policy before validation ran.
    NotReached,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyEvent {
    pub rule_index: usize,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteRecord {
    pub fault_index: usize,
    pub style: RewriteStyle,
    /// What the agent was shown instead of the recorded error.
    pub visible: ErrorPayload,
}

/// Running totals after a step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub steps: u32,
    pub tool_calls: u32,
    pub successful_calls: u32,
    pub retries: u32,
    pub violations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u32,
    pub action: AgentAction,
    #[serde(default)]
    pub retry: bool,
    #[serde(default)]
    pub validation: Option<ValidationOutcome>,
    /// Full result including fault context, before any rewrite.
    #[serde(default)]
    pub result: Option<ToolResult>,
    #[serde(default)]
    pub rewrite: Option<RewriteRecord>,
    #[serde(default)]
    pub policy_events: Vec<PolicyEvent>,
    pub counters: Counters,
    pub state_digest: String,
    /// Hash chain over the trace so far; see [`chain_link`].
    pub chain: String,
}

impl StepRecord {
    pub fn call_tool(&self) -> Option<&str> {
        match &self.action {
            AgentAction::Call(c) => Some(&c.tool),
            AgentAction::Finish => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub task_id: String,
    pub termination: Termination,
    pub counters: Counters,
    pub chain: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceLine {
    Step(StepRecord),
    End(EpisodeSummary),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub task_id: String,
    pub steps: Vec<StepRecord>,
    pub termination: Termination,
    pub counters: Counters,
    /// Detail for `AgentProtocolError`; kept out of the serialized trace.
    pub protocol_error: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error("trace has no end record")]
    MissingEnd,
    #[error("records after the end record")]
    TrailingRecords,
}

pub(crate) fn genesis(task_id: &str) -> String {
    canonical::sha256_hex(format!("trace\0{task_id}").as_bytes())
}

/// `sha256(prev ‖ canonical(step with an empty chain field))`.
pub(crate) fn chain_link(prev: &str, step: &StepRecord) -> String {
    let mut unchained = step.clone();
    unchained.chain.clear();
    let mut bytes = prev.as_bytes().to_vec();
    bytes.extend(canonical::canonical_bytes(&TraceLine::Step(unchained)).expect("step records are canonical"));
    canonical::sha256_hex(&bytes)
}

impl EpisodeTrace {
    pub fn success(&self) -> bool {
        self.termination == Termination::Success
    }

    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            task_id: self.task_id.clone(),
            termination: self.termination,
            counters: self.counters,
            chain: self
                .steps
                .last()
                .map_or_else(|| genesis(&self.task_id), |s| s.chain.clone()),
        }
    }

    pub fn lines(&self) -> Vec<TraceLine> {
        self.steps
            .iter()
            .cloned()
            .map(TraceLine::Step)
            .chain(std::iter::once(TraceLine::End(self.summary())))
            .collect()
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        canonical::to_jsonl(&self.lines()).expect("trace lines are canonical")
    }

    pub fn from_jsonl(bytes: &[u8]) -> Result<Self, TraceError> {
        let lines: Vec<TraceLine> = canonical::from_jsonl(bytes)?;
        let mut steps = Vec::new();
        let mut end = None;
        for line in lines {
            match (line, &end) {
                (_, Some(_)) => return Err(TraceError::TrailingRecords),
                (TraceLine::Step(s), None) => steps.push(s),
                (TraceLine::End(e), None) => end = Some(e),
            }
        }
        let end = end.ok_or(TraceError::MissingEnd)?;
        Ok(Self {
            task_id: end.task_id,
            steps,
            termination: end.termination,
            counters: end.counters,
            protocol_error: None,
        })
    }
}

impl Transcript for EpisodeTrace {
    fn tool_calls(&self) -> u32 {
        self.counters.tool_calls
    }

    fn successful_calls(&self) -> u32 {
        self.counters.successful_calls
    }
}
