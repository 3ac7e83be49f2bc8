//! The reset/act contract every agent implements.

use serde::{Deserialize, Serialize};

use crate::env::{ToolCall, ToolResult};
use crate::task::{Budget, GoalAnnotation, TaskRecord, ToolSchema};

/// Everything an agent learns once per episode. Schemas are the task's
/// declared ones; drift applied by the fault engine is never shown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Briefing {
    pub task_id: String,
    pub instruction: String,
    pub tool_schemas: Vec<ToolSchema>,
    pub budgets: Budget,
    pub goal_annotation: GoalAnnotation,
}

impl Briefing {
    pub fn for_task(task: &TaskRecord) -> Self {
        Self {
            task_id: task.task_id.clone(),
            instruction: task.instruction.clone(),
            tool_schemas: task.tool_schemas.clone(),
            budgets: task.budgets,
            goal_annotation: task.goal_annotation.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Remaining {
    pub steps: u32,
    pub calls: u32,
    pub retries: u32,
}

/// Per-step view. `last_result` is the agent-visible payload: fault context
/// stripped and adversarial rewrites applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step: u32,
    pub remaining: Remaining,
    #[serde(default)]
    pub last_result: Option<ToolResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentAction {
    Call(ToolCall),
    Finish,
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("no reply within {0:?}")]
    Timeout(std::time::Duration),
    #[error("agent process exited")]
    Exited,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait Agent {
    fn reset(&mut self, briefing: &Briefing) -> Result<(), AgentError>;
    fn act(&mut self, observation: &Observation) -> Result<AgentAction, AgentError>;
}

impl<A: Agent + ?Sized> Agent for Box<A> {
    fn reset(&mut self, briefing: &Briefing) -> Result<(), AgentError> {
        (**self).reset(briefing)
    }

    fn act(&mut self, observation: &Observation) -> Result<AgentAction, AgentError> {
        (**self).act(observation)
    }
}

/// Replays a fixed action list, then reports a protocol error.
#[derive(Debug, Clone, Default)]
pub struct ScriptedAgent {
    actions: Vec<AgentAction>,
    next: usize,
}

impl ScriptedAgent {
    pub fn new(actions: Vec<AgentAction>) -> Self {
        Self { actions, next: 0 }
    }
}

impl Agent for ScriptedAgent {
    fn reset(&mut self, _: &Briefing) -> Result<(), AgentError> {
        self.next = 0;
        Ok(())
    }

    fn act(&mut self, _: &Observation) -> Result<AgentAction, AgentError> {
        let action = self
            .actions
            .get(self.next)
            .cloned()
            .ok_or_else(|| AgentError::Protocol("script exhausted".into()))?;
        self.next += 1;
        Ok(action)
    }
}
