//! Deterministic fault-injection benchmark for tool-using agents.
//!
//! Tasks are generated from a seed, executed against in-memory domain
//! environments with a fault engine between agent and tools, and scored from
//! replayable traces.

pub mod agent;
pub mod baselines;
pub mod canonical;
pub mod env;
pub mod eval;
pub mod external;
pub mod fault;
pub mod fixtures;
pub mod generator;
pub mod plan;
pub mod runner;
pub mod scoring;
pub mod stream;
pub mod task;
pub mod validate;

pub use agent::{Agent, AgentAction, AgentError, Briefing, Observation, Remaining, ScriptedAgent};
pub use env::{Environment, ErrorCode, ErrorPayload, ToolCall, ToolResult};
pub use runner::{replay, run_episode, EpisodeTrace, ReplayVerdict, Termination};
pub use stream::SeededStream;
pub use task::TaskRecord;
