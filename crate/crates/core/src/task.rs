//! Benchmark task records and everything they contain.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const BENCHMARK_VERSION: &str = "1.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Crud,
    Retrieval,
    Files,
    Scheduling,
}

impl Domain {
    pub const ALL: [Domain; 4] = [Domain::Crud, Domain::Retrieval, Domain::Files, Domain::Scheduling];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Crud => "crud",
            Domain::Retrieval => "retrieval",
            Domain::Files => "files",
            Domain::Scheduling => "scheduling",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    String,
    Integer,
    Number,
    Boolean,
    List,
    Map,
}

impl ValueKind {
    pub fn matches(self, v: &Value) -> bool {
        match self {
            ValueKind::String => v.is_string(),
            ValueKind::Integer => v.is_i64() || v.is_u64(),
            ValueKind::Number => v.is_number(),
            ValueKind::Boolean => v.is_boolean(),
            ValueKind::List => v.is_array(),
            ValueKind::Map => v.is_object(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub value_kind: ValueKind,
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_values: Option<Vec<Value>>,
}

impl ParamSpec {
    pub fn required(name: &str, value_kind: ValueKind) -> Self {
        Self {
            name: name.to_string(),
            value_kind,
            required: true,
            allowed_values: None,
        }
    }

    pub fn optional(name: &str, value_kind: ValueKind) -> Self {
        Self {
            required: false,
            ..Self::required(name, value_kind)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
}

impl ToolSchema {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }
}

/// Step, call and retry limits. The timeout is nominal metadata; nothing waits on a clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_steps: u32,
    pub max_tool_calls: u32,
    pub max_retries: u32,
    pub per_call_timeout_ms: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    StateEquals { path: String, expected: Value },
    StateExists { path: String },
    StateContains { path: String, member: Value },
    StateKeyValue { path: String, key: String, expected: Value },
    MinToolCalls { n: u32 },
    MinSuccessfulToolCalls { n: u32 },
}

impl Criterion {
    pub fn path(&self) -> Option<&str> {
        match self {
            Criterion::StateEquals { path, .. }
            | Criterion::StateExists { path }
            | Criterion::StateContains { path, .. }
            | Criterion::StateKeyValue { path, .. } => Some(path),
            Criterion::MinToolCalls { .. } | Criterion::MinSuccessfulToolCalls { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyRule {
    ForbiddenTool { tool: String },
    MaxCallsPerTool { tool: String, limit: u32 },
    RequireSuccessBefore { prerequisite: String, gated: String },
}

impl PolicyRule {
    pub fn tools(&self) -> Vec<&str> {
        match self {
            PolicyRule::ForbiddenTool { tool } | PolicyRule::MaxCallsPerTool { tool, .. } => vec![tool],
            PolicyRule::RequireSuccessBefore { prerequisite, gated } => vec![prerequisite, gated],
        }
    }
}

impl fmt::Display for PolicyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyRule::ForbiddenTool { tool } => write!(f, "{tool} is forbidden"),
            PolicyRule::MaxCallsPerTool { tool, limit } => write!(f, "{tool} limited to {limit} calls"),
            PolicyRule::RequireSuccessBefore { prerequisite, gated } => {
                write!(f, "{gated} requires a prior successful {prerequisite}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultType {
    SchemaDrift,
    RateLimit,
    Timeout,
    AuthFailure,
    AdversarialRewrite,
}

impl FaultType {
    pub const ALL: [FaultType; 5] = [
        FaultType::SchemaDrift,
        FaultType::RateLimit,
        FaultType::Timeout,
        FaultType::AuthFailure,
        FaultType::AdversarialRewrite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FaultType::SchemaDrift => "schema_drift",
            FaultType::RateLimit => "rate_limit",
            FaultType::Timeout => "timeout",
            FaultType::AuthFailure => "auth_failure",
            FaultType::AdversarialRewrite => "adversarial_rewrite",
        }
    }
}

impl fmt::Display for FaultType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trigger {
    ToolName {
        tool: String,
    },
    /// 1-based index over all tool calls of the episode.
    NthCall {
        n: u32,
    },
    ArgPattern {
        tool: String,
        param: String,
        substring: String,
    },
    Probabilistic {
        p: f64,
    },
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trigger::ToolName { tool } => write!(f, "tool={tool}"),
            Trigger::NthCall { n } => write!(f, "nth_call={n}"),
            Trigger::ArgPattern { tool, param, substring } => {
                write!(f, "arg_pattern={tool}.{param}~{substring:?}")
            }
            Trigger::Probabilistic { p } => write!(f, "probabilistic p={p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteStyle {
    MisleadingParam,
    WrongToolHint,
    Vague,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fault_type", rename_all = "snake_case")]
pub enum FaultBehavior {
    /// Renames parameters of `tool` and/or the tool itself in the enforced interface.
    SchemaDrift {
        tool: String,
        #[serde(default)]
        param_renames: BTreeMap<String, String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tool_rename: Option<String>,
    },
    /// `recover_after_failures == 0` never recovers.
    RateLimit {
        retry_after_steps: u32,
        recover_after_failures: u32,
    },
    /// `fail_count_before_recovery == 0` never recovers.
    Timeout {
        fail_count_before_recovery: u32,
    },
    AuthFailure {
        persistent: bool,
    },
    AdversarialRewrite {
        style: RewriteStyle,
    },
}

impl FaultBehavior {
    pub fn fault_type(&self) -> FaultType {
        match self {
            FaultBehavior::SchemaDrift { .. } => FaultType::SchemaDrift,
            FaultBehavior::RateLimit { .. } => FaultType::RateLimit,
            FaultBehavior::Timeout { .. } => FaultType::Timeout,
            FaultBehavior::AuthFailure { .. } => FaultType::AuthFailure,
            FaultBehavior::AdversarialRewrite { .. } => FaultType::AdversarialRewrite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub trigger: Trigger,
    pub behavior: FaultBehavior,
}

impl FaultSpec {
    pub fn fault_type(&self) -> FaultType {
        self.behavior.fault_type()
    }
}

/// Per-domain state tree.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainState(pub Value);

impl DomainState {
    /// Resolves a slash-separated key path. Object keys are literal; array
    /// segments must be decimal indices.
    pub fn resolve(&self, path: &str) -> Option<&Value> {
        let mut cur = &self.0;
        for seg in path.split('/') {
            cur = match cur {
                Value::Object(map) => map.get(seg)?,
                Value::Array(items) => items.get(seg.parse::<usize>().ok()?)?,
                _ => return None,
            };
        }
        Some(cur)
    }

    pub fn digest(&self) -> String {
        crate::canonical::digest(&self.0).expect("domain state has canonical form")
    }
}

/// Machine-readable mirror of the instruction. Built-in agents plan from it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GoalAnnotation {
    pub intent: String,
    #[serde(default)]
    pub slots: BTreeMap<String, Value>,
    /// Policy constraints announced to the agent.
    #[serde(default)]
    pub policy: Vec<PolicyRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub domain: Domain,
    pub instruction: String,
    pub tool_schemas: Vec<ToolSchema>,
    pub initial_state: DomainState,
    pub goal_annotation: GoalAnnotation,
    pub success_criteria: Vec<Criterion>,
    #[serde(default)]
    pub fault_plan: Vec<FaultSpec>,
    #[serde(default)]
    pub policy_rules: Vec<PolicyRule>,
    pub budgets: Budget,
    pub seed: u64,
    pub version: String,
}

impl TaskRecord {
    pub fn schema(&self, tool: &str) -> Option<&ToolSchema> {
        self.tool_schemas.iter().find(|t| t.name == tool)
    }

    /// The single fault family assigned by the generator, if any.
    pub fn fault_family(&self) -> Option<FaultType> {
        self.fault_plan.first().map(FaultSpec::fault_type)
    }
}
