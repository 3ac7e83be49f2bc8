//! Deterministic tool simulators for the four domains.
//!
//! An [`Environment`] owns the live state of one episode. Calls are validated
//! against the *effective* schemas (which schema drift may have mutated) and
//! executed against a scratch copy of the state that is committed only when
//! the tool succeeds, so a failing call can never leave a partial write behind.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::task::{Domain, DomainState, FaultType, TaskRecord, ToolSchema};

pub mod catalog;
mod crud;
mod files;
mod retrieval;
mod scheduling;

pub use catalog::Op;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    #[serde(default)]
    pub arguments: BTreeMap<String, Value>,
}

impl ToolCall {
    pub fn new(tool: impl Into<String>) -> Self {
        Self {
            tool: tool.into(),
            arguments: BTreeMap::new(),
        }
    }

    pub fn arg(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.arguments.insert(name.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownTool,
    InvalidArguments,
    SchemaDrift,
    RateLimited,
    Timeout,
    Unauthorized,
    PolicyViolation,
    NotFound,
    Conflict,
}

impl ErrorCode {
    /// Codes that count toward the invalid-call rate.
    pub fn is_invalid_call(self) -> bool {
        matches!(
            self,
            ErrorCode::UnknownTool | ErrorCode::InvalidArguments | ErrorCode::SchemaDrift
        )
    }
}

/// Which injected fault produced an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultContext {
    pub fault_type: FaultType,
    pub fault_index: usize,
    pub trigger: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default)]
    pub unknown_params: Vec<String>,
    #[serde(default)]
    pub missing_params: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_after_steps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_context: Option<FaultContext>,
}

impl ErrorPayload {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            unknown_params: Vec::new(),
            missing_params: Vec::new(),
            retry_after_steps: None,
            fault_context: None,
        }
    }

    pub fn not_found(what: impl fmt::Display) -> Self {
        Self::new(ErrorCode::NotFound, format!("{what} not found"))
    }

    pub fn conflict(what: impl fmt::Display) -> Self {
        Self::new(ErrorCode::Conflict, what.to_string())
    }

    pub fn invalid(what: impl fmt::Display) -> Self {
        Self::new(ErrorCode::InvalidArguments, what.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorPayload>,
}

impl ToolResult {
    pub fn success(value: Value) -> Self {
        Self {
            ok: true,
            value: Some(value),
            error: None,
        }
    }

    pub fn failure(error: ErrorPayload) -> Self {
        Self {
            ok: false,
            value: None,
            error: Some(error),
        }
    }

    pub fn error_code(&self) -> Option<ErrorCode> {
        self.error.as_ref().map(|e| e.code)
    }

    pub fn fault_context(&self) -> Option<&FaultContext> {
        self.error.as_ref().and_then(|e| e.fault_context.as_ref())
    }
}

impl From<Result<Value, ErrorPayload>> for ToolResult {
    fn from(r: Result<Value, ErrorPayload>) -> Self {
        match r {
            Ok(v) => ToolResult::success(v),
            Err(e) => ToolResult::failure(e),
        }
    }
}

/// Validates a call against a schema list. Missing and undeclared parameters
/// are reported together so a caller can pair them up.
pub fn validate_against(schemas: &[ToolSchema], call: &ToolCall) -> Result<(), ErrorPayload> {
    let Some(schema) = schemas.iter().find(|s| s.name == call.tool) else {
        return Err(ErrorPayload::new(
            ErrorCode::UnknownTool,
            format!("unknown tool '{}'", call.tool),
        ));
    };
    let missing: Vec<String> = schema
        .params
        .iter()
        .filter(|p| p.required && !call.arguments.contains_key(&p.name))
        .map(|p| p.name.clone())
        .collect();
    let unknown: Vec<String> = call
        .arguments
        .keys()
        .filter(|k| schema.param(k).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() || !unknown.is_empty() {
        let mut parts = Vec::new();
        if !missing.is_empty() {
            parts.push(format!("missing required parameter(s): {}", missing.join(", ")));
        }
        if !unknown.is_empty() {
            parts.push(format!("unexpected parameter(s): {}", unknown.join(", ")));
        }
        let mut err = ErrorPayload::invalid(format!("{}: {}", call.tool, parts.join("; ")));
        err.missing_params = missing;
        err.unknown_params = unknown;
        return Err(err);
    }
    for (name, value) in &call.arguments {
        let spec = schema.param(name).expect("checked above");
        if !spec.value_kind.matches(value) {
            return Err(ErrorPayload::invalid(format!(
                "{}: parameter {name} expects {:?}",
                call.tool, spec.value_kind
            )));
        }
        if let Some(allowed) = &spec.allowed_values {
            if !allowed.contains(value) {
                return Err(ErrorPayload::invalid(format!(
                    "{}: value of {name} is not allowed",
                    call.tool
                )));
            }
        }
    }
    Ok(())
}

/// Arguments bound to the catalog signature by parameter position.
pub(crate) struct Args<'a> {
    tool: &'a str,
    values: Vec<Option<&'a Value>>,
}

impl<'a> Args<'a> {
    fn bind(schema: &'a ToolSchema, call: &'a ToolCall) -> Self {
        Self {
            tool: &call.tool,
            values: schema.params.iter().map(|p| call.arguments.get(&p.name)).collect(),
        }
    }

    pub(crate) fn opt(&self, pos: usize) -> Option<&'a Value> {
        self.values.get(pos).copied().flatten()
    }

    pub(crate) fn str(&self, pos: usize) -> Result<&'a str, ErrorPayload> {
        self.opt(pos)
            .and_then(Value::as_str)
            .ok_or_else(|| ErrorPayload::invalid(format!("{}: argument #{pos} must be a string", self.tool)))
    }

    pub(crate) fn int(&self, pos: usize) -> Result<i64, ErrorPayload> {
        self.opt(pos)
            .and_then(Value::as_i64)
            .ok_or_else(|| ErrorPayload::invalid(format!("{}: argument #{pos} must be an integer", self.tool)))
    }

    pub(crate) fn opt_int(&self, pos: usize) -> Result<Option<i64>, ErrorPayload> {
        self.opt(pos).map(|_| self.int(pos)).transpose()
    }

    pub(crate) fn map(&self, pos: usize) -> Result<&'a serde_json::Map<String, Value>, ErrorPayload> {
        self.opt(pos)
            .and_then(Value::as_object)
            .ok_or_else(|| ErrorPayload::invalid(format!("{}: argument #{pos} must be a map", self.tool)))
    }
}

/// Live simulator for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    domain: Domain,
    state: DomainState,
    original_schemas: Vec<ToolSchema>,
    effective_schemas: Vec<ToolSchema>,
    call_log: Vec<(ToolCall, ToolResult)>,
}

impl Environment {
    pub fn new(task: &TaskRecord) -> Self {
        Self {
            domain: task.domain,
            state: task.initial_state.clone(),
            original_schemas: task.tool_schemas.clone(),
            effective_schemas: task.tool_schemas.clone(),
            call_log: Vec::new(),
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn state(&self) -> &DomainState {
        &self.state
    }

    pub fn state_digest(&self) -> String {
        self.state.digest()
    }

    pub fn original_schemas(&self) -> &[ToolSchema] {
        &self.original_schemas
    }

    pub fn effective_schemas(&self) -> &[ToolSchema] {
        &self.effective_schemas
    }

    pub(crate) fn effective_schemas_mut(&mut self) -> &mut Vec<ToolSchema> {
        &mut self.effective_schemas
    }

    pub fn call_log(&self) -> &[(ToolCall, ToolResult)] {
        &self.call_log
    }

    pub fn record(&mut self, call: ToolCall, result: ToolResult) {
        self.call_log.push((call, result));
    }

    pub fn validate_call(&self, call: &ToolCall) -> Result<(), ErrorPayload> {
        validate_against(&self.effective_schemas, call)
    }

    /// Runs the tool's semantics. The call must already have passed
    /// [`Environment::validate_call`]; the state is untouched on error.
    pub fn execute(&mut self, call: &ToolCall) -> ToolResult {
        let Some(idx) = self.effective_schemas.iter().position(|s| s.name == call.tool) else {
            return ToolResult::failure(ErrorPayload::new(
                ErrorCode::UnknownTool,
                format!("unknown tool '{}'", call.tool),
            ));
        };
        // Effective schemas stay index-aligned with the originals; the
        // original name picks the semantics.
        let Some(op) = catalog::op_for(self.domain, &self.original_schemas[idx].name) else {
            return ToolResult::failure(ErrorPayload::new(
                ErrorCode::UnknownTool,
                format!("tool '{}' has no implementation", call.tool),
            ));
        };
        let args = Args::bind(&self.effective_schemas[idx], call);
        let mut scratch = self.state.0.clone();
        let out = match self.domain {
            Domain::Crud => crud::run(op, &mut scratch, &args),
            Domain::Retrieval => retrieval::run(op, &mut scratch, &args),
            Domain::Files => files::run(op, &mut scratch, &args),
            Domain::Scheduling => scheduling::run(op, &mut scratch, &args),
        };
        if out.is_ok() {
            self.state.0 = scratch;
        }
        out.into()
    }
}

/// Structural consistency of a state tree with its domain.
pub fn check_state(domain: Domain, state: &DomainState) -> Result<(), String> {
    match domain {
        Domain::Crud => crud::check_state(&state.0),
        Domain::Retrieval => retrieval::check_state(&state.0),
        Domain::Files => files::check_state(&state.0),
        Domain::Scheduling => scheduling::check_state(&state.0),
    }
}

pub(crate) fn object_at<'a>(
    state: &'a mut Value,
    key: &str,
) -> Result<&'a mut serde_json::Map<String, Value>, ErrorPayload> {
    state
        .get_mut(key)
        .and_then(Value::as_object_mut)
        .ok_or_else(|| ErrorPayload::conflict(format!("state has no '{key}' table")))
}
