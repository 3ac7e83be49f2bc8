//! Per-task metrics, budgeted success and aggregate reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agent::AgentAction;
use crate::runner::EpisodeTrace;
use crate::task::{Domain, FaultType, TaskRecord};

pub mod criteria;
pub mod tables;

pub use criteria::{check_criteria, CallCounts, Transcript};

/// Tool-call caps at which budgeted success is reported.
pub const BUDGET_CAPS: [u32; 4] = [4, 8, 16, 32];

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("trace is for task {trace} but scored against {task}")]
    TaskMismatch { trace: String, task: String },
    #[error("cannot aggregate an empty metric list")]
    Empty,
    #[error("{metrics} metric entries for {tasks} tasks")]
    LengthMismatch { metrics: usize, tasks: usize },
    #[error("budget cap must be at least 1")]
    ZeroCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task_id: String,
    pub task_success: bool,
    pub tool_calls_used: u32,
    pub invalid_calls: u32,
    pub policy_violations: u32,
    pub fault_affected: bool,
    /// Present only for fault-affected tasks.
    pub recovery_success: Option<bool>,
    /// Steps from the first fault-caused failure to the recovering call.
    pub time_to_recovery: Option<u32>,
    pub budget_exceeded: bool,
    pub catastrophic: bool,
}

pub fn score_task(trace: &EpisodeTrace, task: &TaskRecord) -> Result<TaskMetrics, ScoringError> {
    if trace.task_id != task.task_id {
        return Err(ScoringError::TaskMismatch {
            trace: trace.task_id.clone(),
            task: task.task_id.clone(),
        });
    }
    let invalid_calls = trace
        .steps
        .iter()
        .filter_map(|s| s.result.as_ref()?.error_code())
        .filter(|c| c.is_invalid_call())
        .count() as u32;

    let first_fault = trace
        .steps
        .iter()
        .find(|s| s.result.as_ref().is_some_and(|r| r.fault_context().is_some()));
    let (recovery_success, time_to_recovery) = match first_fault {
        None => (None, None),
        Some(failed) => {
            let tool = failed.call_tool();
            let recovered = trace
                .steps
                .iter()
                .find(|s| s.step > failed.step && s.call_tool() == tool && s.result.as_ref().is_some_and(|r| r.ok));
            (Some(recovered.is_some()), recovered.map(|r| r.step - failed.step))
        }
    };

    Ok(TaskMetrics {
        task_id: task.task_id.clone(),
        task_success: trace.success(),
        tool_calls_used: trace
            .steps
            .iter()
            .filter(|s| matches!(s.action, AgentAction::Call(_)))
            .count() as u32,
        invalid_calls,
        policy_violations: trace.counters.violations,
        fault_affected: first_fault.is_some(),
        recovery_success,
        time_to_recovery,
        budget_exceeded: trace.termination.is_budget(),
        catastrophic: trace.termination.is_catastrophic(),
    })
}

/// Fraction of tasks solved with at most `cap` tool calls.
pub fn budgeted_success(metrics: &[TaskMetrics], cap: u32) -> Result<f64, ScoringError> {
    if metrics.is_empty() {
        return Err(ScoringError::Empty);
    }
    if cap == 0 {
        return Err(ScoringError::ZeroCap);
    }
    let hits = metrics
        .iter()
        .filter(|m| m.task_success && m.tool_calls_used <= cap)
        .count();
    Ok(hits as f64 / metrics.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub cap: u32,
    pub success: f64,
}

/// Rates over one group of tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub n: usize,
    pub success_rate: f64,
    pub mean_policy_violations: f64,
    /// Total invalid calls over total calls.
    pub invalid_call_rate: f64,
    pub fault_affected: usize,
    /// Over fault-affected tasks; absent when there are none.
    pub recovery_rate: Option<f64>,
    pub mean_time_to_recovery: Option<f64>,
    pub mean_tool_calls: f64,
    pub budget_exceeded_rate: f64,
    pub catastrophic_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub agent: String,
    pub overall: SliceReport,
    pub budgeted_success: Vec<BudgetPoint>,
    /// Mean of the budgeted-success values over [`BUDGET_CAPS`].
    pub auc: f64,
    /// Keyed by fault family, `none` for fault-free tasks.
    pub by_fault: BTreeMap<String, SliceReport>,
    pub by_domain: BTreeMap<String, SliceReport>,
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn slice(metrics: &[&TaskMetrics]) -> SliceReport {
    let n = metrics.len();
    let count = |f: &dyn Fn(&TaskMetrics) -> bool| metrics.iter().filter(|m| f(m)).count();
    let total_calls: u64 = metrics.iter().map(|m| u64::from(m.tool_calls_used)).sum();
    let total_invalid: u64 = metrics.iter().map(|m| u64::from(m.invalid_calls)).sum();
    let affected = count(&|m| m.fault_affected);
    let recovered: Vec<u32> = metrics.iter().filter_map(|m| m.time_to_recovery).collect();
    SliceReport {
        n,
        success_rate: mean(count(&|m| m.task_success) as f64, n),
        mean_policy_violations: mean(metrics.iter().map(|m| f64::from(m.policy_violations)).sum(), n),
        invalid_call_rate: if total_calls == 0 {
            0.0
        } else {
            total_invalid as f64 / total_calls as f64
        },
        fault_affected: affected,
        recovery_rate: (affected > 0).then(|| count(&|m| m.recovery_success == Some(true)) as f64 / affected as f64),
        mean_time_to_recovery: (!recovered.is_empty())
            .then(|| recovered.iter().map(|&t| f64::from(t)).sum::<f64>() / recovered.len() as f64),
        mean_tool_calls: mean(total_calls as f64, n),
        budget_exceeded_rate: mean(count(&|m| m.budget_exceeded) as f64, n),
        catastrophic_rate: mean(count(&|m| m.catastrophic) as f64, n),
    }
}

pub fn fault_key(family: Option<FaultType>) -> String {
    family.map_or_else(|| "none".to_string(), |f| f.as_str().to_string())
}

pub fn aggregate(agent: &str, metrics: &[TaskMetrics], tasks: &[TaskRecord]) -> Result<AggregateReport, ScoringError> {
    if metrics.len() != tasks.len() {
        return Err(ScoringError::LengthMismatch {
            metrics: metrics.len(),
            tasks: tasks.len(),
        });
    }
    if metrics.is_empty() {
        return Err(ScoringError::Empty);
    }
    let budgeted: Vec<BudgetPoint> = BUDGET_CAPS
        .iter()
        .map(|&cap| budgeted_success(metrics, cap).map(|success| BudgetPoint { cap, success }))
        .collect::<Result<_, _>>()?;
    let auc = budgeted.iter().map(|p| p.success).sum::<f64>() / budgeted.len() as f64;

    let mut by_fault: BTreeMap<String, Vec<&TaskMetrics>> = BTreeMap::new();
    let mut by_domain: BTreeMap<Domain, Vec<&TaskMetrics>> = BTreeMap::new();
    for (m, t) in metrics.iter().zip(tasks) {
        by_fault.entry(fault_key(t.fault_family())).or_default().push(m);
        by_domain.entry(t.domain).or_default().push(m);
    }
    let all: Vec<&TaskMetrics> = metrics.iter().collect();
    Ok(AggregateReport {
        agent: agent.to_string(),
        overall: slice(&all),
        budgeted_success: budgeted,
        auc,
        by_fault: by_fault.into_iter().map(|(k, v)| (k, slice(&v))).collect(),
        by_domain: by_domain.into_iter().map(|(k, v)| (k.to_string(), slice(&v))).collect(),
    })
}

#[cfg(test)]
mod tests;
