//! Running an agent over a split and aggregating its scores.

use rayon::prelude::*;

use crate::agent::Agent;
use crate::runner::{run_episode, EpisodeTrace};
use crate::scoring::{aggregate, score_task, AggregateReport, ScoringError, TaskMetrics};
use crate::task::TaskRecord;

#[derive(Debug, Clone)]
pub struct Evaluation {
    /// In task order.
    pub traces: Vec<EpisodeTrace>,
    pub metrics: Vec<TaskMetrics>,
    pub report: AggregateReport,
}

/// Runs one fresh agent per task on `workers` threads (1 runs inline).
/// Results are identical for any worker count.
pub fn evaluate<A, F>(
    name: &str,
    tasks: &[TaskRecord],
    workers: usize,
    make_agent: F,
) -> Result<Evaluation, ScoringError>
where
    A: Agent,
    F: Fn() -> A + Sync,
{
    let run = |task: &TaskRecord| run_episode(task, &mut make_agent());
    let traces: Vec<EpisodeTrace> = if workers <= 1 {
        tasks.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(|| tasks.par_iter().map(run).collect())
    };
    let metrics = traces
        .iter()
        .zip(tasks)
        .map(|(trace, task)| score_task(trace, task))
        .collect::<Result<Vec<_>, _>>()?;
    let report = aggregate(name, &metrics, tasks)?;
    Ok(Evaluation {
        traces,
        metrics,
        report,
    })
}
