use serde::Serialize;

use super::{run_episode, TraceLine};
use crate::agent::ScriptedAgent;
use crate::canonical;
use crate::task::TaskRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ReplayVerdict {
    Ok,
    /// `line` is 1-based; step records occupy lines `1..=n`, the end record follows.
    Diverged {
        line: usize,
        reason: String,
    },
}

impl ReplayVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, ReplayVerdict::Ok)
    }
}

/// Re-executes the recorded actions against a fresh environment and fault
/// runtime, then compares the regenerated trace with the recorded bytes line
/// by line. Each step carries a hash chain, so an edited action is caught at
/// its own line even when the edited call happens to reproduce the same result.
pub fn replay(task: &TaskRecord, recorded: &[u8]) -> ReplayVerdict {
    let lines: Vec<&[u8]> = recorded
        .strip_suffix(b"\n")
        .unwrap_or(recorded)
        .split(|b| *b == b'\n')
        .collect();

    let mut actions = Vec::new();
    for line in &lines {
        match serde_json::from_slice::<TraceLine>(line) {
            Ok(TraceLine::Step(s)) => actions.push(s.action),
            _ => break,
        }
    }

    let regenerated = run_episode(task, &mut ScriptedAgent::new(actions));
    let expected: Vec<Vec<u8>> = regenerated
        .lines()
        .iter()
        .map(|l| canonical::canonical_bytes(l).expect("trace lines are canonical"))
        .collect();

    for (i, want) in expected.iter().enumerate() {
        match lines.get(i) {
            None => {
                return ReplayVerdict::Diverged {
                    line: i + 1,
                    reason: "recorded trace ends early".into(),
                }
            }
            Some(got) if *got != want.as_slice() => {
                return ReplayVerdict::Diverged {
                    line: i + 1,
                    reason: describe(got, want),
                }
            }
            Some(_) => {}
        }
    }
    if lines.len() != expected.len() || !recorded.ends_with(b"\n") {
        return ReplayVerdict::Diverged {
            line: expected.len() + 1,
            reason: "unexpected bytes after the end record".into(),
        };
    }
    ReplayVerdict::Ok
}

fn describe(got: &[u8], want: &[u8]) -> String {
    match serde_json::from_slice::<TraceLine>(got) {
        Err(e) => format!("unparseable record: {e}"),
        Ok(_) => {
            let at = got
                .iter()
                .zip(want)
                .position(|(a, b)| a != b)
                .unwrap_or(got.len().min(want.len()));
            format!("record differs from re-execution at byte {at}")
        }
    }
}
