use serde_json::Value;

use crate::task::{Criterion, DomainState};

/// Interaction counts the transcript criteria need.
pub trait Transcript {
    fn tool_calls(&self) -> u32;
    fn successful_calls(&self) -> u32;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallCounts {
    pub tool_calls: u32,
    pub successful_calls: u32,
}

impl Transcript for CallCounts {
    fn tool_calls(&self) -> u32 {
        self.tool_calls
    }

    fn successful_calls(&self) -> u32 {
        self.successful_calls
    }
}

pub fn check_criterion(state: &DomainState, transcript: &impl Transcript, criterion: &Criterion) -> bool {
    match criterion {
        Criterion::StateEquals { path, expected } => state.resolve(path) == Some(expected),
        Criterion::StateExists { path } => state.resolve(path).is_some(),
        Criterion::StateContains { path, member } => match state.resolve(path) {
            Some(Value::Array(items)) => items.contains(member),
            Some(Value::Object(map)) => member.as_str().is_some_and(|k| map.contains_key(k)),
            _ => false,
        },
        Criterion::StateKeyValue { path, key, expected } => {
            state.resolve(path).and_then(Value::as_object).and_then(|m| m.get(key)) == Some(expected)
        }
        Criterion::MinToolCalls { n } => transcript.tool_calls() >= *n,
        Criterion::MinSuccessfulToolCalls { n } => transcript.successful_calls() >= *n,
    }
}

/// True only when every criterion holds. Unresolvable paths make their
/// criterion false rather than raising.
pub fn check_criteria(state: &DomainState, transcript: &impl Transcript, criteria: &[Criterion]) -> bool {
    criteria.iter().all(|c| check_criterion(state, transcript, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn counts(tool_calls: u32, successful_calls: u32) -> CallCounts {
        CallCounts {
            tool_calls,
            successful_calls,
        }
    }

    #[test]
    fn exists_on_present_record() {
        let s = DomainState(json!({"records": {"r1": {"title": "x", "fields": {}}}}));
        assert!(check_criteria(
            &s,
            &counts(0, 0),
            &[Criterion::StateExists {
                path: "records/r1".into()
            }]
        ));
    }

    #[test]
    fn conjunction_fails_on_transcript() {
        let s = DomainState(json!({"a": 1}));
        let criteria = [
            Criterion::StateEquals {
                path: "a".into(),
                expected: json!(1),
            },
            Criterion::MinSuccessfulToolCalls { n: 3 },
        ];
        assert!(!check_criteria(&s, &counts(5, 2), &criteria));
        assert!(check_criteria(&s, &counts(5, 3), &criteria));
    }

    #[test]
    fn contains_and_key_value() {
        let s = DomainState(json!({"answers": ["07:00"], "files": {"a/b.txt": "hi"}}));
        let t = counts(0, 0);
        assert!(check_criterion(
            &s,
            &t,
            &Criterion::StateContains {
                path: "answers".into(),
                member: json!("07:00")
            }
        ));
        assert!(check_criterion(
            &s,
            &t,
            &Criterion::StateContains {
                path: "files".into(),
                member: json!("a/b.txt")
            }
        ));
        assert!(!check_criterion(
            &s,
            &t,
            &Criterion::StateContains {
                path: "files".into(),
                member: json!(3)
            }
        ));
        assert!(check_criterion(
            &s,
            &t,
            &Criterion::StateKeyValue {
                path: "files".into(),
                key: "a/b.txt".into(),
                expected: json!("hi")
            }
        ));
        assert!(!check_criterion(
            &s,
            &t,
            &Criterion::StateKeyValue {
                path: "answers".into(),
                key: "0".into(),
                expected: json!("07:00")
            }
        ));
    }

    #[test]
    fn unresolvable_path_is_false() {
        let s = DomainState(json!({}));
        assert!(!check_criterion(
            &s,
            &counts(0, 0),
            &Criterion::StateExists { path: "x/y".into() }
        ));
    }
}
