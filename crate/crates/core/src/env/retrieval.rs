use std::collections::BTreeSet;

use serde_json::{json, Value};

use super::{object_at, Args, ErrorPayload, Op};

pub(crate) fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Documents with a positive overlap score, best first, ties by ascending id.
pub(crate) fn rank(documents: &serde_json::Map<String, Value>, query: &str) -> Vec<(String, usize)> {
    let q = tokens(query);
    let mut scored: Vec<(String, usize)> = documents
        .iter()
        .map(|(id, doc)| {
            let title = doc.get("title").and_then(Value::as_str).unwrap_or("");
            let text = doc.get("text").and_then(Value::as_str).unwrap_or("");
            let d = tokens(&format!("{title} {text}"));
            (id.clone(), q.intersection(&d).count())
        })
        .filter(|(_, s)| *s > 0)
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

pub(super) fn run(op: Op, state: &mut Value, args: &Args<'_>) -> Result<Value, ErrorPayload> {
    match op {
        Op::Search => {
            let docs = object_at(state, "documents")?;
            let hits = rank(docs, args.str(0)?);
            Ok(Value::from(
                hits.into_iter()
                    .map(|(id, score)| json!({"id": id, "score": score}))
                    .collect::<Vec<_>>(),
            ))
        }
        Op::FetchDocument => {
            let id = args.str(0)?;
            let docs = object_at(state, "documents")?;
            docs.get(id)
                .cloned()
                .ok_or_else(|| ErrorPayload::not_found(format!("document {id}")))
        }
        Op::SubmitAnswer => {
            let text = args.str(0)?;
            let answers = state
                .get_mut("answers")
                .and_then(Value::as_array_mut)
                .ok_or_else(|| ErrorPayload::conflict("state has no 'answers' list"))?;
            answers.push(Value::from(text));
            Ok(json!({"accepted": answers.len()}))
        }
        _ => unreachable!("non-retrieval op {op:?}"),
    }
}

pub(super) fn check_state(state: &Value) -> Result<(), String> {
    let docs = state
        .get("documents")
        .and_then(Value::as_object)
        .ok_or("retrieval state needs a 'documents' map")?;
    for (id, d) in docs {
        if !(d.get("title").is_some_and(Value::is_string) && d.get("text").is_some_and(Value::is_string)) {
            return Err(format!("document {id} needs string title and text"));
        }
    }
    if !state.get("answers").is_some_and(Value::is_array) {
        return Err("retrieval state needs an 'answers' list".into());
    }
    Ok(())
}
