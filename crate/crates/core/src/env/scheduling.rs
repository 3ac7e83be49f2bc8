use serde_json::{json, Map, Value};

use super::{object_at, Args, ErrorPayload, Op};

/// Half-open overlap: touching intervals do not conflict.
pub(crate) fn overlaps(a: (i64, i64), b: (i64, i64)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

fn span(event: &Value) -> (i64, i64) {
    let get = |k| event.get(k).and_then(Value::as_i64).unwrap_or(0);
    (get("start"), get("end"))
}

/// Every overlapping pair, ids ascending within and across pairs.
pub(crate) fn conflicts(events: &Map<String, Value>) -> Vec<(String, String)> {
    let list: Vec<(&String, (i64, i64))> = events.iter().map(|(id, e)| (id, span(e))).collect();
    let mut out = Vec::new();
    for (i, (a, sa)) in list.iter().enumerate() {
        for (b, sb) in &list[i + 1..] {
            if overlaps(*sa, *sb) {
                out.push(((*a).clone(), (*b).clone()));
            }
        }
    }
    out
}

fn conflicts_value(events: &Map<String, Value>) -> Value {
    Value::from(
        conflicts(events)
            .into_iter()
            .map(|(a, b)| json!([a, b]))
            .collect::<Vec<_>>(),
    )
}

fn check_span(start: i64, end: i64) -> Result<(), ErrorPayload> {
    if !(0..=24 * 60).contains(&start) || !(0..=24 * 60).contains(&end) || start >= end {
        return Err(ErrorPayload::invalid(format!("invalid time span [{start}, {end})")));
    }
    Ok(())
}

pub(super) fn run(op: Op, state: &mut Value, args: &Args<'_>) -> Result<Value, ErrorPayload> {
    let allow_overlap = state.get("allow_overlap").and_then(Value::as_bool).unwrap_or(true);
    let out = {
        let events = object_at(state, "events")?;
        let touched: Option<String>;
        let result = match op {
            Op::CreateEvent => {
                let id = args.str(0)?;
                if events.contains_key(id) {
                    return Err(ErrorPayload::conflict(format!("event {id} already exists")));
                }
                let (start, end) = (args.int(1)?, args.int(2)?);
                check_span(start, end)?;
                let event = json!({"start": start, "end": end, "title": args.str(3)?});
                events.insert(id.to_string(), event.clone());
                touched = Some(id.to_string());
                event
            }
            Op::UpdateEvent => {
                let id = args.str(0)?;
                let event = events
                    .get_mut(id)
                    .ok_or_else(|| ErrorPayload::not_found(format!("event {id}")))?;
                let (cur_start, cur_end) = span(event);
                let start = args.opt_int(1)?.unwrap_or(cur_start);
                let end = args.opt_int(2)?.unwrap_or(cur_end);
                check_span(start, end)?;
                event["start"] = Value::from(start);
                event["end"] = Value::from(end);
                if args.opt(3).is_some() {
                    event["title"] = Value::from(args.str(3)?);
                }
                touched = Some(id.to_string());
                event.clone()
            }
            Op::CancelEvent => {
                let id = args.str(0)?;
                events
                    .remove(id)
                    .ok_or_else(|| ErrorPayload::not_found(format!("event {id}")))?;
                touched = None;
                json!({"cancelled": id})
            }
            Op::ListEvents => {
                let mut ids: Vec<(&String, i64)> = events.iter().map(|(id, e)| (id, span(e).0)).collect();
                ids.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
                return Ok(Value::from(
                    ids.into_iter().map(|(id, _)| id.clone()).collect::<Vec<_>>(),
                ));
            }
            Op::CheckConflicts => return Ok(conflicts_value(events)),
            _ => unreachable!("non-scheduling op {op:?}"),
        };
        if let (false, Some(id)) = (allow_overlap, &touched) {
            if let Some((a, b)) = conflicts(events).into_iter().find(|(a, b)| a == id || b == id) {
                return Err(ErrorPayload::conflict(format!("events {a} and {b} overlap")));
            }
        }
        let c = conflicts_value(events);
        (result, c)
    };
    state["conflicts"] = out.1;
    Ok(out.0)
}

pub(super) fn check_state(state: &Value) -> Result<(), String> {
    let events = state
        .get("events")
        .and_then(Value::as_object)
        .ok_or("scheduling state needs an 'events' map")?;
    for (id, e) in events {
        let (s, end) = (
            e.get("start").and_then(Value::as_i64),
            e.get("end").and_then(Value::as_i64),
        );
        match (s, end, e.get("title").and_then(Value::as_str)) {
            (Some(s), Some(end), Some(_)) if check_span(s, end).is_ok() => {}
            _ => return Err(format!("event {id} needs integer start < end and a title")),
        }
    }
    if !state.get("allow_overlap").is_some_and(Value::is_boolean) {
        return Err("scheduling state needs an 'allow_overlap' flag".into());
    }
    if state.get("conflicts") != Some(&conflicts_value(events)) {
        return Err("conflict flags do not match the event table".into());
    }
    Ok(())
}
