use serde_json::{json, Value};

use super::{object_at, Args, ErrorPayload, Op};

pub(super) fn run(op: Op, state: &mut Value, args: &Args<'_>) -> Result<Value, ErrorPayload> {
    let records = object_at(state, "records")?;
    match op {
        Op::CreateRecord => {
            let id = args.str(0)?;
            if records.contains_key(id) {
                return Err(ErrorPayload::conflict(format!("record {id} already exists")));
            }
            let record = json!({"title": args.str(1)?, "fields": args.map(2)?});
            records.insert(id.to_string(), record.clone());
            Ok(record)
        }
        Op::ReadRecord => {
            let id = args.str(0)?;
            records
                .get(id)
                .cloned()
                .ok_or_else(|| ErrorPayload::not_found(format!("record {id}")))
        }
        Op::UpdateRecord => {
            let id = args.str(0)?;
            let patch = args.map(1)?;
            let record = records
                .get_mut(id)
                .ok_or_else(|| ErrorPayload::not_found(format!("record {id}")))?;
            let fields = record
                .get_mut("fields")
                .and_then(Value::as_object_mut)
                .ok_or_else(|| ErrorPayload::conflict(format!("record {id} has no field map")))?;
            for (k, v) in patch {
                fields.insert(k.clone(), v.clone());
            }
            Ok(record.clone())
        }
        Op::DeleteRecord => {
            let id = args.str(0)?;
            records
                .remove(id)
                .map(|_| json!({"deleted": id}))
                .ok_or_else(|| ErrorPayload::not_found(format!("record {id}")))
        }
        Op::ListRecords => Ok(Value::from(records.keys().cloned().collect::<Vec<_>>())),
        _ => unreachable!("non-crud op {op:?}"),
    }
}

pub(super) fn check_state(state: &Value) -> Result<(), String> {
    let records = state
        .get("records")
        .and_then(Value::as_object)
        .ok_or("crud state needs a 'records' map")?;
    for (id, r) in records {
        let ok = r.get("title").is_some_and(Value::is_string) && r.get("fields").is_some_and(Value::is_object);
        if !ok {
            return Err(format!("record {id} needs a string title and a field map"));
        }
    }
    Ok(())
}
