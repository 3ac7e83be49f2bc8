use std::collections::BTreeSet;

use serde_json::{json, Value};

use super::{object_at, Args, ErrorPayload, Op};

fn check_path(path: &str) -> Result<&str, ErrorPayload> {
    if path.is_empty() || path.split('/').any(str::is_empty) {
        return Err(ErrorPayload::invalid(format!("malformed path '{path}'")));
    }
    Ok(path)
}

pub(super) fn run(op: Op, state: &mut Value, args: &Args<'_>) -> Result<Value, ErrorPayload> {
    let files = object_at(state, "files")?;
    match op {
        Op::CreateFile => {
            let path = check_path(args.str(0)?)?;
            if files.contains_key(path) {
                return Err(ErrorPayload::conflict(format!("file {path} already exists")));
            }
            let content = args.str(1)?;
            files.insert(path.to_string(), Value::from(content));
            Ok(json!({"path": path, "bytes": content.len()}))
        }
        Op::ReadFile => {
            let path = args.str(0)?;
            files
                .get(path)
                .cloned()
                .ok_or_else(|| ErrorPayload::not_found(format!("file {path}")))
        }
        Op::AppendFile => {
            let path = args.str(0)?;
            let extra = args.str(1)?;
            let cur = files
                .get_mut(path)
                .ok_or_else(|| ErrorPayload::not_found(format!("file {path}")))?;
            let next = format!("{}{extra}", cur.as_str().unwrap_or(""));
            let len = next.len();
            *cur = Value::from(next);
            Ok(json!({"path": path, "bytes": len}))
        }
        Op::DeleteFile => {
            let path = args.str(0)?;
            files
                .remove(path)
                .map(|_| json!({"deleted": path}))
                .ok_or_else(|| ErrorPayload::not_found(format!("file {path}")))
        }
        Op::ListDir => {
            let dir = args.str(0)?.trim_end_matches('/');
            let prefix = if dir.is_empty() {
                String::new()
            } else {
                format!("{dir}/")
            };
            let children: BTreeSet<String> = files
                .keys()
                .filter_map(|k| k.strip_prefix(&prefix))
                .map(|rest| match rest.split_once('/') {
                    Some((sub, _)) => format!("{sub}/"),
                    None => rest.to_string(),
                })
                .collect();
            if children.is_empty() && !dir.is_empty() {
                return Err(ErrorPayload::not_found(format!("directory {dir}")));
            }
            Ok(Value::from(children.into_iter().collect::<Vec<_>>()))
        }
        Op::MoveFile => {
            let src = args.str(0)?;
            let dst = check_path(args.str(1)?)?;
            if !files.contains_key(src) {
                return Err(ErrorPayload::not_found(format!("file {src}")));
            }
            if files.contains_key(dst) {
                return Err(ErrorPayload::conflict(format!("file {dst} already exists")));
            }
            let content = files.remove(src).expect("checked");
            files.insert(dst.to_string(), content);
            Ok(json!({"moved": src, "to": dst}))
        }
        _ => unreachable!("non-files op {op:?}"),
    }
}

pub(super) fn check_state(state: &Value) -> Result<(), String> {
    let files = state
        .get("files")
        .and_then(Value::as_object)
        .ok_or("files state needs a 'files' map")?;
    for (path, content) in files {
        check_path(path).map_err(|e| e.message)?;
        if !content.is_string() {
            return Err(format!("file {path} content must be a string"));
        }
    }
    Ok(())
}
