//! Fixed tool vocabulary per domain.
//!
//! Tool semantics bind arguments by parameter position, so a task may rename
//! parameters (and drift may rename them further) without the simulator
//! losing track of which argument is which.

use crate::task::{Domain, ParamSpec, ToolSchema, ValueKind};

use ValueKind::{Integer, Map, String as Str};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    CreateRecord,
    ReadRecord,
    UpdateRecord,
    DeleteRecord,
    ListRecords,
    Search,
    FetchDocument,
    SubmitAnswer,
    CreateFile,
    ReadFile,
    AppendFile,
    DeleteFile,
    ListDir,
    MoveFile,
    CreateEvent,
    UpdateEvent,
    CancelEvent,
    ListEvents,
    CheckConflicts,
}

struct Entry {
    op: Op,
    name: &'static str,
    description: &'static str,
    params: &'static [(&'static str, ValueKind, bool)],
}

const CRUD: &[Entry] = &[
    Entry {
        op: Op::CreateRecord,
        name: "create_record",
        description: "Create a record with a title and a field map.",
        params: &[("id", Str, true), ("title", Str, true), ("fields", Map, true)],
    },
    Entry {
        op: Op::ReadRecord,
        name: "read_record",
        description: "Read one record by id.",
        params: &[("id", Str, true)],
    },
    Entry {
        op: Op::UpdateRecord,
        name: "update_record",
        description: "Merge the given fields into an existing record.",
        params: &[("id", Str, true), ("fields", Map, true)],
    },
    Entry {
        op: Op::DeleteRecord,
        name: "delete_record",
        description: "Delete a record by id.",
        params: &[("id", Str, true)],
    },
    Entry {
        op: Op::ListRecords,
        name: "list_records",
        description: "List all record ids.",
        params: &[],
    },
];

const RETRIEVAL: &[Entry] = &[
    Entry {
        op: Op::Search,
        name: "search",
        description: "Rank documents by token overlap with the query.",
        params: &[("query", Str, true)],
    },
    Entry {
        op: Op::FetchDocument,
        name: "fetch_document",
        description: "Fetch one document by id.",
        params: &[("id", Str, true)],
    },
    Entry {
        op: Op::SubmitAnswer,
        name: "submit_answer",
        description: "Submit a final answer.",
        params: &[("text", Str, true)],
    },
];

const FILES: &[Entry] = &[
    Entry {
        op: Op::CreateFile,
        name: "create_file",
        description: "Create a new file with content.",
        params: &[("path", Str, true), ("content", Str, true)],
    },
    Entry {
        op: Op::ReadFile,
        name: "read_file",
        description: "Read a file's content.",
        params: &[("path", Str, true)],
    },
    Entry {
        op: Op::AppendFile,
        name: "append_file",
        description: "Append content to an existing file.",
        params: &[("path", Str, true), ("content", Str, true)],
    },
    Entry {
        op: Op::DeleteFile,
        name: "delete_file",
        description: "Delete a file.",
        params: &[("path", Str, true)],
    },
    Entry {
        op: Op::ListDir,
        name: "list_dir",
        description: "List the immediate children of a directory.",
        params: &[("path", Str, true)],
    },
    Entry {
        op: Op::MoveFile,
        name: "move_file",
        description: "Move a file to a new path.",
        params: &[("src", Str, true), ("dst", Str, true)],
    },
];

const SCHEDULING: &[Entry] = &[
    Entry {
        op: Op::CreateEvent,
        name: "create_event",
        description: "Create an event; times are minutes since midnight, end exclusive.",
        params: &[
            ("id", Str, true),
            ("start", Integer, true),
            ("end", Integer, true),
            ("title", Str, true),
        ],
    },
    Entry {
        op: Op::UpdateEvent,
        name: "update_event",
        description: "Change the time or title of an event.",
        params: &[
            ("id", Str, true),
            ("start", Integer, false),
            ("end", Integer, false),
            ("title", Str, false),
        ],
    },
    Entry {
        op: Op::CancelEvent,
        name: "cancel_event",
        description: "Cancel an event.",
        params: &[("id", Str, true)],
    },
    Entry {
        op: Op::ListEvents,
        name: "list_events",
        description: "List event ids ordered by start time.",
        params: &[],
    },
    Entry {
        op: Op::CheckConflicts,
        name: "check_conflicts",
        description: "Report every pair of overlapping events.",
        params: &[],
    },
];

fn entries(domain: Domain) -> &'static [Entry] {
    match domain {
        Domain::Crud => CRUD,
        Domain::Retrieval => RETRIEVAL,
        Domain::Files => FILES,
        Domain::Scheduling => SCHEDULING,
    }
}

/// The domain's tool schemas with their default parameter names.
pub fn default_schemas(domain: Domain) -> Vec<ToolSchema> {
    entries(domain)
        .iter()
        .map(|e| ToolSchema {
            name: e.name.to_string(),
            description: e.description.to_string(),
            params: e
                .params
                .iter()
                .map(|&(name, kind, required)| {
                    if required {
                        ParamSpec::required(name, kind)
                    } else {
                        ParamSpec::optional(name, kind)
                    }
                })
                .collect(),
        })
        .collect()
}

pub fn op_for(domain: Domain, tool: &str) -> Option<Op> {
    entries(domain).iter().find(|e| e.name == tool).map(|e| e.op)
}

pub fn tool_names(domain: Domain) -> Vec<&'static str> {
    entries(domain).iter().map(|e| e.name).collect()
}

/// Checks that a task-declared schema lines up positionally with the catalog
/// signature: same arity, kinds and requiredness. Parameter names may differ.
pub fn check_signature(domain: Domain, schema: &ToolSchema) -> Result<(), String> {
    let entry = entries(domain)
        .iter()
        .find(|e| e.name == schema.name)
        .ok_or_else(|| format!("tool {} is not part of the {domain} vocabulary", schema.name))?;
    if entry.params.len() != schema.params.len() {
        return Err(format!(
            "tool {} declares {} params, expected {}",
            schema.name,
            schema.params.len(),
            entry.params.len()
        ));
    }
    for (i, (&(_, kind, required), p)) in entry.params.iter().zip(&schema.params).enumerate() {
        if p.value_kind != kind || p.required != required {
            return Err(format!(
                "tool {} param #{i} ({}) has the wrong kind or requiredness",
                schema.name, p.name
            ));
        }
    }
    Ok(())
}
