//! Instruction templates, variant pools and matching initial states.
//!
//! Pool sizes control corpus diversity: instruction text draws from small
//! pools so phrasing repeats, while initial states add filler entries drawn
//! from larger ones.

use serde_json::{json, Map, Value};

use crate::plan::slots;
use crate::stream::SeededStream;
use crate::task::{Criterion, Domain, GoalAnnotation};

/// Everything about a task except faults, policy and budgets.
#[derive(Debug, Clone)]
pub(crate) struct Content {
    pub instruction: String,
    pub state: Value,
    pub goal: GoalAnnotation,
    pub criteria: Vec<Criterion>,
}

/// Initial states per domain, before any intent-specific additions.
const CATALOGUE: u64 = 2000;

/// `s` drives the intent; the initial state comes from one of [`CATALOGUE`]
/// seeded variants so that states repeat across tasks.
pub(crate) fn build(domain: Domain, seed: u64, s: &mut SeededStream) -> Content {
    let variant = s.next_below(CATALOGUE);
    let st = &mut SeededStream::new(seed, format!("gen/catalogue/{domain}/{variant}"));
    match domain {
        Domain::Crud => crud(s, st),
        Domain::Retrieval => retrieval(s, st),
        Domain::Files => files(s, st),
        Domain::Scheduling => scheduling(s, st),
    }
}

fn pick<'a, T>(s: &mut SeededStream, items: &'a [T]) -> &'a T {
    s.pick(items)
}

/// `k` distinct values from `0..n`, in draw order.
fn distinct(s: &mut SeededStream, n: u64, k: usize) -> Vec<u64> {
    let mut all: Vec<u64> = (0..n).collect();
    s.shuffle(&mut all);
    all.truncate(k);
    all
}

fn min_success(n: usize) -> Criterion {
    Criterion::MinSuccessfulToolCalls { n: n as u32 }
}

fn hhmm(minutes: i64) -> String {
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

// ---------------------------------------------------------------- crud

const KINDS: &[(&str, &str)] = &[
    ("ticket", "ticket"),
    ("order", "ord"),
    ("asset", "asset"),
    ("invoice", "inv"),
    ("lead", "lead"),
    ("incident", "inc"),
];

const TITLES: &[&str] = &[
    "Printer jam",
    "VPN drops",
    "Badge reader",
    "Desk lamp",
    "Laptop refresh",
    "Roof leak",
    "Parking pass",
    "Server fan",
    "Login loop",
    "Projector bulb",
    "Coffee machine",
    "Broken chair",
    "Missing cable",
    "Slow wifi",
    "Locked account",
    "Phone headset",
    "Expense report",
    "Window latch",
    "Monitor flicker",
    "Door sensor",
];

const FIELDS: &[(&str, &[&str])] = &[
    ("status", &["open", "pending", "closed", "blocked"]),
    ("priority", &["low", "medium", "high", "urgent"]),
    ("owner", &["ana", "ben", "chen", "dara", "eli", "fay"]),
    ("region", &["north", "south", "east", "west"]),
];

const CREATE_VERBS: &[&str] = &["Create", "Add", "Register"];
const CHECK_PHRASES: &[&str] = &["then read it back", "then confirm it was saved"];

fn crud(s: &mut SeededStream, st: &mut SeededStream) -> Content {
    let (kind, prefix) = *pick(st, KINDS);
    let n_records = 3 + st.next_below(3) as usize;
    let numbers = distinct(st, 24, n_records + 1);
    let id_of = |n: u64| format!("{prefix}-{:03}", n + 1);

    let mut records = Map::new();
    for &n in &numbers[..n_records] {
        let mut fields = Map::new();
        let n_fields = 1 + st.next_below(2) as usize;
        for f in distinct(st, FIELDS.len() as u64, n_fields) {
            let (name, values) = FIELDS[f as usize];
            fields.insert(name.into(), json!(pick(st, values)));
        }
        records.insert(id_of(n), json!({"title": pick(st, TITLES), "fields": fields}));
    }
    let state = json!({ "records": records.clone() });

    let (field, values) = *pick(s, &FIELDS[..2]);
    let value = *pick(s, values);
    match s.next_below(3) {
        0 => {
            let id = id_of(numbers[n_records]);
            let title = *pick(s, TITLES);
            let instruction = format!(
                "{} {kind} {id} titled '{title}' with {field} {value}, {}.",
                pick(s, CREATE_VERBS),
                pick(s, CHECK_PHRASES)
            );
            Content {
                instruction,
                state,
                goal: goal(
                    "create_and_verify",
                    &[
                        ("id", json!(id)),
                        ("title", json!(title)),
                        ("fields", json!({ field: value })),
                    ],
                ),
                criteria: vec![
                    Criterion::StateEquals {
                        path: format!("records/{id}/fields/{field}"),
                        expected: json!(value),
                    },
                    Criterion::StateEquals {
                        path: format!("records/{id}/title"),
                        expected: json!(title),
                    },
                    min_success(2),
                ],
            }
        }
        1 => {
            let id = id_of(numbers[s.next_below(n_records as u64) as usize]);
            let instruction = format!("Set the {field} of {kind} {id} to {value}, {}.", pick(s, CHECK_PHRASES));
            Content {
                instruction,
                state,
                goal: goal(
                    "update_field",
                    &[("id", json!(id)), ("field", json!(field)), ("value", json!(value))],
                ),
                criteria: vec![
                    Criterion::StateKeyValue {
                        path: format!("records/{id}/fields"),
                        key: field.into(),
                        expected: json!(value),
                    },
                    min_success(2),
                ],
            }
        }
        _ => {
            let id = id_of(numbers[s.next_below(n_records as u64) as usize]);
            let mut rest = records;
            rest.remove(&id);
            let instruction = format!(
                "{} {kind} {id} after checking that it exists.",
                pick(s, &["Delete", "Remove"])
            );
            Content {
                instruction,
                state,
                goal: goal("delete_record", &[("id", json!(id))]),
                criteria: vec![
                    Criterion::StateEquals {
                        path: "records".into(),
                        expected: Value::Object(rest),
                    },
                    min_success(2),
                ],
            }
        }
    }
}

// ----------------------------------------------------------- retrieval

const CITIES: &[&str] = &[
    "Aldport", "Brisa", "Corvale", "Dunmere", "Eastfold", "Fenwick", "Galloway", "Harrow", "Islay", "Juniper",
];
const FACILITIES: &[&str] = &["library", "museum", "pool", "market", "clinic", "gallery"];

/// (question phrase, statement phrase, query word, answer pool)
const ATTRS: &[(&str, &str, &str, &[&str])] = &[
    (
        "when the {f} in {c} opens",
        "opens at",
        "opening",
        &["07:00", "07:30", "08:00", "08:30", "09:00", "09:30"],
    ),
    (
        "when the {f} in {c} closes",
        "closes at",
        "closing",
        &["17:00", "18:00", "19:00", "20:00", "21:00"],
    ),
    (
        "which floor the {f} in {c} is on",
        "is on floor",
        "floor",
        &["1", "2", "3", "4"],
    ),
];

fn retrieval(s: &mut SeededStream, st: &mut SeededStream) -> Content {
    let n_docs = 3 + st.next_below(3) as usize;
    let doc_numbers = distinct(st, 80, n_docs);
    let combos = distinct(st, (CITIES.len() * FACILITIES.len()) as u64, n_docs);
    let mut documents = Map::new();
    let mut facts = Vec::new();
    for (&num, &combo) in doc_numbers.iter().zip(&combos) {
        let city = CITIES[combo as usize / FACILITIES.len()];
        let facility = FACILITIES[combo as usize % FACILITIES.len()];
        let attr = st.next_below(ATTRS.len() as u64) as usize;
        let (_, phrase, _, answers) = ATTRS[attr];
        let answer = *pick(st, answers);
        let id = format!("doc-{:02}", num + 1);
        documents.insert(
            id.clone(),
            json!({
                "title": format!("{city} {facility}"),
                "text": format!("The {facility} in {city} {phrase} {answer}."),
            }),
        );
        facts.push((id, city, facility, attr, answer));
    }
    let (doc_id, city, facility, attr, answer) = facts[s.next_below(facts.len() as u64) as usize].clone();
    let (question, _, query_word, _) = ATTRS[attr];
    let question = question.replace("{f}", facility).replace("{c}", city);
    let instruction = format!(
        "{} {question} and submit the answer.",
        pick(s, &["Find out", "Look up"])
    );
    Content {
        instruction,
        state: json!({"documents": documents, "answers": []}),
        goal: goal(
            "answer_question",
            &[
                ("query", json!(format!("{facility} {city} {query_word}"))),
                ("doc_id", json!(doc_id)),
                ("answer", json!(answer)),
            ],
        ),
        criteria: vec![
            Criterion::StateContains {
                path: "answers".into(),
                member: json!(answer),
            },
            min_success(3),
        ],
    }
}

// --------------------------------------------------------------- files

const DIRS: &[(&str, &str)] = &[
    ("notes", "txt"),
    ("reports", "md"),
    ("drafts", "txt"),
    ("config", "ini"),
];
const NAMES: &[&str] = &[
    "alpha",
    "budget",
    "backlog",
    "onboarding",
    "release",
    "roadmap",
    "summary",
    "weekly",
    "vendors",
    "audit",
    "ideas",
    "contacts",
];
const CONTENTS: &[&str] = &[
    "call the vendor",
    "review the draft",
    "renew the license",
    "book the room",
    "update the wiki",
    "ship the patch",
    "order toner",
    "sync with finance",
];
const LOG_EVENTS: &[&str] = &["backup done", "deploy ok", "cache cleared", "job failed"];

fn files(s: &mut SeededStream, st: &mut SeededStream) -> Content {
    let mut table = Map::new();
    let dirs = distinct(st, DIRS.len() as u64, 2);
    let names = distinct(st, NAMES.len() as u64, 5);
    let mut paths = Vec::new();
    for (i, &n) in names.iter().take(3 + st.next_below(2) as usize).enumerate() {
        let (dir, ext) = DIRS[dirs[i % 2] as usize];
        let path = format!("{dir}/{}.{ext}", NAMES[n as usize]);
        table.insert(path.clone(), json!(format!("{}\n", pick(st, CONTENTS))));
        paths.push(path);
    }
    table.insert("archive/index.txt".into(), json!("archived files\n"));
    let log = format!("logs/{}.log", pick(st, &["app", "sync", "cron"]));
    table.insert(
        log.clone(),
        json!(format!(
            "{} at {}\n",
            pick(st, LOG_EVENTS),
            hhmm(60 * (6 + st.next_below(4) as i64))
        )),
    );

    match s.next_below(3) {
        0 => {
            let (dir, ext) = DIRS[dirs[0] as usize];
            let path = format!("{dir}/{}.{ext}", NAMES[names[4] as usize]);
            let content = format!("{}\n", pick(s, CONTENTS));
            let instruction = format!(
                "{} a file at {path} containing '{}', then read it back.",
                pick(s, &["Write", "Create"]),
                content.trim_end()
            );
            Content {
                instruction,
                state: json!({ "files": table }),
                goal: goal("write_note", &[("path", json!(path)), ("content", json!(content))]),
                criteria: vec![
                    Criterion::StateKeyValue {
                        path: "files".into(),
                        key: path,
                        expected: json!(content),
                    },
                    min_success(2),
                ],
            }
        }
        1 => {
            let line = format!(
                "{} at {}\n",
                pick(s, LOG_EVENTS),
                hhmm(60 * (10 + s.next_below(8) as i64))
            );
            let old = table[&log].as_str().unwrap_or_default().to_string();
            let instruction = format!("Append the line '{}' to {log} and check the result.", line.trim_end());
            Content {
                instruction,
                state: json!({ "files": table }),
                goal: goal("append_log", &[("path", json!(log)), ("line", json!(line))]),
                criteria: vec![
                    Criterion::StateKeyValue {
                        path: "files".into(),
                        key: log,
                        expected: json!(old + &line),
                    },
                    min_success(2),
                ],
            }
        }
        _ => {
            let src = paths[s.next_below(paths.len() as u64) as usize].clone();
            let base = src.rsplit_once('/').map_or(src.as_str(), |(_, b)| b).to_string();
            let dst = format!("archive/{base}");
            let mut after = table.clone();
            let moved = after.remove(&src).unwrap_or(Value::Null);
            after.insert(dst.clone(), moved);
            let instruction = format!("Move {src} into the archive folder after reading it.");
            Content {
                instruction,
                state: json!({ "files": table }),
                goal: goal("archive_file", &[("src", json!(src)), ("dst", json!(dst))]),
                criteria: vec![
                    Criterion::StateEquals {
                        path: "files".into(),
                        expected: Value::Object(after),
                    },
                    min_success(2),
                ],
            }
        }
    }
}

// ---------------------------------------------------------- scheduling

const MEETINGS: &[(&str, &str)] = &[
    ("standup", "Standup"),
    ("review", "Design review"),
    ("sync", "Team sync"),
    ("demo", "Sprint demo"),
    ("retro", "Retrospective"),
    ("planning", "Planning"),
];
const TEAMS: &[&str] = &["ops", "sales", "data", "legal"];

fn scheduling(s: &mut SeededStream, st: &mut SeededStream) -> Content {
    let n_events = 2 + st.next_below(3) as usize;
    // One event per hour keeps the seeded calendar free of overlaps.
    let hours = distinct(st, 10, n_events + 1);
    let kinds = distinct(st, MEETINGS.len() as u64, n_events + 1);
    let mut events = Map::new();
    let mut ids = Vec::new();
    for i in 0..n_events {
        let (kind, title) = MEETINGS[kinds[i] as usize];
        let start = (8 + hours[i] as i64) * 60 + [0, 15, 30][st.next_below(3) as usize];
        let end = start + 30;
        let id = format!("{kind}-{}", 1 + st.next_below(3));
        events.insert(id.clone(), json!({"start": start, "end": end, "title": title}));
        ids.push(id);
    }
    let state = json!({
        "events": events.clone(),
        "conflicts": [],
        "allow_overlap": st.chance(0.5),
    });
    let free_start = (8 + hours[n_events] as i64) * 60 + [0, 30][s.next_below(2) as usize];
    let free_end = free_start + 30;

    match s.next_below(3) {
        0 => {
            let (kind, title) = MEETINGS[kinds[n_events] as usize];
            let title = format!("{title} with {}", pick(s, TEAMS));
            let id = format!("{kind}-{}", 1 + s.next_below(3));
            let instruction = format!(
                "Book '{title}' as {id} from {} to {}, then list the calendar.",
                hhmm(free_start),
                hhmm(free_end)
            );
            Content {
                instruction,
                state,
                goal: goal(
                    "book_meeting",
                    &[
                        ("id", json!(id)),
                        ("start", json!(free_start)),
                        ("end", json!(free_end)),
                        ("title", json!(title)),
                    ],
                ),
                criteria: vec![
                    Criterion::StateEquals {
                        path: format!("events/{id}/start"),
                        expected: json!(free_start),
                    },
                    Criterion::StateEquals {
                        path: format!("events/{id}/end"),
                        expected: json!(free_end),
                    },
                    min_success(2),
                ],
            }
        }
        1 => {
            let id = ids[s.next_below(ids.len() as u64) as usize].clone();
            let instruction = format!(
                "Move {id} to {}-{} and check for conflicts.",
                hhmm(free_start),
                hhmm(free_end)
            );
            Content {
                instruction,
                state,
                goal: goal(
                    "reschedule",
                    &[
                        ("id", json!(id)),
                        ("start", json!(free_start)),
                        ("end", json!(free_end)),
                    ],
                ),
                criteria: vec![
                    Criterion::StateKeyValue {
                        path: format!("events/{id}"),
                        key: "start".into(),
                        expected: json!(free_start),
                    },
                    Criterion::StateKeyValue {
                        path: format!("events/{id}"),
                        key: "end".into(),
                        expected: json!(free_end),
                    },
                    min_success(2),
                ],
            }
        }
        _ => {
            let id = ids[s.next_below(ids.len() as u64) as usize].clone();
            let mut rest = events;
            rest.remove(&id);
            let instruction = format!("Cancel {id} and confirm the calendar.");
            Content {
                instruction,
                state,
                goal: goal("cancel_event", &[("id", json!(id))]),
                criteria: vec![
                    Criterion::StateEquals {
                        path: "events".into(),
                        expected: Value::Object(rest),
                    },
                    min_success(2),
                ],
            }
        }
    }
}

fn goal(intent: &str, pairs: &[(&str, Value)]) -> GoalAnnotation {
    GoalAnnotation {
        intent: intent.into(),
        slots: slots(pairs),
        policy: Vec::new(),
    }
}
