//! Seeded task generation, dataset manifests and corpus quality reports.

mod content;
mod faults;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{self, CanonicalError};
use crate::env::catalog::default_schemas;
use crate::plan::reference_plan;
use crate::stream::SeededStream;
use crate::task::{Budget, Domain, DomainState, FaultType, TaskRecord};
use crate::validate::{validate_task, ValidationError};

pub use crate::task::BENCHMARK_VERSION;
pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Share of non-retrieval tasks that carry the survey trap rule.
const TRAP_RATE: f64 = 2.0 / 9.0;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("unknown profile '{0}' (expected small, default or large)")]
    UnknownProfile(String),
    #[error("bad split override '{0}' (expected name=count)")]
    BadSplit(String),
    #[error("{what} shares must be non-negative and sum to 1")]
    BadMix { what: &'static str },
    #[error("generated task {split}[{index}] failed validation: {errors:?}")]
    Invalid {
        split: String,
        index: usize,
        errors: Vec<ValidationError>,
    },
    #[error("no reference plan for intent '{0}'")]
    NoPlan(String),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> GenerateError + '_ {
    move |source| GenerateError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Split sizes plus the domain and fault mixes they are drawn with.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub name: String,
    pub splits: Vec<(String, usize)>,
    pub domain_mix: BTreeMap<Domain, f64>,
    /// Keys are fault families; `None` stands for fault-free tasks.
    pub fault_mix: BTreeMap<Option<FaultType>, f64>,
}

impl Profile {
    pub fn named(name: &str) -> Result<Self, GenerateError> {
        let sizes = match name {
            "small" => [100, 20, 40],
            "default" => [1000, 200, 400],
            "large" => [5000, 800, 1000],
            other => return Err(GenerateError::UnknownProfile(other.into())),
        };
        let splits = ["train", "dev", "test"]
            .iter()
            .map(|s| s.to_string())
            .zip(sizes)
            .collect();
        Ok(Self::custom(name, splits))
    }

    /// Uniform domain mix; faults uniform over the five families, none fault-free.
    pub fn custom(name: &str, splits: Vec<(String, usize)>) -> Self {
        let mut fault_mix: BTreeMap<Option<FaultType>, f64> = FaultType::ALL.iter().map(|&f| (Some(f), 0.2)).collect();
        fault_mix.insert(None, 0.0);
        Self {
            name: name.into(),
            splits,
            domain_mix: Domain::ALL.iter().map(|&d| (d, 0.25)).collect(),
            fault_mix,
        }
    }

    /// Applies a `name=count` override, replacing or appending the split.
    pub fn override_split(&mut self, spec: &str) -> Result<(), GenerateError> {
        let bad = || GenerateError::BadSplit(spec.into());
        let (name, count) = spec.split_once('=').ok_or_else(bad)?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(bad());
        }
        let name = name.trim();
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(bad());
        }
        match self.splits.iter_mut().find(|(n, _)| n == name) {
            Some(entry) => entry.1 = count,
            None => self.splits.push((name.into(), count)),
        }
        Ok(())
    }
}

/// Largest-remainder apportionment of `n` items over weighted keys, in key order.
pub fn quotas<K: Clone>(weights: &[(K, f64)], n: usize) -> Vec<(K, usize)> {
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let exact: Vec<f64> = weights.iter().map(|(_, w)| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // Stable sort keeps key order among equal remainders.
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    weights.iter().map(|(k, _)| k.clone()).zip(counts).collect()
}

fn check_mix<K>(mix: &BTreeMap<K, f64>, what: &'static str) -> Result<(), GenerateError> {
    let ok = mix.values().all(|w| w.is_finite() && *w >= 0.0) && (mix.values().sum::<f64>() - 1.0).abs() <= 1e-9;
    ok.then_some(()).ok_or(GenerateError::BadMix { what })
}

/// Expands quotas into a shuffled per-index assignment.
fn assignment<K: Clone + Ord>(mix: &BTreeMap<K, f64>, n: usize, s: &mut SeededStream) -> Vec<K> {
    let weights: Vec<(K, f64)> = mix.iter().map(|(k, w)| (k.clone(), *w)).collect();
    let mut out: Vec<K> = quotas(&weights, n)
        .into_iter()
        .flat_map(|(k, c)| std::iter::repeat_n(k, c))
        .collect();
    s.shuffle(&mut out);
    out
}

/// Generates one split. Identical inputs give identical records.
pub fn generate_split(
    profile: &Profile,
    seed: u64,
    split: &str,
    count: usize,
) -> Result<Vec<TaskRecord>, GenerateError> {
    check_mix(&profile.domain_mix, "domains")?;
    check_mix(&profile.fault_mix, "faults")?;
    let label = |field: &str| format!("gen/{split}/{field}");
    let domains = assignment(
        &profile.domain_mix,
        count,
        &mut SeededStream::new(seed, label("domains")),
    );
    let families = assignment(
        &profile.fault_mix,
        count,
        &mut SeededStream::new(seed, label("families")),
    );

    // Variant codes cycle within each family, then get shuffled.
    let mut codes: BTreeMap<FaultType, Vec<usize>> = BTreeMap::new();
    for family in FaultType::ALL {
        let n = families.iter().filter(|f| **f == Some(family)).count();
        let mut list: Vec<usize> = (0..n).map(|i| i % faults::variant_count(family)).collect();
        SeededStream::new(seed, label(&format!("variants/{family}"))).shuffle(&mut list);
        codes.insert(family, list);
    }
    let mut cursor: BTreeMap<FaultType, usize> = BTreeMap::new();

    let mut out = Vec::with_capacity(count);
    for (i, (domain, family)) in domains.into_iter().zip(families).enumerate() {
        let code = family.map(|f| {
            let at = cursor.entry(f).or_insert(0);
            *at += 1;
            codes[&f][*at - 1]
        });
        let task = generate_task(seed, split, i, domain, family.zip(code))?;
        let errors = validate_task(&task);
        if !errors.is_empty() {
            return Err(GenerateError::Invalid {
                split: split.into(),
                index: i,
                errors,
            });
        }
        out.push(task);
    }
    Ok(out)
}

fn generate_task(
    seed: u64,
    split: &str,
    index: usize,
    domain: Domain,
    fault: Option<(FaultType, usize)>,
) -> Result<TaskRecord, GenerateError> {
    let stream = |field: &str| SeededStream::new(seed, format!("gen/{split}/{index}/{field}"));
    let mut content = content::build(domain, seed, &mut stream("content"));

    let mut policy = stream("policy");
    let trapped = domain != Domain::Retrieval && policy.chance(TRAP_RATE);
    if trapped {
        content.goal.slots.insert("survey".into(), true.into());
    }
    let plan = reference_plan(&content.goal).ok_or_else(|| GenerateError::NoPlan(content.goal.intent.clone()))?;

    let mut b = stream("budget");
    let max_steps = *b.pick(&[10, 12, 14]);
    let budgets = Budget {
        max_steps,
        max_tool_calls: max_steps - b.pick(&[0, 2]),
        max_retries: *b.pick(&[2, 3]),
        per_call_timeout_ms: *b.pick(&[500, 1000, 2000]),
    };

    let mut rules: Vec<_> = if trapped {
        faults::trap(domain, &plan, &mut policy).into_iter().collect()
    } else {
        Vec::new()
    };
    let extra = faults::non_binding(domain, &plan, &budgets, &rules, &mut policy);
    rules.extend(extra);

    let mut schemas = default_schemas(domain);
    let fault_plan = fault
        .map(|(family, code)| faults::place(family, code, &plan, &mut schemas, &budgets, &mut stream("fault")))
        .into_iter()
        .collect();

    content.goal.policy = rules.clone();
    let mut task = TaskRecord {
        task_id: String::new(),
        domain,
        instruction: content.instruction,
        tool_schemas: schemas,
        initial_state: DomainState(content.state),
        goal_annotation: content.goal,
        success_criteria: content.criteria,
        fault_plan,
        policy_rules: rules,
        budgets,
        seed: stream("seed").next_u64(),
        version: BENCHMARK_VERSION.into(),
    };
    let digest = canonical::digest(&task)?;
    task.task_id = format!("{split}-{index}-{}", &digest[..8]);
    Ok(task)
}

/// One split file as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub name: String,
    pub file: String,
    pub count: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub benchmark_version: String,
    pub generator_version: String,
    pub profile: String,
    pub seed: u64,
    pub frozen: bool,
    pub splits: Vec<SplitEntry>,
}

impl Manifest {
    pub const FILE: &'static str = "manifest.json";

    pub fn load(dir: &Path) -> Result<Self, GenerateError> {
        let path = dir.join(Self::FILE);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        serde_json::from_slice(&bytes)
            .map_err(|source| GenerateError::Canonical(CanonicalError::Decode { line: 1, source }))
    }
}

/// Generates every split of `profile` into `dir` and writes the manifest.
pub fn write_dataset(profile: &Profile, seed: u64, dir: &Path) -> Result<Manifest, GenerateError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut splits = Vec::new();
    for (name, count) in &profile.splits {
        let tasks = generate_split(profile, seed, name, *count)?;
        let bytes = canonical::to_jsonl(&tasks)?;
        let file = split_file(name);
        let path = dir.join(&file);
        fs::write(&path, &bytes).map_err(io_err(&path))?;
        splits.push(SplitEntry {
            name: name.clone(),
            file,
            count: tasks.len(),
            sha256: canonical::sha256_hex(&bytes),
        });
    }
    let manifest = Manifest {
        benchmark_version: BENCHMARK_VERSION.into(),
        generator_version: GENERATOR_VERSION.into(),
        profile: profile.name.clone(),
        seed,
        frozen: true,
        splits,
    };
    let path = dir.join(Manifest::FILE);
    let mut bytes = canonical::canonical_bytes(&manifest)?;
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(manifest)
}

/// A split file that no longer matches its manifest entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub split: String,
    pub problem: String,
}

/// Checks every split file's hash and record count against the manifest.
pub fn verify_manifest(manifest: &Manifest, dir: &Path) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for entry in &manifest.splits {
        let mismatch = |problem: String| Mismatch {
            split: entry.name.clone(),
            problem,
        };
        let bytes = match fs::read(dir.join(&entry.file)) {
            Ok(b) => b,
            Err(e) => {
                out.push(mismatch(format!("cannot read {}: {e}", entry.file)));
                continue;
            }
        };
        let actual = canonical::sha256_hex(&bytes);
        if actual != entry.sha256 {
            out.push(mismatch(format!("sha256 {actual} != recorded {}", entry.sha256)));
        }
        let lines = bytes.split(|&b| b == b'\n').filter(|l| !l.is_empty()).count();
        if lines != entry.count {
            out.push(mismatch(format!("{lines} records != recorded {}", entry.count)));
        }
    }
    out
}

pub fn split_file(split: &str) -> String {
    format!("{split}.tasks.jsonl")
}

/// Reads a split's tasks from a dataset directory.
pub fn load_split(dir: &Path, split: &str) -> Result<Vec<TaskRecord>, GenerateError> {
    let path = dir.join(split_file(split));
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    Ok(canonical::from_jsonl(&bytes)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitQuality {
    pub count: usize,
    pub instruction_uniqueness: f64,
    pub state_uniqueness: f64,
    pub domains: BTreeMap<String, usize>,
    pub fault_families: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub splits: BTreeMap<String, SplitQuality>,
    pub duplicate_task_id_count: usize,
    /// Task ids that occur more than once across all splits.
    pub duplicate_task_ids: Vec<String>,
}

fn uniqueness<'a>(items: impl Iterator<Item = &'a str>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    items.collect::<BTreeSet<_>>().len() as f64 / n as f64
}

pub fn split_quality(tasks: &[TaskRecord]) -> SplitQuality {
    let digests: Vec<String> = tasks.iter().map(|t| t.initial_state.digest()).collect();
    let mut domains = BTreeMap::new();
    let mut fault_families = BTreeMap::new();
    for t in tasks {
        *domains.entry(t.domain.to_string()).or_insert(0) += 1;
        let family = t.fault_family().map_or("none".to_string(), |f| f.to_string());
        *fault_families.entry(family).or_insert(0) += 1;
    }
    SplitQuality {
        count: tasks.len(),
        instruction_uniqueness: uniqueness(tasks.iter().map(|t| t.instruction.as_str()), tasks.len()),
        state_uniqueness: uniqueness(digests.iter().map(String::as_str), tasks.len()),
        domains,
        fault_families,
    }
}

pub fn quality_report<'a>(splits: impl IntoIterator<Item = (&'a str, &'a [TaskRecord])>) -> QualityReport {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (name, tasks) in splits {
        for t in tasks {
            *seen.entry(t.task_id.as_str()).or_insert(0) += 1;
        }
        out.insert(name.to_string(), split_quality(tasks));
    }
    let duplicate_task_ids: Vec<String> = seen
        .into_iter()
        .filter(|(_, c)| *c > 1)
        .map(|(id, _)| id.to_string())
        .collect();
    QualityReport {
        splits: out,
        duplicate_task_id_count: duplicate_task_ids.len(),
        duplicate_task_ids,
    }
}

#[cfg(test)]
mod tests;
