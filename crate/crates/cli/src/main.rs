use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use toolfault::agent::{Agent, AgentAction, AgentError, Briefing, Observation};
use toolfault::baselines::{BaselineAgent, BaselineKind};
use toolfault::canonical;
use toolfault::eval::evaluate;
use toolfault::external::{serve_agent, ExternalAgent};
use toolfault::generator::{
    load_split, quality_report, verify_manifest, write_dataset, Manifest, Profile, QualityReport,
};
use toolfault::scoring::tables::{budget_curve_csv, fault_table, overall_table};
use toolfault::scoring::AggregateReport;
use toolfault::{replay, ReplayVerdict};

#[derive(Parser)]
#[command(
    name = "toolfault",
    version,
    about = "Fault-injection benchmark harness for tool-using agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate dataset splits, a manifest and a quality report.
    Generate(GenerateArgs),
    /// Run an agent over a split and score it.
    Evaluate(EvaluateArgs),
    /// Re-execute a trace and compare it byte for byte.
    Replay(ReplayArgs),
    /// Render tables from one or more report files.
    Report(ReportArgs),
    /// Recompute the quality report of a dataset directory.
    QualityReport(DataArgs),
    /// Expose a built-in agent over the line protocol on stdin/stdout.
    ServeAgent(ServeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// small, default or large.
    #[arg(long)]
    profile: Option<String>,
    /// Split size override, `name=count`. Without --profile only these splits are made.
    #[arg(long = "split", value_name = "NAME=COUNT")]
    splits: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "TOOLFAULT_OUT", default_value = "data")]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset directory holding manifest.json and the split files.
    #[arg(long, default_value = "data")]
    data: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "test")]
    split: String,
    /// Built-in agent: heuristic, schema_repair or policy_aware.
    #[arg(long, conflicts_with = "agent_cmd", required_unless_present = "agent_cmd")]
    agent: Option<BaselineKind>,
    /// Command line of an external agent speaking the line protocol.
    #[arg(long)]
    agent_cmd: Option<String>,
    /// Name used for output files; defaults to the agent name or "external".
    #[arg(long)]
    name: Option<String>,
    /// Seconds to wait for each external reply.
    #[arg(long, default_value_t = 30.0)]
    reply_timeout: f64,
    #[arg(long, env = "TOOLFAULT_OUT", default_value = "runs")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Evaluate even if the split files do not match the manifest.
    #[arg(long)]
    skip_verify: bool,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "test")]
    split: String,
    /// Trace file written by `evaluate`.
    trace: PathBuf,
    /// Task to replay against; defaults to the trace file name.
    #[arg(long)]
    task_id: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// `.report.json` files, one per agent.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Also write table1.txt and table2.txt here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    builtin: BaselineKind,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Evaluate(a) => cmd_evaluate(a),
        Cmd::Replay(a) => cmd_replay(a),
        Cmd::Report(a) => cmd_report(a),
        Cmd::QualityReport(a) => cmd_quality(a),
        Cmd::ServeAgent(a) => cmd_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Writes canonical JSON followed by a newline.
fn write_record(path: &Path, mut bytes: Vec<u8>) -> Result<()> {
    bytes.push(b'\n');
    write(path, bytes)
}

fn dataset_quality(dir: &Path, manifest: &Manifest) -> Result<QualityReport> {
    let splits = manifest
        .splits
        .iter()
        .map(|s| Ok((s.name.clone(), load_split(dir, &s.name)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(quality_report(splits.iter().map(|(n, t)| (n.as_str(), t.as_slice()))))
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut profile = match &a.profile {
        Some(name) => Profile::named(name)?,
        None if a.splits.is_empty() => Profile::named("default")?,
        None => Profile::custom("custom", Vec::new()),
    };
    for s in &a.splits {
        profile.override_split(s)?;
    }
    let manifest = write_dataset(&profile, a.seed, &a.out)?;
    let quality = dataset_quality(&a.out, &manifest)?;
    write_record(
        &a.out.join("quality_report.json"),
        canonical::canonical_bytes(&quality)?,
    )?;
    for s in &manifest.splits {
        println!("{:<8} {:>6} tasks  sha256 {}", s.name, s.count, s.sha256);
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

/// Either a built-in agent or an external process; a failed spawn surfaces
/// as a protocol error on reset.
enum SelectedAgent {
    Builtin(BaselineAgent),
    External(ExternalAgent),
    Unavailable(String),
}

impl Agent for SelectedAgent {
    fn reset(&mut self, briefing: &Briefing) -> Result<(), AgentError> {
        match self {
            SelectedAgent::Builtin(a) => a.reset(briefing),
            SelectedAgent::External(a) => a.reset(briefing),
            SelectedAgent::Unavailable(why) => Err(AgentError::Protocol(why.clone())),
        }
    }

    fn act(&mut self, observation: &Observation) -> Result<AgentAction, AgentError> {
        match self {
            SelectedAgent::Builtin(a) => a.act(observation),
            SelectedAgent::External(a) => a.act(observation),
            SelectedAgent::Unavailable(why) => Err(AgentError::Protocol(why.clone())),
        }
    }
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let dir = &a.data.data;
    if !a.skip_verify {
        let manifest = Manifest::load(dir).context("loading manifest (use --skip-verify to bypass)")?;
        let problems = verify_manifest(&manifest, dir);
        if !problems.is_empty() {
            for p in &problems {
                eprintln!("manifest mismatch in {}: {}", p.split, p.problem);
            }
            return Err(anyhow!("dataset {} does not match its manifest", dir.display()));
        }
    }
    let tasks = load_split(dir, &a.split)?;
    if tasks.is_empty() {
        bail!("split {} is empty", a.split);
    }
    let name = a.name.clone().unwrap_or_else(|| match a.agent {
        Some(kind) => kind.to_string(),
        None => "external".into(),
    });
    let deadline = Duration::from_secs_f64(a.reply_timeout);
    let make = || match (&a.agent, &a.agent_cmd) {
        (Some(kind), _) => SelectedAgent::Builtin(kind.agent()),
        (None, Some(cmd)) => match ExternalAgent::spawn_command(cmd, deadline) {
            Ok(agent) => SelectedAgent::External(agent),
            Err(e) => SelectedAgent::Unavailable(format!("cannot start agent: {e}")),
        },
        (None, None) => unreachable!("clap requires an agent"),
    };
    let eval = evaluate(&name, &tasks, a.parallel, make)?;

    let traces_dir = a.out.join("traces");
    fs::create_dir_all(&traces_dir).with_context(|| format!("creating {}", traces_dir.display()))?;
    for trace in &eval.traces {
        write(
            &traces_dir.join(format!("{}.trace.jsonl", trace.task_id)),
            trace.to_jsonl(),
        )?;
    }
    let reports = [eval.report];
    let (t1, t2) = (overall_table(&reports), fault_table(&reports));
    write_record(
        &a.out.join(format!("{name}.report.json")),
        canonical::canonical_bytes(&reports[0])?,
    )?;
    write(&a.out.join(format!("{name}.table1.txt")), &t1)?;
    write(&a.out.join(format!("{name}.table2.txt")), &t2)?;
    write(
        &a.out.join(format!("{name}.budget_curve.csv")),
        budget_curve_csv(&reports[0]),
    )?;
    println!("{t1}\n{t2}");
    println!(
        "AUC {:.4}  ({} tasks, results in {})",
        reports[0].auc,
        tasks.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_replay(a: ReplayArgs) -> Result<()> {
    let task_id = match a.task_id {
        Some(id) => id,
        None => a
            .trace
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_suffix(".trace.jsonl"))
            .map(String::from)
            .context("cannot infer the task id from the trace file name; pass --task-id")?,
    };
    let tasks = load_split(&a.data.data, &a.split)?;
    let task = tasks
        .iter()
        .find(|t| t.task_id == task_id)
        .ok_or_else(|| anyhow!("task {task_id} not found in split {}", a.split))?;
    let bytes = fs::read(&a.trace).with_context(|| format!("reading {}", a.trace.display()))?;
    match replay(task, &bytes) {
        ReplayVerdict::Ok => {
            println!("ok");
            Ok(())
        }
        ReplayVerdict::Diverged { line, reason } => {
            println!("diverged at line {line}: {reason}");
            Err(anyhow!("trace {} diverged", a.trace.display()))
        }
    }
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let reports = a
        .reports
        .iter()
        .map(|p| {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_slice::<AggregateReport>(&bytes).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (t1, t2) = (overall_table(&reports), fault_table(&reports));
    println!("{t1}\n{t2}");
    if let Some(out) = a.out {
        fs::create_dir_all(&out)?;
        write(&out.join("table1.txt"), &t1)?;
        write(&out.join("table2.txt"), &t2)?;
    }
    Ok(())
}

fn cmd_quality(a: DataArgs) -> Result<()> {
    let manifest = Manifest::load(&a.data)?;
    let quality = dataset_quality(&a.data, &manifest)?;
    write_record(
        &a.data.join("quality_report.json"),
        canonical::canonical_bytes(&quality)?,
    )?;
    println!("{}", serde_json::to_string_pretty(&quality)?);
    if quality.duplicate_task_id_count > 0 {
        return Err(anyhow!("{} duplicate task ids", quality.duplicate_task_id_count));
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let mut agent = a.builtin.agent();
    serve_agent(&mut agent, io::stdin().lock(), BufWriter::new(io::stdout().lock()))?;
    Ok(())
}
