//! Line-delimited JSON protocol for agents running in a subprocess.
//!
//! The harness sends `reset` once per episode and `observe` once per step;
//! the agent answers `ready` and `act` respectively. An agent that cannot go
//! on may answer `error` with a message instead.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentAction, AgentError, Briefing, Observation};

/// Harness to agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Reset(Briefing),
    Observe(Observation),
}

/// Agent to harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Ready,
    Act { action: AgentAction },
    Error { message: String },
}

fn write_line<T: Serialize>(out: &mut impl Write, msg: &T) -> io::Result<()> {
    let mut line = serde_json::to_vec(msg).map_err(io::Error::other)?;
    line.push(b'\n');
    out.write_all(&line)?;
    out.flush()
}

/// An [`Agent`] backed by a child process.
pub struct ExternalAgent {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<io::Result<String>>,
    deadline: Duration,
}

impl ExternalAgent {
    /// Runs `program` with `args`, stdin/stdout piped, stderr inherited.
    pub fn spawn(program: &str, args: &[String], deadline: Duration) -> Result<Self, AgentError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            stdin: child.stdin.take(),
            child,
            lines: rx,
            deadline,
        })
    }

    /// Splits a command line on whitespace; the first word is the program.
    pub fn spawn_command(command: &str, deadline: Duration) -> Result<Self, AgentError> {
        let mut words = command.split_whitespace().map(String::from);
        let program = words
            .next()
            .ok_or_else(|| AgentError::Protocol("empty agent command".into()))?;
        Self::spawn(&program, &words.collect::<Vec<_>>(), deadline)
    }

    fn exchange(&mut self, request: &Request) -> Result<Reply, AgentError> {
        let stdin = self.stdin.as_mut().ok_or(AgentError::Exited)?;
        write_line(stdin, request).map_err(|e| match e.kind() {
            io::ErrorKind::BrokenPipe => AgentError::Exited,
            _ => AgentError::Io(e),
        })?;
        let line = match self.lines.recv_timeout(self.deadline) {
            Ok(line) => line?,
            Err(RecvTimeoutError::Timeout) => return Err(AgentError::Timeout(self.deadline)),
            Err(RecvTimeoutError::Disconnected) => return Err(AgentError::Exited),
        };
        match serde_json::from_str(&line) {
            Ok(Reply::Error { message }) => Err(AgentError::Protocol(message)),
            Ok(reply) => Ok(reply),
            Err(e) => Err(AgentError::Protocol(format!("malformed reply: {e}"))),
        }
    }
}

impl Agent for ExternalAgent {
    fn reset(&mut self, briefing: &Briefing) -> Result<(), AgentError> {
        match self.exchange(&Request::Reset(briefing.clone()))? {
            Reply::Ready => Ok(()),
            other => Err(AgentError::Protocol(format!("expected ready, got {other:?}"))),
        }
    }

    fn act(&mut self, observation: &Observation) -> Result<AgentAction, AgentError> {
        match self.exchange(&Request::Observe(observation.clone()))? {
            Reply::Act { action } => Ok(action),
            other => Err(AgentError::Protocol(format!("expected act, got {other:?}"))),
        }
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        // Closing stdin lets a well-behaved agent exit on its own.
        self.stdin.take();
        if !matches!(self.child.try_wait(), Ok(Some(_))) {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}

/// Serves `agent` over the protocol until `input` closes.
pub fn serve_agent<A: Agent>(agent: &mut A, input: impl BufRead, mut output: impl Write) -> Result<(), AgentError> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request =
            serde_json::from_str(&line).map_err(|e| AgentError::Protocol(format!("malformed request: {e}")))?;
        let reply = match request {
            Request::Reset(briefing) => agent.reset(&briefing).map(|()| Reply::Ready),
            Request::Observe(obs) => agent.act(&obs).map(|action| Reply::Act { action }),
        };
        let reply = reply.unwrap_or_else(|e| Reply::Error {
            message: match e {
                AgentError::Protocol(m) => m,
                other => other.to_string(),
            },
        });
        write_line(&mut output, &reply)?;
    }
    Ok(())
}
