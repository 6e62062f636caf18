use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::policy::{Policy, PolicyError, PolicyRequest, Proposal, ViewMode};

/// One request line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub request_id: u64,
    pub mode: ViewMode,
    pub theorem: String,
    pub goals: Vec<String>,
    pub prefix: Vec<String>,
    pub k: usize,
}

/// One response line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireResponse {
    pub request_id: u64,
    pub tactics: Vec<Proposal>,
}

impl WireRequest {
    pub fn new(request_id: u64, req: &PolicyRequest) -> Self {
        WireRequest {
            request_id,
            mode: req.mode,
            theorem: req.theorem.clone(),
            goals: req.goals.clone(),
            prefix: req.prefix.clone(),
            k: req.k,
        }
    }

    pub fn to_request(&self) -> PolicyRequest {
        PolicyRequest {
            mode: self.mode,
            theorem: self.theorem.clone(),
            goals: self.goals.clone(),
            prefix: self.prefix.clone(),
            k: self.k,
        }
    }
}

/// Parses a response line for `request_id`.
pub fn parse_response(line: &str, request_id: u64) -> Result<Vec<Proposal>, PolicyError> {
    let r: WireResponse =
        serde_json::from_str(line.trim()).map_err(|e| PolicyError::Protocol(format!("{e}: {line:?}")))?;
    if r.request_id != request_id {
        return Err(PolicyError::Protocol(format!("expected request_id {request_id}, got {}", r.request_id)));
    }
    if let Some(p) = r.tactics.iter().find(|p| !p.score.is_finite()) {
        return Err(PolicyError::Protocol(format!("non-finite score for {:?}", p.text)));
    }
    Ok(r.tactics)
}

/// A policy served by a child process over its standard streams.
pub struct WirePolicy {
    command: String,
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_id: u64,
    pub timeouts: u64,
}

impl WirePolicy {
    /// Runs `command` through `sh -c`.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, PolicyError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PolicyError::Process(format!("{command}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(WirePolicy { command: command.to_string(), child, stdin, lines: rx, timeout, next_id: 0, timeouts: 0 })
    }
}

impl Policy for WirePolicy {
    fn propose(&mut self, req: &PolicyRequest) -> Result<Vec<Proposal>, PolicyError> {
        let id = self.next_id;
        self.next_id += 1;
        let line = serde_json::to_string(&WireRequest::new(id, req)).expect("requests serialize");
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| PolicyError::Process(e.to_string()))?;
        loop {
            match self.lines.recv_timeout(self.timeout) {
                Ok(Ok(resp)) => match parse_response(&resp, id) {
                    // a late answer to a request that already timed out
                    Err(_) if serde_json::from_str::<WireResponse>(&resp).is_ok_and(|r| r.request_id < id) => continue,
                    r => return r,
                },
                Ok(Err(e)) => return Err(PolicyError::Process(e.to_string())),
                Err(RecvTimeoutError::Timeout) => {
                    self.timeouts += 1;
                    return Ok(vec![]);
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(PolicyError::Process(format!("{} closed its output", self.command)))
                }
            }
        }
    }

    fn name(&self) -> String {
        format!("wire:{}", self.command)
    }
}

impl Drop for WirePolicy {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Serves `policy` on `input`/`output` until end of input. Used by stub
/// policy processes.
pub fn serve<R: BufRead, W: Write>(policy: &mut dyn Policy, input: R, mut output: W) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req: WireRequest = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("bad request: {e}");
                continue;
            }
        };
        let tactics = policy.propose(&req.to_request()).unwrap_or_default();
        let resp = WireResponse { request_id: req.request_id, tactics };
        writeln!(output, "{}", serde_json::to_string(&resp).expect("responses serialize"))?;
        output.flush()?;
    }
    Ok(())
}
