//! A policy process for testing the wire protocol.

use std::io::{self, BufRead, Write};
use std::time::Duration;

use clap::Parser;

use proofgrove::search::{serve, EnumPolicy, Policy, PolicyError, PolicyRequest, Proposal, ScriptedPolicy};

#[derive(Parser)]
struct Args {
    /// Answer every request with these tactics, in order.
    #[arg(long)]
    fixed: Vec<String>,
    /// Serve a scripted rule file.
    #[arg(long)]
    rules: Option<String>,
    /// Answer with a line that is not a response.
    #[arg(long)]
    malformed: bool,
    /// Wait this long before the first answer.
    #[arg(long, default_value_t = 0)]
    stall_first_ms: u64,
}

fn main() -> io::Result<()> {
    let args = Args::parse();
    let stdin = io::stdin();
    let mut stdout = io::stdout();
    if args.malformed {
        for line in stdin.lock().lines() {
            line?;
            writeln!(stdout, "{{\"tactics\": \"not a list\"}}")?;
            stdout.flush()?;
        }
        return Ok(());
    }
    let mut policy: Box<dyn Policy> = match &args.rules {
        Some(path) => Box::new(ScriptedPolicy::parse(&std::fs::read_to_string(path)?).map_err(io::Error::other)?),
        None if args.fixed.is_empty() => Box::new(EnumPolicy::templated()),
        None => Box::new(EnumPolicy::fixed(args.fixed.clone())),
    };
    if args.stall_first_ms > 0 {
        policy = Box::new(Stall { inner: policy, delay: Some(Duration::from_millis(args.stall_first_ms)) });
    }
    serve(policy.as_mut(), stdin.lock(), stdout)
}

struct Stall {
    inner: Box<dyn Policy>,
    delay: Option<Duration>,
}

impl Policy for Stall {
    fn propose(&mut self, req: &PolicyRequest) -> Result<Vec<Proposal>, PolicyError> {
        if let Some(d) = self.delay.take() {
            std::thread::sleep(d);
        }
        self.inner.propose(req)
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}
