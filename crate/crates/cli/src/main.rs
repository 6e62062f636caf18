mod config;

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use proofgrove::dataset::{
    corpus_stats, emit_jsonl, extract_source, load_jsonl, ByBlockRecord, SampleRecord, TheoremEntry, TheoremRecord,
    TreeEntry, TreeRecord,
};
use proofgrove::kernel::Environment;
use proofgrove::prelude::file_env;
use proofgrove::search::{
    run_rollouts, search, EnumPolicy, Policy, RandomPolicy, ScriptedPolicy, SearchMode, WirePolicy,
};
use proofgrove::syntax::{parse_file, SourceFile, TheoremDecl};
use proofgrove::tactics::{new_session, run_script, KernelMode, ProofState, TacticConfig, Verdict};
use proofgrove::treebuild::{block_root, verify_tree, ProofTree};

use config::{Format, RunConfig, Settings};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    /// Something did not prove or verify; the report is already printed.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "proofgrove", version, about = "Proof search and proof-tree extraction for MiniLean")]
struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output style: text or records (one JSON line per item).
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for proofs of the theorems in a file.
    Prove(ProveArgs),
    /// Extract proof trees from every .ml file under a directory.
    Extract {
        dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Replay every tree of a dataset file against its source.
    Verify {
        trees: PathBuf,
        /// Directory that record paths are relative to.
        #[arg(long)]
        root: Option<PathBuf>,
    },
    /// Run the proofs in a file under the kernel checking modes.
    Check {
        file: PathBuf,
        /// incremental, whole-per-step or final-only; all three if omitted.
        #[arg(long)]
        kernel_mode: Option<String>,
    },
    /// Summary table of a dataset file.
    Stats { dataset: PathBuf },
}

#[derive(Args)]
struct ProveArgs {
    file: PathBuf,
    #[arg(long)]
    theorem: Option<String>,
    /// scripted:PATH, enum, random or wire:CMD
    #[arg(long)]
    policy: Option<String>,
    /// rollout-white, rollout-black or andor
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    max_expansions: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long)]
    allow_library_search: bool,
    #[arg(long)]
    policy_timeout_ms: Option<u64>,
    /// Write found proof trees as dataset records.
    #[arg(long)]
    tree_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut flags = Settings { format: cli.format.clone(), ..Settings::default() };
    match &cli.command {
        Command::Prove(a) => {
            flags.policy = a.policy.clone();
            flags.mode = a.mode.clone();
            flags.rollouts = a.rollouts;
            flags.max_steps = a.max_steps;
            flags.max_expansions = a.max_expansions;
            flags.max_depth = a.max_depth;
            flags.seed = a.seed;
            flags.pool = a.pool;
            flags.allow_library_search = a.allow_library_search.then_some(true);
            flags.policy_timeout_ms = a.policy_timeout_ms;
        }
        Command::Extract { jobs, .. } => flags.jobs = *jobs,
        Command::Check { kernel_mode, .. } => flags.kernel_mode = kernel_mode.clone(),
        _ => {}
    }
    let file = match &cli.config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    let env = Settings::from_env(|k| std::env::var(k).ok())?;
    let rc = RunConfig::resolve(flags.over(file.over(env)))?;
    eprintln!("config: {}", serde_json::to_string(&rc).expect("config serializes"));
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Prove(a) => prove(&rc, &a.file, a.theorem.as_deref(), a.tree_out.as_deref(), &mut out),
        Command::Extract { dir, output, .. } => extract(&rc, &dir, &output),
        Command::Verify { trees, root } => verify(&rc, &trees, root.as_deref(), &mut out),
        Command::Check { file, .. } => check(&rc, &file, &mut out),
        Command::Stats { dataset } => stats(&rc, &dataset, &mut out),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_line(out: &mut impl Write, line: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Io(e.to_string()))
}

fn load_source(path: &Path) -> Result<(SourceFile, Arc<Environment>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file = parse_file(&text, &path.display().to_string()).map_err(|e| io_err(path, e))?;
    let (env, errors) = file_env(&file);
    for (i, e) in &errors {
        eprintln!("{}: declaration {}: {e}", path.display(), i + 1);
    }
    Ok((file, env))
}

fn make_policy(rc: &RunConfig) -> Result<Box<dyn Policy>, CliError> {
    let spec = rc.policy.as_str();
    Ok(match spec {
        "enum" => Box::new(EnumPolicy::templated()),
        "random" => Box::new(RandomPolicy::new(rc.search.seed)),
        _ => {
            if let Some(path) = spec.strip_prefix("scripted:") {
                let text = fs::read_to_string(path).map_err(|e| io_err(Path::new(path), e))?;
                Box::new(ScriptedPolicy::parse(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?)
            } else if let Some(cmd) = spec.strip_prefix("wire:") {
                let timeout = Duration::from_millis(rc.policy_timeout_ms);
                Box::new(WirePolicy::spawn(cmd, timeout).map_err(|e| CliError::Usage(e.to_string()))?)
            } else {
                return Err(CliError::Usage(format!("unknown policy {spec:?}")));
            }
        }
    })
}

struct Attempt {
    proven: bool,
    script: Vec<String>,
    tree: Option<ProofTree>,
    detail: serde_json::Value,
    log: Vec<String>,
}

fn attempt(rc: &RunConfig, start: &ProofState, policy: &mut dyn Policy) -> Attempt {
    match rc.search.mode {
        SearchMode::Andor => {
            let r = search(start, policy, &rc.search);
            let mut log = r.log.clone();
            if let Some(e) = &r.error {
                log.push(format!("extraction: {e}"));
            }
            let s = &r.stats;
            let detail = json!({
                "status": r.status,
                "expansions": s.expansions,
                "nodes": s.nodes,
                "edges": s.edges,
                "transpositions": s.transpositions,
                "cycles_pruned": s.cycles_pruned,
                "tactic_failures": s.tactic_failures,
                "banned": s.banned,
                "malformed": s.malformed,
                "policy_errors": s.policy_errors,
            });
            let proven = r.proven();
            let (script, tree) = match r.proof {
                Some(p) => (p.script, Some(p.tree)),
                None => (vec![], None),
            };
            Attempt { proven, script, tree, detail, log }
        }
        SearchMode::RolloutWhite | SearchMode::RolloutBlack => {
            let r = run_rollouts(start, policy, &rc.search);
            let mut log = Vec::new();
            for (i, run) in r.runs.iter().enumerate() {
                for step in &run.steps {
                    if let Some(e) = &step.error {
                        log.push(format!("rollout {i}: {}: {e}", step.tactic));
                    }
                }
            }
            let detail = json!({
                "rollouts": r.runs.len(),
                "solved_by": r.solved_by,
                "steps": r.runs.iter().map(|x| x.steps.len()).sum::<usize>(),
                "banned": r.runs.iter().map(|x| x.banned).sum::<u64>(),
            });
            let tree = r.script.as_ref().and_then(|s| script_tree(start, s));
            Attempt { proven: r.success, script: r.script.unwrap_or_default(), tree, detail, log }
        }
    }
}

/// Builds the proof tree of a successful rollout script.
fn script_tree(start: &ProofState, script: &[String]) -> Option<ProofTree> {
    let text = script.join("\n");
    let nodes = proofgrove::syntax::parse_tactic_script(&text).ok()?;
    let single = proofgrove::treebuild::build_singleton_tree(start, &nodes).ok()?;
    let simple = proofgrove::treebuild::simplify_tactics(&single).ok()?;
    let mut tree = proofgrove::treebuild::merge_coupled_siblings(&simple).ok()?;
    proofgrove::treebuild::annotate_metrics(&mut tree);
    verify_tree(start, &tree).ok()?;
    Some(tree)
}

fn prove(
    rc: &RunConfig,
    path: &Path,
    only: Option<&str>,
    tree_out: Option<&Path>,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let (file, env) = load_source(path)?;
    let theorems: Vec<&TheoremDecl> = file
        .theorems()
        .filter(|t| only.is_none() || t.name.as_deref() == only)
        .collect();
    if let Some(name) = only {
        if theorems.is_empty() {
            return Err(CliError::Usage(format!("no theorem named {name:?} in {}", path.display())));
        }
    }
    let mut policy = make_policy(rc)?;
    let mut failed = 0;
    let mut found = Vec::new();
    for thm in &theorems {
        let name = thm.name.clone().unwrap_or_else(|| "_".into());
        let start = match new_session(env.clone(), thm) {
            Ok(s) => s,
            Err(e) => {
                failed += 1;
                match rc.format {
                    Format::Text => write_line(out, format!("{name}: error: {e}"))?,
                    Format::Records => write_line(out, json!({"theorem": name, "proven": false, "error": e.to_string()}))?,
                }
                continue;
            }
        };
        let a = attempt(rc, &start, policy.as_mut());
        for l in &a.log {
            eprintln!("{name}: {l}");
        }
        if !a.proven {
            failed += 1;
        }
        match rc.format {
            Format::Text => {
                let verdict = if a.proven { "proven" } else { "not proven" };
                write_line(out, format!("{name}: {verdict} ({})", rc.search.mode.name()))?;
                for t in &a.script {
                    write_line(out, format!("  {t}"))?;
                }
            }
            Format::Records => write_line(
                out,
                json!({
                    "theorem": name,
                    "proven": a.proven,
                    "mode": rc.search.mode.name(),
                    "policy": rc.policy,
                    "script": a.script,
                    "search": a.detail,
                }),
            )?,
        }
        if let Some(tree) = a.tree.filter(|_| a.proven) {
            found.push((thm, tree));
        }
    }
    if let Some(p) = tree_out {
        let record = SampleRecord {
            path: path.display().to_string(),
            imports: file.imports.clone(),
            theorems: found
                .into_iter()
                .map(|(thm, tree)| {
                    let tree = match TreeRecord::from_tree(&tree) {
                        Ok(r) => TreeEntry::Tree(r),
                        Err(e) => TreeEntry::Error(proofgrove::dataset::ErrorRecord { error: e.to_string() }),
                    };
                    TheoremEntry::Theorem(TheoremRecord {
                        span: thm.span.into(),
                        name: thm.name.clone(),
                        context: thm.open_namespaces.clone(),
                        by_blocks: vec![ByBlockRecord { tree }],
                    })
                })
                .collect(),
        };
        let f = fs::File::create(p).map_err(|e| io_err(p, e))?;
        emit_jsonl(&[record], io::BufWriter::new(f)).map_err(|e| io_err(p, e))?;
    }
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} of {} theorems not proven", theorems.len())));
    }
    Ok(())
}

fn extract(rc: &RunConfig, dir: &Path, output: &Path) -> Result<(), CliError> {
    let mut paths = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "ml") {
            paths.push(entry.into_path());
        }
    }
    let slots: Vec<Mutex<Option<Result<SampleRecord, CliError>>>> = paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..rc.jobs.min(paths.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(p) = paths.get(i) else { break };
                let r = fs::read_to_string(p)
                    .map(|text| extract_source(&p.display().to_string(), &text))
                    .map_err(|e| io_err(p, e));
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    let records = slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every file is processed"))
        .collect::<Result<Vec<_>, _>>()?;
    let f = fs::File::create(output).map_err(|e| io_err(output, e))?;
    emit_jsonl(&records, io::BufWriter::new(f)).map_err(|e| io_err(output, e))?;
    let s = corpus_stats(&records);
    eprintln!(
        "{} files, {} theorems ({} errors), {} by-blocks, {} trees, {} tree errors",
        s.files, s.theorems, s.theorem_errors, s.by_blocks, s.converted, s.tree_errors
    );
    Ok(())
}

fn load_dataset(path: &Path) -> Result<Vec<SampleRecord>, CliError> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    load_jsonl(BufReader::new(f)).map_err(|e| io_err(path, e))
}

fn verify(rc: &RunConfig, dataset: &Path, root: Option<&Path>, out: &mut impl Write) -> Result<(), CliError> {
    let records = load_dataset(dataset)?;
    let mut sources: HashMap<String, Result<(SourceFile, Arc<Environment>), String>> = HashMap::new();
    let (mut ok, mut bad, mut skipped) = (0usize, 0usize, 0usize);
    for r in &records {
        let src = sources.entry(r.path.clone()).or_insert_with(|| {
            let p = match root {
                Some(d) => d.join(&r.path),
                None => PathBuf::from(&r.path),
            };
            load_source(&p).map_err(|e| e.to_string())
        });
        for t in &r.theorems {
            let TheoremEntry::Theorem(t) = t else {
                skipped += 1;
                continue;
            };
            let name = t.name.clone().unwrap_or_else(|| "_".into());
            for (i, b) in t.by_blocks.iter().enumerate() {
                let TreeEntry::Tree(tree) = &b.tree else {
                    skipped += 1;
                    continue;
                };
                let result = match src {
                    Err(e) => Err(e.clone()),
                    Ok((file, env)) => match file.theorem(&name) {
                        None => Err(format!("no theorem named {name:?} in source")),
                        Some(thm) => start_of(env, thm, i).and_then(|s| {
                            verify_tree(&s, &tree.to_tree()).map(|_| ()).map_err(|e| e.to_string())
                        }),
                    },
                };
                match &result {
                    Ok(()) => ok += 1,
                    Err(_) => bad += 1,
                }
                match rc.format {
                    Format::Text => match &result {
                        Ok(()) => write_line(out, format!("{} {name} #{i}: ok", r.path))?,
                        Err(e) => write_line(out, format!("{} {name} #{i}: FAILED: {e}", r.path))?,
                    },
                    Format::Records => write_line(
                        out,
                        json!({"path": r.path, "theorem": name, "block": i, "verified": result.is_ok(), "error": result.err()}),
                    )?,
                }
            }
        }
    }
    if rc.format == Format::Text {
        write_line(out, format!("{ok} verified, {bad} failed, {skipped} error records skipped"))?;
    }
    if bad > 0 {
        return Err(CliError::Failed(format!("{bad} trees failed to verify")));
    }
    Ok(())
}

/// Root state of block `i`; theorems without `by` blocks start from their
/// statement.
fn start_of(env: &Arc<Environment>, thm: &TheoremDecl, i: usize) -> Result<ProofState, String> {
    if thm.by_blocks().is_empty() && i == 0 {
        return new_session(env.clone(), thm).map_err(|e| e.to_string());
    }
    block_root(env.clone(), thm, i).map_err(|e| e.to_string())
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Proven => "proven",
        Verdict::ProvenWithSorry => "proven with sorry",
        Verdict::Unproven => "unproven",
        Verdict::Failed => "failed",
    }
}

fn check(rc: &RunConfig, path: &Path, out: &mut impl Write) -> Result<(), CliError> {
    let (file, env) = load_source(path)?;
    let modes = match rc.kernel_mode {
        Some(m) => vec![m],
        None => vec![KernelMode::Incremental, KernelMode::WholePerStep, KernelMode::FinalOnly],
    };
    let mut rejected = 0;
    for thm in file.theorems() {
        let proofgrove::syntax::ProofBody::Tactic(block) = &thm.proof else { continue };
        let name = thm.name.clone().unwrap_or_else(|| "_".into());
        let start = new_session(env.clone(), thm).map_err(|e| CliError::Failed(format!("{name}: {e}")))?;
        let cfg = |m| TacticConfig { kernel_mode: m, ..TacticConfig::default() };
        let reference = run_script(&start, &block.tactics, &cfg(KernelMode::FinalOnly)).verdict;
        for &mode in &modes {
            let r = run_script(&start, &block.tactics, &cfg(mode));
            let accepted = matches!(r.verdict, Verdict::Proven | Verdict::ProvenWithSorry);
            let false_negative = !accepted && reference == Verdict::Proven;
            if !accepted {
                rejected += 1;
            }
            let reason = r
                .failure
                .as_ref()
                .map(|f| format!("step {}: {}", f.index, f.error))
                .or(r.final_error.as_ref().map(|e| e.to_string()));
            match rc.format {
                Format::Text => {
                    let mut line = format!(
                        "{name} {}: {} (checks {}, checked size {})",
                        mode.name(),
                        verdict_name(r.verdict),
                        r.stats.checks,
                        r.stats.checked_size
                    );
                    if false_negative {
                        line.push_str(" false negative");
                    }
                    if let Some(why) = &reason {
                        line.push_str(&format!(": {why}"));
                    }
                    write_line(out, line)?;
                }
                Format::Records => write_line(
                    out,
                    json!({
                        "theorem": name,
                        "kernel_mode": mode.name(),
                        "verdict": r.verdict,
                        "checks": r.stats.checks,
                        "checked_size": r.stats.checked_size,
                        "false_negative": false_negative,
                        "error": reason,
                    }),
                )?,
            }
        }
    }
    if rejected > 0 {
        return Err(CliError::Failed(format!("{rejected} runs rejected")));
    }
    Ok(())
}

fn stats(rc: &RunConfig, path: &Path, out: &mut impl Write) -> Result<(), CliError> {
    let s = corpus_stats(&load_dataset(path)?);
    match rc.format {
        Format::Text => write!(out, "{s}").map_err(|e| CliError::Io(e.to_string())),
        Format::Records => write_line(out, serde_json::to_string(&s).expect("stats serialize")),
    }
}
