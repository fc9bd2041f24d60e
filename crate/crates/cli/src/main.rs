//! `necklace`: replay update scripts against a splitting algorithm, or
//! benchmark the algorithm families on generated workloads.

mod bench;
mod engine;
mod input;
mod report;

use std::fmt::Display;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use necklace_core::Error;

use crate::engine::{Algo, Engine, Options};
use crate::input::{parse_script, Command, NecklaceFile};
use crate::report::{Record, Reporter};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", at_line(*line, msg))]
    Parse { line: usize, msg: String },
    #[error("algorithm mismatch: {0}")]
    Mismatch(String),
    #[error("step {step}: invariant violated: {msg}")]
    Invariant { step: usize, msg: String },
    #[error("step {step}: {source}")]
    Module {
        step: usize,
        #[source]
        source: Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

fn at_line(line: usize, msg: &str) -> String {
    if line == 0 {
        msg.to_string()
    } else {
        format!("line {line}: {msg}")
    }
}

impl CliError {
    pub fn parse(line: usize, msg: impl Display) -> Self {
        CliError::Parse {
            line,
            msg: msg.to_string(),
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Io { .. } => 2,
            CliError::Invariant { .. } => 3,
            CliError::Mismatch(_) => 4,
            CliError::Module { .. } => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "necklace",
    version,
    about = "Fair necklace splitting under updates"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Split a necklace and replay a script of updates against it.
    Run(RunArgs),
    /// Time an algorithm family on seeded random workloads.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Necklace file: optional `k=<int>` line, then one symbol per bead.
    necklace: PathBuf,
    /// Script file; omitted means an empty script.
    script: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "offline")]
    algo: Algo,
    /// Number of agents; overrides the file header.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check every invariant after each command and stop on a violation.
    #[arg(long)]
    verify: bool,
    /// Emit JSON lines instead of key=value records.
    #[arg(long)]
    json: bool,
    /// Extra cuts tolerated before a fence rebuild.
    #[arg(long)]
    budget: Option<usize>,
    /// Keep every active node in batch rebalancing.
    #[arg(long)]
    no_prune: bool,
    /// Constant in the approximate sample size.
    #[arg(long, default_value_t = 1.0)]
    sample_constant: f64,
    /// Add wall time per command; makes the output run-dependent.
    #[arg(long)]
    timings: bool,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn join_owners(owners: &[u32]) -> String {
    owners
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn run<W: Write>(args: &RunArgs, rep: &mut Reporter<W>) -> Result<(), CliError> {
    let out = |e: io::Error| CliError::Io {
        path: "<stdout>".into(),
        source: e,
    };
    let file = NecklaceFile::parse(&read(&args.necklace)?)?;
    let script = match &args.script {
        Some(p) => parse_script(&read(p)?)?,
        None => Vec::new(),
    };
    let opts = Options {
        algo: args.algo,
        k: args.k,
        epsilon: args.epsilon,
        seed: args.seed,
        budget: args.budget,
        prune: !args.no_prune,
        sample_constant: args.sample_constant,
    };
    let mut engine = Engine::load(&file, &opts)?;
    let nk = engine.necklace();
    rep.emit(&Record {
        kind: "header",
        algo: Some(args.algo.name()),
        m: Some(nk.len()),
        k: Some(nk.k()),
        n: Some(engine.palette().len()),
        cuts: Some(engine.cuts()?),
        fair: Some(engine.is_fair()),
        ..Default::default()
    })
    .map_err(out)?;

    for (i, cmd) in script.iter().enumerate() {
        let step = i + 1;
        let start = Instant::now();
        let fx = engine.apply(step, cmd)?;
        let micros = start.elapsed().as_micros();
        let mut rec = Record {
            kind: "step",
            step: Some(step),
            command: Some(cmd.to_string()),
            cuts: Some(engine.cuts()?),
            fair: Some(engine.is_fair()),
            exchanges: fx.exchanges,
            reruns: fx.reruns,
            rebuilt: fx.rebuilt,
            micros: args.timings.then_some(micros),
            ..Default::default()
        };
        let checked = args.verify || *cmd == Command::Verify;
        if checked {
            rec.failures = engine.verify()?;
            rec.verify = Some(if rec.failures.is_empty() {
                "pass"
            } else {
                "fail"
            });
        }
        rep.emit(&rec).map_err(out)?;
        if checked && !rec.failures.is_empty() {
            return Err(CliError::Invariant {
                step,
                msg: rec.failures.join("; "),
            });
        }
    }

    rep.emit(&Record {
        kind: "final",
        beads: Some(engine.symbols()),
        owners: Some(join_owners(&engine.owners())),
        ..Default::default()
    })
    .map_err(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let result = match &cli.command {
        Cmd::Run(args) => {
            let mut rep = Reporter::new(BufWriter::new(stdout.lock()), args.json);
            let r = run(args, &mut rep);
            if let Err(e) = &r {
                let _ = rep.emit(&Record {
                    kind: "error",
                    code: Some(e.code() as i32),
                    message: Some(e.to_string()),
                    ..Default::default()
                });
            }
            let _ = rep.flush();
            r
        }
        Cmd::Bench(args) => {
            let mut rep = Reporter::new(BufWriter::new(stdout.lock()), args.json);
            let r = bench::bench(args, &mut rep);
            let _ = rep.flush();
            r
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("necklace: {e}");
            ExitCode::from(e.code())
        }
    }
}
