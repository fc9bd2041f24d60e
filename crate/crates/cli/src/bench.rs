//! Seeded workloads timed per update.

use std::io::Write;
use std::time::Instant;

use clap::{Args, ValueEnum};
use necklace_core::generate::{divisible_colors, uniform_multicolor};
use necklace_core::Color;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::{Algo, Engine, Options};
use crate::input::{Command, NecklaceFile};
use crate::report::Reporter;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mix {
    /// Adjacent swaps.
    Swap,
    /// Relocations between uniform random positions.
    Reloc,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Algorithm families to run; repeat or separate with commas.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "swap")]
    algo: Vec<Algo>,
    /// Necklace lengths; ignored by the dense family, which uses m = nk.
    #[arg(long, value_delimiter = ',', default_value = "4096,16384")]
    m: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// Colors; only the dense family takes more than two.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, value_enum, default_value = "reloc")]
    mix: Mix,
    /// Updates per trial.
    #[arg(long, default_value_t = 200)]
    updates: usize,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    /// Moves grouped into one BATCH command; 1 issues them one at a time.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    sample_constant: f64,
    #[arg(long)]
    pub json: bool,
    /// Add per-bead times; makes the output run-dependent.
    #[arg(long)]
    timings: bool,
}

#[derive(Serialize)]
struct Row {
    kind: &'static str,
    algo: &'static str,
    m: usize,
    k: usize,
    n: usize,
    trials: usize,
    updates: usize,
    batch: usize,
    reruns: usize,
    exchanges: usize,
    max_cuts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p50_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p99_us: Option<f64>,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let at = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[at]
}

fn validate(args: &BenchArgs) -> Result<(), CliError> {
    if args.k == 0 || args.trials == 0 || args.batch == 0 {
        return Err(CliError::parse(0, "k, trials and batch must be positive"));
    }
    if args.n < 2 {
        return Err(CliError::parse(0, "n must be at least 2"));
    }
    if args.batch > 1 && args.mix == Mix::Swap {
        return Err(CliError::parse(0, "batches take relocations, not swaps"));
    }
    for &m in &args.m {
        if m < 2 || m % args.k != 0 {
            return Err(CliError::parse(
                0,
                format!("m={m} must be a multiple of k={}", args.k),
            ));
        }
    }
    Ok(())
}

fn symbols(n: usize) -> Vec<char> {
    if n == 2 {
        vec!['R', 'B']
    } else {
        (0..n).map(|i| char::from(b'A' + (i % 26) as u8)).collect()
    }
}

fn instance(args: &BenchArgs, algo: Algo, m: usize, rng: &mut ChaCha8Rng) -> NecklaceFile {
    let colors = if algo == Algo::Dense {
        uniform_multicolor(rng, args.n, args.k)
    } else {
        divisible_colors(rng, m, args.k)
    };
    let n = if algo == Algo::Dense { args.n } else { 2 };
    NecklaceFile {
        colors,
        palette: symbols(n),
        k: Some(args.k),
    }
}

/// Draws the next command. Batches move beads of a single color, picked
/// fresh for each batch, so the batch family rebalances them in one pass.
fn next_command(args: &BenchArgs, colors: &[Color], rng: &mut ChaCha8Rng) -> Command {
    let len = colors.len();
    let pick = |rng: &mut ChaCha8Rng| rng.gen_range(1..=len);
    match args.mix {
        Mix::Swap => Command::Swap(rng.gen_range(1..len)),
        Mix::Reloc if args.batch == 1 => Command::Reloc(pick(rng), pick(rng)),
        Mix::Reloc => {
            let mut colors = colors.to_vec();
            let c = colors[rng.gen_range(0..len)];
            let mut moves = Vec::with_capacity(args.batch);
            for _ in 0..args.batch {
                let of_c: Vec<usize> = (0..len).filter(|&i| colors[i] == c).collect();
                let from = of_c[rng.gen_range(0..of_c.len())];
                let to = rng.gen_range(0..len);
                let moved = colors.remove(from);
                colors.insert(to, moved);
                moves.push((from + 1, to + 1));
            }
            Command::Batch(moves)
        }
    }
}

pub fn bench<W: Write>(args: &BenchArgs, rep: &mut Reporter<W>) -> Result<(), CliError> {
    validate(args)?;
    for &algo in &args.algo {
        let lengths = if algo == Algo::Dense {
            vec![args.n * args.k]
        } else {
            args.m.clone()
        };
        for m in lengths {
            let opts = Options {
                algo,
                k: Some(args.k),
                epsilon: args.epsilon,
                seed: args.seed,
                budget: None,
                prune: true,
                sample_constant: args.sample_constant,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ (m as u64).rotate_left(32));
            let mut per_bead = Vec::with_capacity(args.trials * args.updates);
            let (mut reruns, mut exchanges, mut max_cuts) = (0, 0, 0);
            for _ in 0..args.trials {
                let mut engine = Engine::load(&instance(args, algo, m, &mut rng), &opts)?;
                for step in 1..=args.updates {
                    let cmd = next_command(args, &engine.necklace().colors(), &mut rng);
                    let start = Instant::now();
                    let fx = engine.apply(step, &cmd)?;
                    per_bead.push(start.elapsed().as_secs_f64() * 1e6 / args.batch as f64);
                    reruns += fx.reruns.unwrap_or(0);
                    exchanges += fx.exchanges.unwrap_or(0);
                    max_cuts = max_cuts.max(engine.cuts()?);
                }
            }
            per_bead.sort_by(f64::total_cmp);
            let mean = per_bead.iter().sum::<f64>() / per_bead.len().max(1) as f64;
            let timed = |v: f64| args.timings.then_some(v);
            let row = Row {
                kind: "bench",
                algo: algo.name(),
                m,
                k: args.k,
                n: if algo == Algo::Dense { args.n } else { 2 },
                trials: args.trials,
                updates: args.updates,
                batch: args.batch,
                reruns,
                exchanges,
                max_cuts,
                mean_us: timed(mean),
                p50_us: timed(percentile(&per_bead, 0.5)),
                p99_us: timed(percentile(&per_bead, 0.99)),
            };
            rep.emit(&row).map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
    }
    Ok(())
}
