//! Algorithm families behind a common command interface.

use clap::ValueEnum;
use necklace_core::batch::{BatchOptions, MoveBatch};
use necklace_core::{
    derive_cuts, is_peelable, verify_fair, AgentId, ApproxConfig, ApproxNecklace, Color,
    DenseNecklace, DynamicNecklace, Error, Mode, Necklace, Update,
};

use crate::input::{Command, NecklaceFile};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Offline,
    Swap,
    Path,
    Colorpath,
    Fence,
    Batch,
    Dense,
    Approx,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Offline => "offline",
            Algo::Swap => "swap",
            Algo::Path => "path",
            Algo::Colorpath => "colorpath",
            Algo::Fence => "fence",
            Algo::Batch => "batch",
            Algo::Dense => "dense",
            Algo::Approx => "approx",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub algo: Algo,
    pub k: Option<usize>,
    pub epsilon: f64,
    pub seed: u64,
    pub budget: Option<usize>,
    pub prune: bool,
    pub sample_constant: f64,
}

/// What a command did, beyond the resulting state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Effect {
    pub exchanges: Option<usize>,
    pub reruns: Option<usize>,
    pub rebuilt: Option<bool>,
}

impl Effect {
    fn add_reruns(&mut self, r: usize) {
        *self.reruns.get_or_insert(0) += r;
    }
}

enum State {
    Offline(Necklace),
    Dynamic(DynamicNecklace),
    Dense(DenseNecklace),
    Approx(ApproxNecklace),
}

pub struct Engine {
    algo: Algo,
    palette: Vec<char>,
    prune: bool,
    state: State,
}

/// Maps a core error raised at load or by a command.
pub fn lift(step: usize, e: Error) -> CliError {
    match e {
        Error::NotTwoColors(_) | Error::NotDense(_) => CliError::Mismatch(e.to_string()),
        Error::Invariant(msg) => CliError::Invariant { step, msg },
        other => CliError::Module {
            step,
            source: other,
        },
    }
}

/// Converts a 1-based position.
fn zero(p: usize) -> usize {
    p - 1
}

/// Cuts a move sequence into maximal runs that each move beads of one color,
/// tracking colors through the earlier moves.
fn color_runs(colors: &[Color], moves: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut colors = colors.to_vec();
    let mut runs: Vec<(Color, Vec<(usize, usize)>)> = Vec::new();
    for &(a, b) in moves {
        let c = colors.remove(a);
        colors.insert(b, c);
        match runs.last_mut() {
            Some((rc, run)) if *rc == c => run.push((a, b)),
            _ => runs.push((c, vec![(a, b)])),
        }
    }
    runs.into_iter().map(|(_, run)| run).collect()
}

impl Engine {
    pub fn load(file: &NecklaceFile, opts: &Options) -> Result<Self, CliError> {
        let k = opts
            .k
            .or(file.k)
            .ok_or_else(|| CliError::parse(0, "k missing: pass --k or a k= header"))?;
        let n = file.palette.len();
        let mode = if opts.algo == Algo::Approx {
            Mode::Approx
        } else {
            Mode::Exact
        };
        let necklace = Necklace::with_colors(&file.colors, n, k, mode).map_err(|e| match e {
            Error::Divisibility { .. } => CliError::Mismatch(e.to_string()),
            other => lift(0, other),
        })?;
        let two = n <= 2;
        let state = match opts.algo {
            Algo::Offline | Algo::Swap | Algo::Path | Algo::Colorpath | Algo::Batch if !two => {
                return Err(CliError::Mismatch(format!(
                    "{} needs at most two colors, necklace has {n}",
                    opts.algo.name()
                )))
            }
            Algo::Offline => {
                let mut nk = necklace;
                necklace_core::offline::offline_split(&mut nk).map_err(|e| lift(0, e))?;
                State::Offline(nk)
            }
            Algo::Swap | Algo::Path | Algo::Colorpath | Algo::Batch | Algo::Fence => {
                let mut d = DynamicNecklace::split(necklace).map_err(|e| lift(0, e))?;
                if let Some(b) = opts.budget {
                    d = d.with_budget(b);
                }
                State::Dynamic(d)
            }
            Algo::Dense => {
                State::Dense(necklace_core::dense_offline_split(&necklace).map_err(|e| lift(0, e))?)
            }
            Algo::Approx => {
                let cfg = ApproxConfig::new(opts.epsilon)
                    .map_err(|e| CliError::parse(0, e))?
                    .with_sample_constant(opts.sample_constant)
                    .with_seed(opts.seed);
                let mut a = ApproxNecklace::new(necklace, cfg).map_err(|e| lift(0, e))?;
                a.split().map_err(|e| lift(0, e))?;
                State::Approx(a)
            }
        };
        Ok(Engine {
            algo: opts.algo,
            palette: file.palette.clone(),
            prune: opts.prune,
            state,
        })
    }

    pub fn necklace(&self) -> &Necklace {
        match &self.state {
            State::Offline(nk) => nk,
            State::Dynamic(d) => d.necklace(),
            State::Dense(d) => d.necklace(),
            State::Approx(a) => a.necklace(),
        }
    }

    pub fn palette(&self) -> &[char] {
        &self.palette
    }

    /// Cut count of the current allocation. The dense family reports its
    /// explicit cuts, redundant ones included.
    pub fn cuts(&self) -> Result<usize, CliError> {
        match &self.state {
            State::Dense(d) => Ok(d.cut_count()),
            _ => Ok(derive_cuts(self.necklace()).map_err(|e| lift(0, e))?.len()),
        }
    }

    /// Exact fairness, or the epsilon band for the approximate family.
    pub fn is_fair(&self) -> bool {
        let nk = self.necklace();
        let report = verify_fair(nk);
        match &self.state {
            State::Approx(a) => {
                let eps = a.config().epsilon();
                let k = nk.k() as f64;
                nk.agents().all(|ag| {
                    (0..nk.n()).all(|c| {
                        let c = Color(c as u16);
                        let share = nk.color_count(c) as f64 / k;
                        let held = report.held(ag, c) as f64;
                        (held - share).abs() <= eps * share
                    })
                })
            }
            _ => report.is_fair(),
        }
    }

    /// Runs every applicable check; returns the failures.
    pub fn verify(&self) -> Result<Vec<String>, CliError> {
        let nk = self.necklace();
        let k = nk.k();
        let mut fails = Vec::new();
        if !self.is_fair() {
            fails.push("allocation is not fair".to_string());
        }
        let cuts = self.cuts()?;
        let two = nk.n() <= 2;
        match &self.state {
            State::Dense(d) => {
                if let Err(e) = d.validate() {
                    fails.push(e.to_string());
                }
            }
            State::Dynamic(d) if self.algo == Algo::Fence => {
                let limit = 2 * (k - 1) + d.policy().used();
                if two && cuts > limit {
                    fails.push(format!("{cuts} cuts exceed fence limit {limit}"));
                }
            }
            _ => {
                if two && cuts > 2 * (k - 1) {
                    fails.push(format!("{cuts} cuts exceed {}", 2 * (k - 1)));
                }
                if self.algo != Algo::Approx && two && !is_peelable(nk).map_err(|e| lift(0, e))? {
                    fails.push("allocation is not peelable".to_string());
                }
            }
        }
        Ok(fails)
    }

    /// Owner of every bead, 1-based.
    pub fn owners(&self) -> Vec<u32> {
        self.necklace()
            .owners()
            .iter()
            .map(|o| o.map_or(0, |a: AgentId| a.0 + 1))
            .collect()
    }

    pub fn symbols(&self) -> String {
        let nk = self.necklace();
        nk.iter()
            .map(|b| self.palette[nk.color(b).index()])
            .collect()
    }

    fn check_pos(&self, step: usize, positions: &[usize], extra: usize) -> Result<(), CliError> {
        let len = self.necklace().len() + extra;
        match positions.iter().find(|&&p| p > len) {
            Some(&p) => Err(lift(step, Error::OutOfRange { pos: p, len })),
            None => Ok(()),
        }
    }

    /// Executes one command. `step` is its 1-based index for error reports.
    pub fn apply(&mut self, step: usize, cmd: &Command) -> Result<Effect, CliError> {
        let lift = |e| lift(step, e);
        match cmd {
            Command::Cuts | Command::Verify => return Ok(Effect::default()),
            Command::Swap(j) => self.check_pos(step, &[j + 1], 0)?,
            Command::Reloc(a, b) => self.check_pos(step, &[*a, *b], 0)?,
            Command::Batch(moves) => {
                let flat: Vec<usize> = moves.iter().flat_map(|&(a, b)| [a, b]).collect();
                self.check_pos(step, &flat, 0)?;
            }
            Command::Insert(..) | Command::Delete(_) => {}
        }
        let insert_color = match cmd {
            Command::Insert(sym, _) => Some(
                self.palette
                    .iter()
                    .position(|p| p == sym)
                    .map(|i| Color(i as u16))
                    .ok_or_else(|| CliError::parse(step, format!("unknown color {sym:?}")))?,
            ),
            _ => None,
        };
        let prune = self.prune;
        let algo = self.algo;
        let mismatch = || {
            CliError::Mismatch(format!(
                "{} is not supported by {}",
                cmd.name(),
                algo.name()
            ))
        };
        let mut fx = Effect::default();
        match &mut self.state {
            State::Offline(nk) => {
                match cmd {
                    Command::Swap(j) => {
                        let a = nk.bead_at(zero(*j)).map_err(lift)?;
                        let b = nk.bead_at(*j).map_err(lift)?;
                        nk.swap_positions(a, b);
                    }
                    Command::Reloc(a, b) => {
                        let x = nk.bead_at(zero(*a)).map_err(lift)?;
                        nk.move_to(x, zero(*b)).map_err(lift)?;
                    }
                    Command::Batch(moves) => {
                        for &(a, b) in moves {
                            let x = nk.bead_at(zero(a)).map_err(lift)?;
                            nk.move_to(x, zero(b)).map_err(lift)?;
                        }
                    }
                    Command::Insert(_, positions) => {
                        let c = insert_color.expect("insert has a color");
                        for &p in positions {
                            nk.insert_at(zero(p), c, None).map_err(lift)?;
                        }
                    }
                    Command::Delete(positions) => {
                        for &p in positions {
                            let b = nk.bead_at(zero(p)).map_err(lift)?;
                            nk.remove(b);
                        }
                    }
                    Command::Cuts | Command::Verify => unreachable!(),
                }
                necklace_core::offline::offline_split(nk).map_err(lift)?;
                fx.reruns = Some(1);
            }
            State::Dynamic(d) => {
                let relocate = |d: &mut DynamicNecklace, fx: &mut Effect, a: usize, b: usize| {
                    let stats = match algo {
                        Algo::Swap => {
                            let mut reruns = 0;
                            let steps: Vec<usize> = if a < b {
                                (a..b).collect()
                            } else {
                                (b..a).rev().collect()
                            };
                            for j in steps {
                                reruns += d.swap(j)?.reruns;
                            }
                            fx.add_reruns(reruns);
                            return Ok(());
                        }
                        Algo::Path => d.relocate_path(a, b)?,
                        Algo::Colorpath => d.relocate_colorpath(a, b)?,
                        Algo::Fence => {
                            let s = d.relocate_fence(a, b)?;
                            fx.rebuilt = Some(fx.rebuilt.unwrap_or(false) || s.rebuilt);
                            s
                        }
                        _ => unreachable!("batch handled separately"),
                    };
                    fx.add_reruns(stats.reruns);
                    Ok::<(), Error>(())
                };
                let options = BatchOptions { prune };
                match (algo, cmd) {
                    (Algo::Batch, Command::Swap(j)) => {
                        let s = d.batch_relocate(&MoveBatch::new(vec![(zero(*j), *j)]), options);
                        fx.reruns = Some(s.map_err(lift)?.reruns);
                    }
                    (Algo::Batch, Command::Reloc(a, b)) => {
                        let batch = MoveBatch::new(vec![(zero(*a), zero(*b))]);
                        fx.reruns = Some(d.batch_relocate(&batch, options).map_err(lift)?.reruns);
                    }
                    (Algo::Batch, Command::Batch(moves)) => {
                        let moves: Vec<(usize, usize)> =
                            moves.iter().map(|&(a, b)| (zero(a), zero(b))).collect();
                        let mut reruns = 0;
                        for run in color_runs(&d.necklace().colors(), &moves) {
                            reruns += d
                                .batch_relocate(&MoveBatch::new(run), options)
                                .map_err(lift)?
                                .reruns;
                        }
                        fx.reruns = Some(reruns);
                    }
                    (Algo::Batch, Command::Insert(_, positions)) => {
                        let c = insert_color.expect("insert has a color");
                        let pos: Vec<usize> = positions.iter().map(|&p| zero(p)).collect();
                        fx.reruns = Some(d.insert_batch(c, &pos, options).map_err(lift)?.reruns);
                    }
                    (Algo::Batch, Command::Delete(positions)) => {
                        let pos: Vec<usize> = positions.iter().map(|&p| zero(p)).collect();
                        fx.reruns = Some(d.delete_batch(&pos, options).map_err(lift)?.reruns);
                    }
                    (_, Command::Swap(j)) if algo == Algo::Swap => {
                        fx.reruns = Some(d.swap(zero(*j)).map_err(lift)?.reruns);
                    }
                    (_, Command::Swap(j)) => relocate(d, &mut fx, zero(*j), *j).map_err(lift)?,
                    (_, Command::Reloc(a, b)) => {
                        relocate(d, &mut fx, zero(*a), zero(*b)).map_err(lift)?
                    }
                    (_, Command::Batch(moves)) => {
                        for &(a, b) in moves {
                            relocate(d, &mut fx, zero(a), zero(b)).map_err(lift)?;
                        }
                    }
                    _ => return Err(mismatch()),
                }
            }
            State::Dense(d) => {
                let mut total = 0;
                match cmd {
                    Command::Swap(j) => total += d.swap(zero(*j)).map_err(lift)?.exchanges,
                    Command::Reloc(a, b) => {
                        total += d.jump(zero(*a), zero(*b)).map_err(lift)?.exchanges
                    }
                    Command::Batch(moves) => {
                        for &(a, b) in moves {
                            total += d.jump(zero(a), zero(b)).map_err(lift)?.exchanges;
                        }
                    }
                    _ => return Err(mismatch()),
                }
                fx.exchanges = Some(total);
            }
            State::Approx(a) => {
                let updates: Vec<Update> = match cmd {
                    Command::Swap(j) => vec![Update::Relocate {
                        from: zero(*j),
                        to: *j,
                    }],
                    Command::Reloc(x, y) => vec![Update::Relocate {
                        from: zero(*x),
                        to: zero(*y),
                    }],
                    Command::Batch(moves) => moves
                        .iter()
                        .map(|&(x, y)| Update::Relocate {
                            from: zero(x),
                            to: zero(y),
                        })
                        .collect(),
                    Command::Insert(_, positions) => {
                        let color = insert_color.expect("insert has a color");
                        positions
                            .iter()
                            .map(|&p| Update::Insert {
                                pos: zero(p),
                                color,
                            })
                            .collect()
                    }
                    Command::Delete(positions) => positions
                        .iter()
                        .map(|&p| Update::Delete { pos: zero(p) })
                        .collect(),
                    Command::Cuts | Command::Verify => unreachable!(),
                };
                for u in updates {
                    a.apply(u).map_err(lift)?;
                }
                a.split().map_err(lift)?;
            }
        }
        Ok(fx)
    }
}
