//! Approximate two-color splitting from small uniform samples, with an
//! order-statistic index that stays cheap to update while the necklace changes.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cuts::CutSet;
use crate::error::{Error, Result};
use crate::necklace::{AgentId, Color, Necklace};

const NIL: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node {
    left: u32,
    right: u32,
    prio: u64,
    size: u32,
    reds: u32,
    color: Color,
}

/// Implicit treap over the bead sequence. Each node carries its subtree size
/// and red count, which gives rank and select per color in logarithmic time.
#[derive(Clone, Debug)]
pub struct OrderIndex {
    nodes: Vec<Node>,
    free: Vec<u32>,
    root: u32,
    prio_state: u64,
    touched: u64,
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Default for OrderIndex {
    fn default() -> Self {
        OrderIndex {
            nodes: Vec::new(),
            free: Vec::new(),
            root: NIL,
            prio_state: 0x5eed,
            touched: 0,
        }
    }
}

impl OrderIndex {
    pub fn from_colors(colors: &[Color]) -> Result<Self> {
        let mut idx = OrderIndex::default();
        for (pos, &c) in colors.iter().enumerate() {
            idx.insert(pos, c)?;
        }
        idx.touched = 0;
        Ok(idx)
    }

    pub fn from_necklace(necklace: &Necklace) -> Result<Self> {
        Self::from_colors(&necklace.colors())
    }

    pub fn len(&self) -> usize {
        self.size(self.root)
    }

    pub fn is_empty(&self) -> bool {
        self.root == NIL
    }

    pub fn count(&self, color: Color) -> usize {
        let reds = self.reds(self.root);
        if color == Color::RED {
            reds
        } else {
            self.len() - reds
        }
    }

    /// Nodes visited by updates since construction or the last reset.
    pub fn touched(&self) -> u64 {
        self.touched
    }

    pub fn reset_touched(&mut self) {
        self.touched = 0;
    }

    /// Height of the tree.
    pub fn depth(&self) -> usize {
        fn go(idx: &OrderIndex, t: u32) -> usize {
            if t == NIL {
                0
            } else {
                let n = &idx.nodes[t as usize];
                1 + go(idx, n.left).max(go(idx, n.right))
            }
        }
        go(self, self.root)
    }

    fn size(&self, t: u32) -> usize {
        if t == NIL {
            0
        } else {
            self.nodes[t as usize].size as usize
        }
    }

    fn reds(&self, t: u32) -> usize {
        if t == NIL {
            0
        } else {
            self.nodes[t as usize].reds as usize
        }
    }

    fn pull(&mut self, t: u32) {
        let (l, r) = (self.nodes[t as usize].left, self.nodes[t as usize].right);
        let own = (self.nodes[t as usize].color == Color::RED) as usize;
        let size = self.size(l) + self.size(r) + 1;
        let reds = self.reds(l) + self.reds(r) + own;
        let node = &mut self.nodes[t as usize];
        node.size = size as u32;
        node.reds = reds as u32;
    }

    /// Splits `t` into its first `at` elements and the rest.
    fn split(&mut self, t: u32, at: usize) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        self.touched += 1;
        let left = self.nodes[t as usize].left;
        if at <= self.size(left) {
            let (a, b) = self.split(left, at);
            self.nodes[t as usize].left = b;
            self.pull(t);
            (a, t)
        } else {
            let right = self.nodes[t as usize].right;
            let (a, b) = self.split(right, at - self.size(left) - 1);
            self.nodes[t as usize].right = a;
            self.pull(t);
            (t, b)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        self.touched += 1;
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let r = self.nodes[a as usize].right;
            let m = self.merge(r, b);
            self.nodes[a as usize].right = m;
            self.pull(a);
            a
        } else {
            let l = self.nodes[b as usize].left;
            let m = self.merge(a, l);
            self.nodes[b as usize].left = m;
            self.pull(b);
            b
        }
    }

    pub fn insert(&mut self, pos: usize, color: Color) -> Result<()> {
        if color.index() > 1 {
            return Err(Error::NotTwoColors(color.index() + 1));
        }
        let len = self.len();
        if pos > len {
            return Err(Error::OutOfRange { pos, len });
        }
        let node = Node {
            left: NIL,
            right: NIL,
            prio: splitmix(&mut self.prio_state),
            size: 1,
            reds: (color == Color::RED) as u32,
            color,
        };
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        };
        let (a, b) = self.split(self.root, pos);
        let a = self.merge(a, id);
        self.root = self.merge(a, b);
        Ok(())
    }

    pub fn delete(&mut self, pos: usize) -> Result<Color> {
        let len = self.len();
        if pos >= len {
            return Err(Error::OutOfRange { pos, len });
        }
        let (a, b) = self.split(self.root, pos);
        let (mid, c) = self.split(b, 1);
        self.root = self.merge(a, c);
        self.free.push(mid);
        Ok(self.nodes[mid as usize].color)
    }

    /// Moves the element at `from` so that it ends up at `to`.
    pub fn relocate(&mut self, from: usize, to: usize) -> Result<()> {
        let len = self.len();
        if to >= len {
            return Err(Error::OutOfRange { pos: to, len });
        }
        let c = self.delete(from)?;
        self.insert(to, c)
    }

    pub fn apply(&mut self, update: Update) -> Result<()> {
        match update {
            Update::Insert { pos, color } => self.insert(pos, color),
            Update::Delete { pos } => self.delete(pos).map(|_| ()),
            Update::Relocate { from, to } => self.relocate(from, to),
        }
    }

    pub fn color_at(&self, pos: usize) -> Result<Color> {
        let len = self.len();
        if pos >= len {
            return Err(Error::OutOfRange { pos, len });
        }
        let mut t = self.root;
        let mut at = pos;
        loop {
            let n = &self.nodes[t as usize];
            let ls = self.size(n.left);
            if at < ls {
                t = n.left;
            } else if at == ls {
                return Ok(n.color);
            } else {
                at -= ls + 1;
                t = n.right;
            }
        }
    }

    /// Beads of `color` strictly before position `pos`.
    pub fn rank(&self, color: Color, pos: usize) -> usize {
        let mut t = self.root;
        let mut at = pos.min(self.len());
        let mut reds = 0;
        let mut seen = 0;
        while t != NIL && at > 0 {
            let n = &self.nodes[t as usize];
            let ls = self.size(n.left);
            if at <= ls {
                t = n.left;
            } else {
                reds += self.reds(n.left) + (n.color == Color::RED) as usize;
                seen += ls + 1;
                at -= ls + 1;
                t = n.right;
            }
        }
        if color == Color::RED {
            reds
        } else {
            seen - reds
        }
    }

    /// Position of the `r`-th (0-based) bead of `color`.
    pub fn select(&self, color: Color, r: usize) -> Result<usize> {
        let total = self.count(color);
        if r >= total {
            return Err(Error::OutOfRange { pos: r, len: total });
        }
        let of = |idx: &OrderIndex, t: u32| {
            if color == Color::RED {
                idx.reds(t)
            } else {
                idx.size(t) - idx.reds(t)
            }
        };
        let mut t = self.root;
        let mut want = r;
        let mut pos = 0;
        loop {
            let n = &self.nodes[t as usize];
            let in_left = of(self, n.left);
            if want < in_left {
                t = n.left;
                continue;
            }
            want -= in_left;
            pos += self.size(n.left);
            if n.color == color {
                if want == 0 {
                    return Ok(pos);
                }
                want -= 1;
            }
            pos += 1;
            t = n.right;
        }
    }

    /// In-order traversal.
    pub fn colors(&self) -> Vec<Color> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = Vec::new();
        let mut t = self.root;
        while t != NIL || !stack.is_empty() {
            while t != NIL {
                stack.push(t);
                t = self.nodes[t as usize].left;
            }
            let u = stack.pop().expect("non-empty");
            out.push(self.nodes[u as usize].color);
            t = self.nodes[u as usize].right;
        }
        out
    }

    /// Size and per-color counts agree with the necklace.
    pub fn in_sync(&self, necklace: &Necklace) -> bool {
        necklace.n() <= 2
            && self.len() == necklace.len()
            && self.count(Color::RED) == necklace.color_count(Color::RED)
    }
}

/// One elementary change to the bead sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Update {
    Insert { pos: usize, color: Color },
    Delete { pos: usize },
    Relocate { from: usize, to: usize },
}

/// Disjoint, sorted, inclusive position intervals already handed out.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExclusionSet {
    intervals: Vec<(usize, usize)>,
}

impl ExclusionSet {
    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    /// Adds `[lo, hi]`, merging with anything it overlaps or touches.
    pub fn insert(&mut self, lo: usize, hi: usize) {
        let mut lo = lo;
        let mut hi = hi;
        self.intervals.retain(|&(a, b)| {
            if b + 1 < lo || hi + 1 < a {
                true
            } else {
                lo = lo.min(a);
                hi = hi.max(b);
                false
            }
        });
        let at = self.intervals.partition_point(|&(a, _)| a < lo);
        self.intervals.insert(at, (lo, hi));
    }

    pub fn contains(&self, pos: usize) -> bool {
        let at = self.intervals.partition_point(|&(a, _)| a <= pos);
        at > 0 && self.intervals[at - 1].1 >= pos
    }

    /// Color-rank ranges `[lo, hi)` covered by the intervals.
    fn rank_ranges(&self, index: &OrderIndex, color: Color) -> Vec<(usize, usize)> {
        self.intervals
            .iter()
            .map(|&(a, b)| (index.rank(color, a), index.rank(color, b + 1)))
            .filter(|(lo, hi)| hi > lo)
            .collect()
    }

    pub fn excluded_count(&self, index: &OrderIndex, color: Color) -> usize {
        self.rank_ranges(index, color)
            .iter()
            .map(|(lo, hi)| hi - lo)
            .sum()
    }
}

/// `ceil(c (k-j+1)^2 4^k eps^-2 ln(2km))`, before capping at the population.
pub fn epsilon_sample_size(k: usize, j: usize, epsilon: f64, m: usize, c: f64) -> usize {
    let rest = (k + 1 - j) as f64;
    let raw =
        c * rest * rest * 4f64.powi(k as i32) / (epsilon * epsilon) * ((2 * k * m) as f64).ln();
    raw.ceil().max(1.0) as usize
}

/// Uniform sample without replacement of `count` positions of `color` lying
/// outside `excluded`, returned in increasing order.
pub fn sample_complement(
    index: &OrderIndex,
    color: Color,
    excluded: &ExclusionSet,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let ranges = excluded.rank_ranges(index, color);
    let gone: usize = ranges.iter().map(|(lo, hi)| hi - lo).sum();
    let available = index.count(color) - gone;
    if count > available {
        return Err(Error::PopulationTooSmall {
            requested: count,
            available,
        });
    }
    let ranks: Vec<usize> = if count == available {
        (0..available).collect()
    } else {
        sample(rng, available, count).into_iter().collect()
    };
    let mut out = Vec::with_capacity(count);
    for q in ranks {
        let mut r = q;
        for &(lo, hi) in &ranges {
            if r >= lo {
                r += hi - lo;
            } else {
                break;
            }
        }
        out.push(index.select(color, r)?);
    }
    out.sort_unstable();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxConfig {
    epsilon: f64,
    sample_constant: f64,
    seed: u64,
}

impl ApproxConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(ApproxConfig {
            epsilon,
            sample_constant: 1.0,
            seed: 0,
        })
    }

    pub fn with_sample_constant(mut self, c: f64) -> Self {
        self.sample_constant = c;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sample_constant(&self) -> f64 {
        self.sample_constant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// The spans chosen for agents `A1 .. A(k-1)`; the last agent takes what is
/// left. A bead belongs to the first agent whose span covers it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxPlan {
    len: usize,
    spans: Vec<Option<(usize, usize)>>,
    /// Sample sizes drawn per iteration, red then blue.
    pub samples: Vec<(usize, usize)>,
}

impl ApproxPlan {
    pub fn k(&self) -> usize {
        self.spans.len() + 1
    }

    pub fn spans(&self) -> &[Option<(usize, usize)>] {
        &self.spans
    }

    pub fn owner_at(&self, pos: usize) -> AgentId {
        let j = self
            .spans
            .iter()
            .position(|s| matches!(s, Some((a, b)) if *a <= pos && pos <= *b))
            .unwrap_or(self.spans.len());
        AgentId(j as u32)
    }

    pub fn owners(&self) -> Vec<AgentId> {
        let mut out = vec![AgentId(self.spans.len() as u32); self.len];
        for (j, s) in self.spans.iter().enumerate().rev() {
            if let Some((a, b)) = *s {
                out[a..=b].fill(AgentId(j as u32));
            }
        }
        out
    }

    /// Owner changes, found by probing only the span endpoints.
    pub fn cuts(&self) -> CutSet {
        let mut bounds: Vec<usize> = Vec::new();
        for &(a, b) in self.spans.iter().flatten() {
            if a > 0 {
                bounds.push(a - 1);
            }
            if b + 1 < self.len {
                bounds.push(b);
            }
        }
        bounds.sort_unstable();
        bounds.dedup();
        let mut cuts = CutSet::default();
        for j in bounds {
            let (x, y) = (self.owner_at(j), self.owner_at(j + 1));
            if x != y {
                cuts.push(j, x, y);
            }
        }
        cuts
    }
}

/// Runs the sampled splitter against `index`.
pub fn approx_plan(index: &OrderIndex, k: usize, config: &ApproxConfig) -> Result<ApproxPlan> {
    let m = index.len();
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut excluded = ExclusionSet::default();
    let mut spans = Vec::with_capacity(k.saturating_sub(1));
    let mut samples = Vec::with_capacity(k.saturating_sub(1));
    for j in 1..k {
        let rest = k + 1 - j;
        let want = epsilon_sample_size(k, j, config.epsilon, m, config.sample_constant);
        let mut drawn = [Vec::new(), Vec::new()];
        for (c, slot) in drawn.iter_mut().enumerate() {
            let color = Color(c as u16);
            let pop = index.count(color) - excluded.excluded_count(index, color);
            *slot = sample_complement(index, color, &excluded, want.min(pop), &mut rng)?;
        }
        samples.push((drawn[0].len(), drawn[1].len()));
        let span = select_window(&drawn[0], &drawn[1], rest)?;
        if let Some((a, b)) = span {
            excluded.insert(a, b);
        }
        spans.push(span);
    }
    Ok(ApproxPlan {
        len: m,
        spans,
        samples,
    })
}

/// One selection step of the exact splitter on the merged sample: the
/// leftmost run of `t_r + t_b` consecutive samples holding exactly `t_r`
/// reds, where `t_c` is the floor of the color's sample size over `rest`.
fn select_window(reds: &[usize], blues: &[usize], rest: usize) -> Result<Option<(usize, usize)>> {
    let mut merged: Vec<(usize, bool)> = reds
        .iter()
        .map(|&p| (p, true))
        .chain(blues.iter().map(|&p| (p, false)))
        .collect();
    merged.sort_unstable();
    let t_red = reds.len() / rest;
    let width = t_red + blues.len() / rest;
    if width == 0 {
        return Ok(None);
    }
    let mut in_window = merged[..width].iter().filter(|e| e.1).count();
    for start in 0..=merged.len() - width {
        if start > 0 {
            in_window -= merged[start - 1].1 as usize;
            in_window += merged[start + width - 1].1 as usize;
        }
        if in_window == t_red {
            return Ok(Some((merged[start].0, merged[start + width - 1].0)));
        }
    }
    Err(Error::Invariant("no balanced sample window".into()))
}

/// Splits a two-color necklace approximately and writes the owners into it.
pub fn approx_static(necklace: &mut Necklace, config: &ApproxConfig) -> Result<ApproxPlan> {
    if necklace.n() > 2 {
        return Err(Error::NotTwoColors(necklace.n()));
    }
    let index = OrderIndex::from_necklace(necklace)?;
    let plan = approx_plan(&index, necklace.k(), config)?;
    necklace.assign_owners(&plan.owners())?;
    Ok(plan)
}

/// Cuts for the current necklace from the maintained index, without a scan.
pub fn approx_cuts(
    index: &OrderIndex,
    necklace: &Necklace,
    config: &ApproxConfig,
) -> Result<CutSet> {
    if !index.in_sync(necklace) {
        return Err(Error::IndexDesync);
    }
    Ok(approx_plan(index, necklace.k(), config)?.cuts())
}

/// A necklace together with its maintained index.
#[derive(Clone, Debug)]
pub struct ApproxNecklace {
    necklace: Necklace,
    index: OrderIndex,
    config: ApproxConfig,
}

impl ApproxNecklace {
    pub fn new(necklace: Necklace, config: ApproxConfig) -> Result<Self> {
        if necklace.n() > 2 {
            return Err(Error::NotTwoColors(necklace.n()));
        }
        let index = OrderIndex::from_necklace(&necklace)?;
        Ok(ApproxNecklace {
            necklace,
            index,
            config,
        })
    }

    pub fn necklace(&self) -> &Necklace {
        &self.necklace
    }

    pub fn index(&self) -> &OrderIndex {
        &self.index
    }

    pub fn index_mut(&mut self) -> &mut OrderIndex {
        &mut self.index
    }

    pub fn config(&self) -> &ApproxConfig {
        &self.config
    }

    /// Applies an update to the necklace and the index. New beads start
    /// unowned; owners are only written by `split`.
    pub fn apply(&mut self, update: Update) -> Result<()> {
        match update {
            Update::Insert { pos, color } => {
                if color.index() > 1 {
                    return Err(Error::NotTwoColors(color.index() + 1));
                }
                self.necklace.insert_at(pos, color, None)?;
            }
            Update::Delete { pos } => {
                let b = self.necklace.bead_at(pos)?;
                self.necklace.remove(b);
            }
            Update::Relocate { from, to } => {
                let b = self.necklace.bead_at(from)?;
                self.necklace.move_to(b, to)?;
            }
        }
        self.index.apply(update)
    }

    pub fn cuts(&self) -> Result<CutSet> {
        approx_cuts(&self.index, &self.necklace, &self.config)
    }

    /// Plans from the index and writes owners into the necklace.
    pub fn split(&mut self) -> Result<ApproxPlan> {
        if !self.index.in_sync(&self.necklace) {
            return Err(Error::IndexDesync);
        }
        let plan = approx_plan(&self.index, self.necklace.k(), &self.config)?;
        self.necklace.assign_owners(&plan.owners())?;
        Ok(plan)
    }
}
