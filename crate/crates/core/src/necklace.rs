//! Arena-backed doubly linked bead sequence.
//!
//! Beads live in a slab and are addressed by stable [`BeadId`] handles. Besides
//! the `prev`/`next` links every bead carries its owner, a pointer to the next
//! bead of the same owner, and an order label used to compare positions without
//! walking the list. Integer positions are computed on demand.
//!
//! The agent-pair cut map is kept up to date on every mutation: each boundary is
//! identified by the bead on its left and filed under the unordered pair of the
//! two owners it separates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BeadId(u32);

impl BeadId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub u32);

impl AgentId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0 + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Color(pub u16);

impl Color {
    pub const RED: Color = Color(0);
    pub const BLUE: Color = Color(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Whether every color count must be divisible by the agent count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Approx,
}

#[derive(Clone, Debug)]
pub struct Bead {
    color: Color,
    owner: Option<AgentId>,
    prev: Option<BeadId>,
    next: Option<BeadId>,
    next_same_owner: Option<BeadId>,
    label: u64,
    live: bool,
    // owner pair of the boundary to the right, when that boundary is a cut
    right_cut: Option<(AgentId, AgentId)>,
}

impl Bead {
    pub fn color(&self) -> Color {
        self.color
    }

    pub fn owner(&self) -> Option<AgentId> {
        self.owner
    }

    pub fn prev(&self) -> Option<BeadId> {
        self.prev
    }

    pub fn next(&self) -> Option<BeadId> {
        self.next
    }

    pub fn next_same_owner(&self) -> Option<BeadId> {
        self.next_same_owner
    }
}

fn ordered(a: AgentId, b: AgentId) -> (AgentId, AgentId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Debug)]
pub struct Necklace {
    beads: Vec<Bead>,
    free: Vec<BeadId>,
    head: Option<BeadId>,
    tail: Option<BeadId>,
    len: usize,
    color_counts: Vec<usize>,
    k: usize,
    mode: Mode,
    chain_head: Vec<Option<BeadId>>,
    // k * n, row per agent
    holdings: Vec<usize>,
    pair_cuts: BTreeMap<(AgentId, AgentId), BTreeSet<BeadId>>,
    cut_count: usize,
}

impl Necklace {
    /// Builds an unassigned necklace. Colors are dense ids; the color count `n`
    /// is one past the largest id present.
    pub fn new(colors: &[Color], k: usize, mode: Mode) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::EmptyInput);
        }
        if k == 0 {
            return Err(Error::Divisibility {
                color: 0,
                count: colors.len(),
                k,
            });
        }
        let n = colors.iter().map(|c| c.index()).max().unwrap_or(0) + 1;
        Self::with_colors(colors, n, k, mode)
    }

    /// Like [`Necklace::new`] but with an explicit color count, so that colors
    /// absent from the initial sequence can be inserted later.
    pub fn with_colors(colors: &[Color], n: usize, k: usize, mode: Mode) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut color_counts = vec![0usize; n];
        for c in colors {
            if c.index() >= n {
                return Err(Error::Invariant(format!("color {} >= n={}", c.0, n)));
            }
            color_counts[c.index()] += 1;
        }
        if k == 0 {
            return Err(Error::Divisibility {
                color: 0,
                count: colors.len(),
                k,
            });
        }
        if mode == Mode::Exact {
            if let Some((i, &count)) = color_counts.iter().enumerate().find(|(_, &c)| c % k != 0) {
                return Err(Error::Divisibility { color: i, count, k });
            }
        }
        let m = colors.len();
        let step = label_step(m);
        let beads = colors
            .iter()
            .enumerate()
            .map(|(i, &color)| Bead {
                color,
                owner: None,
                prev: if i == 0 {
                    None
                } else {
                    Some(BeadId(i as u32 - 1))
                },
                next: if i + 1 == m {
                    None
                } else {
                    Some(BeadId(i as u32 + 1))
                },
                next_same_owner: None,
                label: step * (i as u64 + 1),
                live: true,
                right_cut: None,
            })
            .collect();
        Ok(Necklace {
            beads,
            free: Vec::new(),
            head: Some(BeadId(0)),
            tail: Some(BeadId(m as u32 - 1)),
            len: m,
            color_counts,
            k,
            mode,
            chain_head: vec![None; k],
            holdings: vec![0; k * n],
            pair_cuts: BTreeMap::new(),
            cut_count: 0,
        })
    }

    /// Parses one symbol per bead; symbols get color ids in order of first
    /// appearance, so `"RRB"` maps R to color 0 and B to color 1.
    pub fn parse(symbols: &str, k: usize, mode: Mode) -> Result<Self> {
        let (colors, _) = colors_from_symbols(symbols);
        Self::new(&colors, k, mode)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.color_counts.len()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn color_count(&self, color: Color) -> usize {
        self.color_counts[color.index()]
    }

    pub fn color_counts(&self) -> &[usize] {
        &self.color_counts
    }

    /// Per-agent share `m_i / k`, rounded down.
    pub fn quota(&self, color: Color) -> usize {
        self.color_counts[color.index()] / self.k
    }

    pub fn head(&self) -> Option<BeadId> {
        self.head
    }

    pub fn tail(&self) -> Option<BeadId> {
        self.tail
    }

    pub fn bead(&self, id: BeadId) -> &Bead {
        &self.beads[id.index()]
    }

    pub fn color(&self, id: BeadId) -> Color {
        self.beads[id.index()].color
    }

    pub fn owner(&self, id: BeadId) -> Option<AgentId> {
        self.beads[id.index()].owner
    }

    pub fn next(&self, id: BeadId) -> Option<BeadId> {
        self.beads[id.index()].next
    }

    pub fn prev(&self, id: BeadId) -> Option<BeadId> {
        self.beads[id.index()].prev
    }

    pub fn is_live(&self, id: BeadId) -> bool {
        id.index() < self.beads.len() && self.beads[id.index()].live
    }

    /// Order label; `a` precedes `b` iff `label(a) < label(b)`.
    #[inline]
    pub fn label(&self, id: BeadId) -> u64 {
        self.beads[id.index()].label
    }

    pub fn precedes(&self, a: BeadId, b: BeadId) -> bool {
        self.label(a) < self.label(b)
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter {
            necklace: self,
            cur: self.head,
        }
    }

    pub fn colors(&self) -> Vec<Color> {
        self.iter().map(|b| self.color(b)).collect()
    }

    pub fn owners(&self) -> Vec<Option<AgentId>> {
        self.iter().map(|b| self.owner(b)).collect()
    }

    /// Owners of every bead, failing on the first unassigned one.
    pub fn assigned_owners(&self) -> Result<Vec<AgentId>> {
        self.iter()
            .enumerate()
            .map(|(i, b)| self.owner(b).ok_or(Error::UnassignedBead(i)))
            .collect()
    }

    pub fn is_assigned(&self) -> bool {
        self.iter().all(|b| self.owner(b).is_some())
    }

    /// Bead at 0-based position `pos`. Walks the list.
    pub fn bead_at(&self, pos: usize) -> Result<BeadId> {
        if pos >= self.len {
            return Err(Error::OutOfRange { pos, len: self.len });
        }
        if pos < self.len / 2 {
            Ok(self.iter().nth(pos).expect("length checked"))
        } else {
            let mut cur = self.tail.expect("nonempty");
            for _ in 0..(self.len - 1 - pos) {
                cur = self.prev(cur).expect("length checked");
            }
            Ok(cur)
        }
    }

    /// 0-based position of a live bead. Walks the list.
    pub fn position(&self, id: BeadId) -> usize {
        let mut pos = 0;
        let mut cur = self.prev(id);
        while let Some(p) = cur {
            pos += 1;
            cur = self.prev(p);
        }
        pos
    }

    pub fn next_same_owner(&self, id: BeadId) -> Option<BeadId> {
        self.beads[id.index()].next_same_owner
    }

    pub fn chain_head(&self, agent: AgentId) -> Option<BeadId> {
        self.chain_head[agent.index()]
    }

    /// Beads of one agent in necklace order, following `next_same_owner`.
    pub fn chain(&self, agent: AgentId) -> ChainIter<'_> {
        ChainIter {
            necklace: self,
            cur: self.chain_head[agent.index()],
        }
    }

    /// Beads owned by any of `agents`, in necklace order.
    pub fn agent_beads(&self, agents: &[AgentId]) -> Vec<BeadId> {
        let mut out: Vec<BeadId> = agents.iter().flat_map(|&a| self.chain(a)).collect();
        out.sort_unstable_by_key(|&b| self.label(b));
        out.dedup();
        out
    }

    pub fn holding(&self, agent: AgentId, color: Color) -> usize {
        self.holdings[agent.index() * self.n() + color.index()]
    }

    pub fn agent_size(&self, agent: AgentId) -> usize {
        let n = self.n();
        self.holdings[agent.index() * n..(agent.index() + 1) * n]
            .iter()
            .sum()
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (0..self.k as u32).map(AgentId)
    }

    /// Number of owner-change boundaries, maintained incrementally.
    pub fn cut_count(&self) -> usize {
        self.cut_count
    }

    /// Boundaries between `a` and `b`, each identified by its left bead.
    pub fn pair_cuts(&self, a: AgentId, b: AgentId) -> impl Iterator<Item = BeadId> + '_ {
        self.pair_cuts
            .get(&ordered(a, b))
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    /// All agent pairs currently separated by at least one cut.
    pub fn cut_pairs(&self) -> impl Iterator<Item = ((AgentId, AgentId), usize)> + '_ {
        self.pair_cuts.iter().map(|(&p, s)| (p, s.len()))
    }

    /// Recomputes every incrementally maintained structure and compares it
    /// with the stored one.
    pub fn check_derived(&self) -> Result<()> {
        let mut fresh = self.clone();
        fresh.rebuild_derived();
        let bad = |what: &str| Err(Error::Invariant(format!("{what} out of sync")));
        if fresh.holdings != self.holdings {
            return bad("holdings");
        }
        if fresh.chain_head != self.chain_head {
            return bad("chain heads");
        }
        if fresh.cut_count != self.cut_count || fresh.pair_cuts != self.pair_cuts {
            return bad("cuts");
        }
        let mut prev_label = None;
        for b in self.iter() {
            if self.next_same_owner(b) != fresh.next_same_owner(b) {
                return bad("owner chains");
            }
            if prev_label.is_some_and(|l| l >= self.label(b)) {
                return bad("labels");
            }
            prev_label = Some(self.label(b));
        }
        Ok(())
    }

    // ---- mutation ----

    /// Assigns owners positionally and rebuilds all derived structures.
    pub fn assign_owners(&mut self, owners: &[AgentId]) -> Result<()> {
        if owners.len() != self.len {
            return Err(Error::OutOfRange {
                pos: owners.len(),
                len: self.len,
            });
        }
        if let Some(&a) = owners.iter().find(|a| a.index() >= self.k) {
            return Err(Error::UnknownAgent(a));
        }
        let order: Vec<BeadId> = self.iter().collect();
        for (&b, &a) in order.iter().zip(owners) {
            self.beads[b.index()].owner = Some(a);
        }
        self.rebuild_derived();
        Ok(())
    }

    /// Changes owners of several beads at once, keeping chains, holdings and
    /// the pair map consistent.
    pub fn reassign(&mut self, changes: &[(BeadId, AgentId)]) -> Result<()> {
        if let Some(&(_, a)) = changes.iter().find(|(_, a)| a.index() >= self.k) {
            return Err(Error::UnknownAgent(a));
        }
        let mut affected = BTreeSet::new();
        let mut fresh = Vec::new();
        for &(b, a) in changes {
            match self.owner(b) {
                Some(old) if old == a => continue,
                Some(old) => {
                    affected.insert(old);
                }
                None => fresh.push(b),
            }
            affected.insert(a);
            self.set_owner_raw(b, Some(a));
        }
        for &(b, _) in changes {
            if let Some(p) = self.prev(b) {
                self.refresh_boundary(p);
            }
            self.refresh_boundary(b);
        }
        let affected: Vec<AgentId> = affected.into_iter().collect();
        self.rechain(&affected, &fresh);
        Ok(())
    }

    /// Moves `bead` so that it occupies 0-based position `target` afterwards.
    pub fn move_to(&mut self, bead: BeadId, target: usize) -> Result<()> {
        if target >= self.len {
            return Err(Error::OutOfRange {
                pos: target,
                len: self.len,
            });
        }
        let anchor = self.anchor_for(bead, target)?;
        self.move_before(bead, anchor);
        Ok(())
    }

    /// The bead that will follow `bead` once it has been moved to `target`
    /// (`None` for the tail).
    pub fn anchor_for(&self, bead: BeadId, target: usize) -> Result<Option<BeadId>> {
        if target >= self.len {
            return Err(Error::OutOfRange {
                pos: target,
                len: self.len,
            });
        }
        let from = self.position(bead);
        if from == target {
            return Ok(self.next(bead));
        }
        // positions shift once `bead` is taken out
        let anchor = if target > from {
            let mut cur = bead;
            for _ in 0..(target - from) {
                cur = self.next(cur).expect("in range");
            }
            self.next(cur)
        } else {
            let mut cur = bead;
            for _ in 0..(from - target) {
                cur = self.prev(cur).expect("in range");
            }
            Some(cur)
        };
        Ok(anchor)
    }

    /// Moves `bead` directly in front of `anchor` (to the end when `None`).
    pub fn move_before(&mut self, bead: BeadId, anchor: Option<BeadId>) {
        if anchor == Some(bead) || (anchor.is_none() && self.tail == Some(bead)) {
            return;
        }
        if anchor.is_some() && self.next(bead) == anchor {
            return;
        }
        self.unlink(bead);
        self.link_before(bead, anchor);
        if let Some(o) = self.owner(bead) {
            self.rechain(&[o], &[]);
        }
    }

    /// Inserts a new bead at 0-based position `pos` (`pos == len` appends).
    pub fn insert_at(
        &mut self,
        pos: usize,
        color: Color,
        owner: Option<AgentId>,
    ) -> Result<BeadId> {
        if pos > self.len {
            return Err(Error::OutOfRange { pos, len: self.len });
        }
        let anchor = if pos == self.len {
            None
        } else {
            Some(self.bead_at(pos)?)
        };
        self.insert_before(anchor, color, owner)
    }

    pub fn insert_before(
        &mut self,
        anchor: Option<BeadId>,
        color: Color,
        owner: Option<AgentId>,
    ) -> Result<BeadId> {
        if color.index() >= self.n() {
            return Err(Error::Invariant(format!(
                "color {} outside palette of {}",
                color.0,
                self.n()
            )));
        }
        if let Some(a) = owner {
            if a.index() >= self.k {
                return Err(Error::UnknownAgent(a));
            }
        }
        let bead = Bead {
            color,
            owner: None,
            prev: None,
            next: None,
            next_same_owner: None,
            label: 0,
            live: true,
            right_cut: None,
        };
        let id = match self.free.pop() {
            Some(id) => {
                self.beads[id.index()] = bead;
                id
            }
            None => {
                self.beads.push(bead);
                BeadId(self.beads.len() as u32 - 1)
            }
        };
        self.len += 1;
        self.color_counts[color.index()] += 1;
        self.link_before(id, anchor);
        if owner.is_some() {
            self.set_owner_raw(id, owner);
            if let Some(p) = self.prev(id) {
                self.refresh_boundary(p);
            }
            self.refresh_boundary(id);
            self.rechain(&[owner.unwrap()], &[id]);
        }
        Ok(id)
    }

    /// Removes a bead, returning its color.
    pub fn remove(&mut self, id: BeadId) -> Color {
        let color = self.color(id);
        let owner = self.owner(id);
        self.unlink(id);
        self.set_owner_raw(id, None);
        self.beads[id.index()].live = false;
        self.len -= 1;
        self.color_counts[color.index()] -= 1;
        if let Some(o) = owner {
            self.rechain(&[o], &[]);
        }
        self.beads[id.index()].next_same_owner = None;
        self.free.push(id);
        color
    }

    /// Exchanges the positions of two beads, leaving owners attached to beads.
    pub fn swap_positions(&mut self, a: BeadId, b: BeadId) {
        if a == b {
            return;
        }
        let anchor_a = self.next(a);
        if anchor_a == Some(b) {
            self.swap_adjacent(a, b);
            return;
        }
        let anchor_b = self.next(b);
        if anchor_b == Some(a) {
            self.swap_adjacent(b, a);
            return;
        }
        self.move_before(a, anchor_b);
        self.move_before(b, anchor_a);
    }

    // ---- internals ----

    /// Swaps `first` with its successor `second`. Owner chains only change
    /// when both share an owner, and then only these two links flip.
    fn swap_adjacent(&mut self, first: BeadId, second: BeadId) {
        self.unlink(second);
        self.link_before(second, Some(first));
        let (Some(o), Some(o2)) = (self.owner(first), self.owner(second)) else {
            return;
        };
        if o != o2 {
            return;
        }
        let mut pred = self.prev(second);
        while let Some(p) = pred {
            if self.owner(p) == Some(o) {
                break;
            }
            pred = self.prev(p);
        }
        let after = self.beads[second.index()].next_same_owner;
        match pred {
            Some(p) => self.beads[p.index()].next_same_owner = Some(second),
            None => self.chain_head[o.index()] = Some(second),
        }
        self.beads[second.index()].next_same_owner = Some(first);
        self.beads[first.index()].next_same_owner = after;
    }

    fn set_owner_raw(&mut self, id: BeadId, owner: Option<AgentId>) {
        let n = self.n();
        let color = self.color(id).index();
        if let Some(old) = self.beads[id.index()].owner {
            self.holdings[old.index() * n + color] -= 1;
        }
        if let Some(new) = owner {
            self.holdings[new.index() * n + color] += 1;
        }
        self.beads[id.index()].owner = owner;
    }

    fn refresh_boundary(&mut self, left: BeadId) {
        let new = match (
            self.owner(left),
            self.next(left).and_then(|r| self.owner(r)),
        ) {
            (Some(a), Some(b)) if a != b => Some(ordered(a, b)),
            _ => None,
        };
        self.set_right_cut(left, new);
    }

    fn set_right_cut(&mut self, left: BeadId, new: Option<(AgentId, AgentId)>) {
        let old = self.beads[left.index()].right_cut;
        if old == new {
            return;
        }
        if let Some(p) = old {
            let set = self.pair_cuts.get_mut(&p).expect("pair map consistent");
            set.remove(&left);
            if set.is_empty() {
                self.pair_cuts.remove(&p);
            }
            self.cut_count -= 1;
        }
        if let Some(p) = new {
            self.pair_cuts.entry(p).or_default().insert(left);
            self.cut_count += 1;
        }
        self.beads[left.index()].right_cut = new;
    }

    fn unlink(&mut self, id: BeadId) {
        self.set_right_cut(id, None);
        let (prev, next) = (self.prev(id), self.next(id));
        match prev {
            Some(p) => self.beads[p.index()].next = next,
            None => self.head = next,
        }
        match next {
            Some(n) => self.beads[n.index()].prev = prev,
            None => self.tail = prev,
        }
        self.beads[id.index()].prev = None;
        self.beads[id.index()].next = None;
        if let Some(p) = prev {
            self.refresh_boundary(p);
        }
    }

    fn link_before(&mut self, id: BeadId, anchor: Option<BeadId>) {
        let prev = match anchor {
            Some(a) => self.prev(a),
            None => self.tail,
        };
        self.beads[id.index()].prev = prev;
        self.beads[id.index()].next = anchor;
        match prev {
            Some(p) => self.beads[p.index()].next = Some(id),
            None => self.head = Some(id),
        }
        match anchor {
            Some(a) => self.beads[a.index()].prev = Some(id),
            None => self.tail = Some(id),
        }
        let lo = prev.map_or(0, |p| self.label(p));
        let hi = anchor.map_or(u64::MAX, |a| self.label(a));
        if hi - lo >= 2 {
            self.beads[id.index()].label = lo + (hi - lo) / 2;
        } else {
            self.relabel();
        }
        if let Some(p) = prev {
            self.refresh_boundary(p);
        }
        self.refresh_boundary(id);
    }

    fn relabel(&mut self) {
        let step = label_step(self.len);
        let mut cur = self.head;
        let mut i = 1u64;
        while let Some(b) = cur {
            self.beads[b.index()].label = step * i;
            i += 1;
            cur = self.next(b);
        }
    }

    /// Rebuilds `next_same_owner` chains for `agents`. Every bead whose old or
    /// new owner is in `agents` must be reachable from the old chains or listed
    /// in `extra`.
    fn rechain(&mut self, agents: &[AgentId], extra: &[BeadId]) {
        let mut beads: Vec<BeadId> = extra.to_vec();
        for &a in agents {
            let mut cur = self.chain_head[a.index()];
            while let Some(b) = cur {
                beads.push(b);
                cur = self.beads[b.index()].next_same_owner;
            }
        }
        beads.retain(|&b| self.beads[b.index()].live);
        beads.sort_unstable_by_key(|&b| self.label(b));
        beads.dedup();
        let mut last: Vec<Option<BeadId>> = vec![None; agents.len()];
        let slot = |a: AgentId| agents.iter().position(|&x| x == a);
        for &a in agents {
            self.chain_head[a.index()] = None;
        }
        for b in beads {
            let Some(owner) = self.owner(b) else { continue };
            let Some(s) = slot(owner) else { continue };
            match last[s] {
                Some(p) => self.beads[p.index()].next_same_owner = Some(b),
                None => self.chain_head[owner.index()] = Some(b),
            }
            last[s] = Some(b);
        }
        for l in last.into_iter().flatten() {
            self.beads[l.index()].next_same_owner = None;
        }
    }

    fn rebuild_derived(&mut self) {
        let n = self.n();
        self.holdings = vec![0; self.k * n];
        self.chain_head = vec![None; self.k];
        self.pair_cuts.clear();
        self.cut_count = 0;
        let order: Vec<BeadId> = self.iter().collect();
        let mut last: Vec<Option<BeadId>> = vec![None; self.k];
        for &b in &order {
            self.beads[b.index()].right_cut = None;
            self.beads[b.index()].next_same_owner = None;
            if let Some(o) = self.owner(b) {
                let c = self.color(b).index();
                self.holdings[o.index() * n + c] += 1;
                match last[o.index()] {
                    Some(p) => self.beads[p.index()].next_same_owner = Some(b),
                    None => self.chain_head[o.index()] = Some(b),
                }
                last[o.index()] = Some(b);
            }
        }
        for &b in &order {
            self.refresh_boundary(b);
        }
    }
}

fn label_step(m: usize) -> u64 {
    // leave headroom on both ends for insertions
    (u64::MAX / (2 * m as u64 + 2)).max(1)
}

/// Maps symbols to colors in order of first appearance, returning the palette.
pub fn colors_from_symbols(symbols: &str) -> (Vec<Color>, Vec<char>) {
    let mut palette: Vec<char> = Vec::new();
    let colors = symbols
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|ch| {
            let idx = palette.iter().position(|&p| p == ch).unwrap_or_else(|| {
                palette.push(ch);
                palette.len() - 1
            });
            Color(idx as u16)
        })
        .collect();
    (colors, palette)
}

pub struct Iter<'a> {
    necklace: &'a Necklace,
    cur: Option<BeadId>,
}

impl Iterator for Iter<'_> {
    type Item = BeadId;

    fn next(&mut self) -> Option<BeadId> {
        let cur = self.cur?;
        self.cur = self.necklace.next(cur);
        Some(cur)
    }
}

pub struct ChainIter<'a> {
    necklace: &'a Necklace,
    cur: Option<BeadId>,
}

impl Iterator for ChainIter<'_> {
    type Item = BeadId;

    fn next(&mut self) -> Option<BeadId> {
        let cur = self.cur?;
        self.cur = self.necklace.next_same_owner(cur);
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn owners(v: &[u32]) -> Vec<AgentId> {
        v.iter().map(|&a| AgentId(a)).collect()
    }

    #[test]
    fn parse_worked_example() {
        let nk = Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact).unwrap();
        assert_eq!(nk.len(), 12);
        assert_eq!(nk.n(), 2);
        assert_eq!(nk.color_count(Color::RED), 6);
        assert_eq!(nk.color_count(Color::BLUE), 6);
        assert!(!nk.is_assigned());
    }

    #[test]
    fn single_bead() {
        let nk = Necklace::parse("R", 1, Mode::Exact).unwrap();
        assert_eq!(nk.len(), 1);
        assert_eq!(nk.n(), 1);
    }

    #[test]
    fn divisibility_error() {
        let err = Necklace::parse("RRB", 2, Mode::Exact).unwrap_err();
        assert_eq!(
            err,
            Error::Divisibility {
                color: 1,
                count: 1,
                k: 2
            }
        );
        assert!(Necklace::parse("RRB", 2, Mode::Approx).is_ok());
        assert_eq!(
            Necklace::parse("", 2, Mode::Exact).unwrap_err(),
            Error::EmptyInput
        );
    }

    #[test]
    fn chains_and_pair_map_follow_mutations() {
        let mut nk = Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact).unwrap();
        nk.assign_owners(&owners(&[1, 1, 0, 0, 0, 0, 1, 1, 2, 2, 2, 2]))
            .unwrap();
        assert_eq!(nk.cut_count(), 3);
        let a2: Vec<usize> = nk.chain(AgentId(1)).map(|b| nk.position(b)).collect();
        assert_eq!(a2, vec![0, 1, 6, 7]);
        assert_eq!(nk.pair_cuts(AgentId(0), AgentId(1)).count(), 2);
        assert_eq!(nk.pair_cuts(AgentId(1), AgentId(2)).count(), 1);

        let b = nk.bead_at(0).unwrap();
        nk.move_to(b, 11).unwrap();
        let a2: Vec<usize> = nk.chain(AgentId(1)).map(|b| nk.position(b)).collect();
        assert_eq!(a2, vec![0, 5, 6, 11]);
        assert_eq!(nk.cut_count(), 4);

        let x = nk.bead_at(3).unwrap();
        nk.reassign(&[(x, AgentId(2))]).unwrap();
        assert_eq!(nk.holding(AgentId(2), nk.color(x)), 3);
        let a3: Vec<usize> = nk.chain(AgentId(2)).map(|b| nk.position(b)).collect();
        assert_eq!(a3, vec![3, 7, 8, 9, 10]);

        let removed = nk.bead_at(5).unwrap();
        nk.remove(removed);
        assert_eq!(nk.len(), 11);
        let a2: Vec<usize> = nk.chain(AgentId(1)).map(|b| nk.position(b)).collect();
        assert_eq!(a2, vec![0, 5, 10]);
        let id = nk.insert_at(0, Color::BLUE, Some(AgentId(1))).unwrap();
        assert_eq!(nk.position(id), 0);
        assert_eq!(nk.chain(AgentId(1)).count(), 4);
    }

    #[test]
    fn move_to_lands_on_target() {
        let mut nk = Necklace::parse("ABCDEFG", 1, Mode::Approx).unwrap();
        for (from, to) in [(0, 6), (6, 0), (2, 4), (5, 1), (3, 3)] {
            let b = nk.bead_at(from).unwrap();
            nk.move_to(b, to).unwrap();
            assert_eq!(nk.position(b), to);
            assert_eq!(nk.iter().count(), 7);
        }
    }

    #[test]
    fn many_insertions_force_relabel() {
        let mut nk = Necklace::parse("RB", 1, Mode::Approx).unwrap();
        let first = nk.head().unwrap();
        for _ in 0..200 {
            let anchor = nk.next(first);
            nk.insert_before(anchor, Color::RED, None).unwrap();
        }
        let labels: Vec<u64> = nk.iter().map(|b| nk.label(b)).collect();
        assert!(labels.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(nk.len(), 202);
    }
}
