//! The dense regime m = nk: every agent owns exactly one bead of each color.
//!
//! Cuts follow a fixed pattern. A bead has a cut on its left unless it sits at
//! the head or is the first occurrence of its color, so the cut set is a
//! function of the color sequence alone and always has n(k-1) members. An
//! interval is a leader bead followed by a (possibly empty) run of
//! first-of-color beads, and its beads share one owner.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::necklace::{AgentId, BeadId, Color, Necklace};

/// Agent x color table plus the occurrence order of every color.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseIndex {
    n: usize,
    k: usize,
    // row per agent
    table: Vec<BeadId>,
    order: Vec<Vec<BeadId>>,
}

impl DenseIndex {
    /// The bead of `color` owned by `agent`.
    pub fn bead(&self, agent: AgentId, color: Color) -> BeadId {
        self.table[agent.index() * self.n + color.index()]
    }

    /// Beads of `color` in necklace order.
    pub fn occurrences(&self, color: Color) -> &[BeadId] {
        &self.order[color.index()]
    }

    pub fn first(&self, color: Color) -> BeadId {
        self.order[color.index()][0]
    }

    /// Occurrence rank of `bead` among beads of its color.
    pub fn rank(&self, nk: &Necklace, bead: BeadId) -> usize {
        let occ = &self.order[nk.color(bead).index()];
        occ.partition_point(|&b| nk.label(b) < nk.label(bead))
    }

    fn set(&mut self, agent: AgentId, color: Color, bead: BeadId) {
        self.table[agent.index() * self.n + color.index()] = bead;
    }

    /// Re-sorts the entry of `bead` after it moved.
    fn reorder(&mut self, nk: &Necklace, bead: BeadId) {
        let occ = &mut self.order[nk.color(bead).index()];
        let at = occ.iter().position(|&b| b == bead).expect("indexed bead");
        let label = nk.label(bead);
        let sorted_left = at == 0 || nk.label(occ[at - 1]) < label;
        let sorted_right = at + 1 == occ.len() || label < nk.label(occ[at + 1]);
        if sorted_left && sorted_right {
            return;
        }
        occ.remove(at);
        let to = occ.partition_point(|&b| nk.label(b) < label);
        occ.insert(to, bead);
    }
}

/// Which case of the case analysis an operation took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenseCase {
    /// Nothing changed ownership: equal colors or an empty move.
    Unchanged,
    /// Adjacent beads of one owner.
    SameOwner,
    /// Cut on both sides of the pair.
    Swap1,
    /// Cut on the left only.
    Swap2,
    /// No cut on the left.
    Swap3,
    /// First of its color before and after.
    Jump1,
    /// Not first before or after.
    Jump2,
    /// First before, not after.
    Jump3,
    /// Not first before, first after.
    Jump4,
}

impl DenseCase {
    /// Largest number of interval exchanges the case may need with `n` colors.
    pub fn bound(self, n: usize) -> usize {
        match self {
            DenseCase::Unchanged | DenseCase::Swap1 => 0,
            DenseCase::SameOwner | DenseCase::Swap2 | DenseCase::Jump1 => n,
            DenseCase::Swap3 => n.saturating_sub(1),
            DenseCase::Jump2 => 2 * n - 1,
            DenseCase::Jump3 | DenseCase::Jump4 => 3 * n - 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenseStats {
    pub case: DenseCase,
    /// Intervals that changed hands, not counting the relocated beads.
    pub exchanges: usize,
}

/// How a rebuilt interval picks its owner.
#[derive(Clone, Copy)]
enum Rule {
    /// The previous owner of its leader.
    Leader,
    /// The previous owner of its first bead other than the given one.
    Resident(BeadId),
}

/// A dense necklace with its allocation, explicit cut flags and index.
#[derive(Clone, Debug)]
pub struct DenseNecklace {
    necklace: Necklace,
    index: DenseIndex,
    // indexed by bead id
    cut_left: Vec<bool>,
}

/// Splits a necklace with m = nk and every color appearing k times.
pub fn dense_offline_split(necklace: &Necklace) -> Result<DenseNecklace> {
    let (n, k, m) = (necklace.n(), necklace.k(), necklace.len());
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    if m != n * k {
        return Err(Error::NotDense(format!(
            "{m} beads, expected n*k = {}",
            n * k
        )));
    }
    if let Some(c) = necklace.color_counts().iter().position(|&c| c != k) {
        return Err(Error::NotDense(format!(
            "color {c} appears {} times, expected {k}",
            necklace.color_counts()[c]
        )));
    }
    let beads: Vec<BeadId> = necklace.iter().collect();
    let mut seen = vec![false; n];
    let mut cut_left = vec![false; beads.iter().map(|b| b.index()).max().unwrap_or(0) + 1];
    let mut intervals: Vec<Vec<BeadId>> = Vec::new();
    for (pos, &b) in beads.iter().enumerate() {
        let c = necklace.color(b).index();
        let first = !seen[c];
        seen[c] = true;
        if pos == 0 || !first {
            cut_left[b.index()] = pos > 0;
            intervals.push(vec![b]);
        } else {
            intervals.last_mut().expect("head opens one").push(b);
        }
    }

    // Multi-bead intervals conflict only within the group sharing a leader
    // color plus the interval holding that color's first bead, which is at
    // most k intervals, so first-fit in necklace order never gets stuck.
    let mut has = vec![vec![false; n]; k];
    let mut owner_of = vec![None; intervals.len()];
    for (i, iv) in intervals.iter().enumerate().filter(|(_, iv)| iv.len() > 1) {
        let agent = (0..k)
            .find(|&a| iv.iter().all(|&b| !has[a][necklace.color(b).index()]))
            .ok_or_else(|| Error::Invariant("canonical pattern has no assignment".into()))?;
        for &b in iv {
            has[agent][necklace.color(b).index()] = true;
        }
        owner_of[i] = Some(agent);
    }
    for (i, iv) in intervals.iter().enumerate().filter(|(_, iv)| iv.len() == 1) {
        let c = necklace.color(iv[0]).index();
        let agent = (0..k)
            .find(|&a| !has[a][c])
            .ok_or_else(|| Error::Invariant("color count mismatch".into()))?;
        has[agent][c] = true;
        owner_of[i] = Some(agent);
    }

    let mut owners = Vec::with_capacity(m);
    for (iv, owner) in intervals.iter().zip(&owner_of) {
        let a = AgentId(owner.expect("every interval assigned") as u32);
        owners.extend(std::iter::repeat_n(a, iv.len()));
    }
    let mut nk = necklace.clone();
    nk.assign_owners(&owners)?;

    let mut table = vec![beads[0]; n * k];
    let mut order = vec![Vec::with_capacity(k); n];
    for (&b, &a) in beads.iter().zip(&owners) {
        let c = nk.color(b).index();
        table[a.index() * n + c] = b;
        order[c].push(b);
    }
    Ok(DenseNecklace {
        necklace: nk,
        index: DenseIndex { n, k, table, order },
        cut_left,
    })
}

impl DenseNecklace {
    pub fn necklace(&self) -> &Necklace {
        &self.necklace
    }

    pub fn index(&self) -> &DenseIndex {
        &self.index
    }

    pub fn into_inner(self) -> Necklace {
        self.necklace
    }

    pub fn has_cut_left(&self, bead: BeadId) -> bool {
        self.cut_left[bead.index()]
    }

    /// Number of explicit cuts, redundant ones included.
    pub fn cut_count(&self) -> usize {
        self.cut_left.iter().filter(|&&c| c).count()
    }

    /// 0-based positions of the beads with a cut on their left.
    pub fn cut_positions(&self) -> Vec<usize> {
        self.necklace
            .iter()
            .enumerate()
            .filter(|(_, b)| self.cut_left[b.index()])
            .map(|(p, _)| p)
            .collect()
    }

    fn is_first(&self, bead: BeadId) -> bool {
        self.index.first(self.necklace.color(bead)) == bead
    }

    fn refresh_flag(&mut self, bead: BeadId) {
        self.cut_left[bead.index()] = self.necklace.head() != Some(bead) && !self.is_first(bead);
    }

    fn leader(&self, bead: BeadId) -> BeadId {
        let mut cur = bead;
        while !self.cut_left[cur.index()] {
            match self.necklace.prev(cur) {
                Some(p) => cur = p,
                None => break,
            }
        }
        cur
    }

    fn members(&self, leader: BeadId) -> Vec<BeadId> {
        let mut out = vec![leader];
        let mut cur = leader;
        while let Some(nx) = self.necklace.next(cur) {
            if self.cut_left[nx.index()] {
                break;
            }
            out.push(nx);
            cur = nx;
        }
        out
    }

    /// Swaps the beads at 0-based positions `j` and `j + 1`.
    pub fn swap(&mut self, j: usize) -> Result<DenseStats> {
        let len = self.necklace.len();
        if j + 1 >= len {
            return Err(Error::OutOfRange { pos: j + 1, len });
        }
        let x = self.necklace.bead_at(j)?;
        let y = self.necklace.next(x).expect("j + 1 in range");
        let (cx, cy) = (self.necklace.color(x), self.necklace.color(y));
        let (ax, ay) = (self.owner(x), self.owner(y));
        if cx == cy {
            self.identity_swap(x, y)?;
            return Ok(DenseStats {
                case: DenseCase::Unchanged,
                exchanges: 0,
            });
        }
        let case = if ax == ay {
            DenseCase::SameOwner
        } else if !self.cut_left[x.index()] {
            DenseCase::Swap3
        } else if self
            .necklace
            .next(y)
            .is_none_or(|z| self.cut_left[z.index()])
        {
            DenseCase::Swap1
        } else {
            DenseCase::Swap2
        };
        let exchanges = self.relocate(&[x, y], Rule::Leader, |nk| nk.move_before(y, Some(x)))?;
        Ok(DenseStats { case, exchanges })
    }

    /// Moves the bead at 0-based `j1` so that it ends up at `j2`.
    pub fn jump(&mut self, j1: usize, j2: usize) -> Result<DenseStats> {
        let x = self.necklace.bead_at(j1)?;
        let anchor = self.necklace.anchor_for(x, j2)?;
        if anchor == self.necklace.next(x) {
            return Ok(DenseStats {
                case: DenseCase::Unchanged,
                exchanges: 0,
            });
        }
        let c = self.necklace.color(x);
        let occ = self.index.occurrences(c);
        let first_before = occ[0] == x;
        let other = occ.iter().copied().find(|&b| b != x);
        let first_after = match (other, anchor) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(o), Some(a)) => a == o || self.necklace.precedes(a, o),
        };
        let (case, exchanges) = match (first_before, first_after) {
            (true, true) => (DenseCase::Jump1, self.jump_first(x, anchor)?),
            (false, false) => (DenseCase::Jump2, self.jump_inner(x, Dest::Index(j2))?),
            (true, false) => {
                // park in front of the second occurrence, then send that one
                let second = occ[1];
                let mut ex = self.jump_first(x, Some(second))?;
                ex += self.jump_inner(second, Dest::Index(j2))?;
                self.identity_swap(x, second)?;
                (DenseCase::Jump3, ex)
            }
            (false, true) => {
                let first = occ[0];
                let mut ex = self.jump_inner(x, Dest::After(first))?;
                let anchor = self.necklace.anchor_for(first, j2)?;
                ex += self.jump_first(first, anchor)?;
                self.identity_swap(x, first)?;
                (DenseCase::Jump4, ex)
            }
        };
        Ok(DenseStats { case, exchanges })
    }

    /// A first-of-color bead moves and stays first.
    fn jump_first(&mut self, x: BeadId, anchor: Option<BeadId>) -> Result<usize> {
        self.relocate(&[x], Rule::Resident(x), |nk| nk.move_before(x, anchor))
    }

    /// A non-first bead moves and stays non-first: it first sheds its
    /// followers to become a singleton, then lands.
    fn jump_inner(&mut self, x: BeadId, dest: Dest) -> Result<usize> {
        let mut ex = 0;
        let tail = *self.members(x).last().expect("non-empty");
        if tail != x {
            let anchor = self.necklace.next(tail);
            ex += self.relocate(&[x], Rule::Resident(x), |nk| nk.move_before(x, anchor))?;
        }
        let anchor = match dest {
            Dest::Index(j) => self.necklace.anchor_for(x, j)?,
            Dest::After(b) => self.necklace.next(b),
        };
        ex += self.relocate(&[x], Rule::Resident(x), |nk| nk.move_before(x, anchor))?;
        Ok(ex)
    }

    /// Exchanges the places of two beads of one color together with their
    /// owners, which leaves colors, owners and cuts as they were.
    fn identity_swap(&mut self, a: BeadId, b: BeadId) -> Result<()> {
        let (oa, ob) = (self.owner(a), self.owner(b));
        self.necklace.swap_positions(a, b);
        self.necklace.reassign(&[(a, ob), (b, oa)])?;
        let c = self.necklace.color(a);
        self.index.set(ob, c, a);
        self.index.set(oa, c, b);
        self.index.reorder(&self.necklace, a);
        self.index.reorder(&self.necklace, b);
        let (fa, fb) = (self.cut_left[a.index()], self.cut_left[b.index()]);
        self.cut_left[a.index()] = fb;
        self.cut_left[b.index()] = fa;
        Ok(())
    }

    fn owner(&self, bead: BeadId) -> AgentId {
        self.necklace.owner(bead).expect("dense beads are assigned")
    }

    /// Applies a physical move of `moved`, rebuilds the intervals around it,
    /// and repairs quotas by exchanging whole intervals between the two agents
    /// left unbalanced. Returns the number of exchanges.
    fn relocate(
        &mut self,
        moved: &[BeadId],
        rule: Rule,
        physical: impl FnOnce(&mut Necklace),
    ) -> Result<usize> {
        let mut touched: Vec<BeadId> = Vec::new();
        let around = |nk: &Necklace, out: &mut Vec<BeadId>| {
            out.extend(nk.head());
            for &b in moved {
                out.push(b);
                out.extend(nk.prev(b));
                out.extend(nk.next(b));
            }
        };
        around(&self.necklace, &mut touched);
        physical(&mut self.necklace);
        around(&self.necklace, &mut touched);
        for &b in moved {
            self.index.reorder(&self.necklace, b);
            let c = self.necklace.color(b);
            touched.extend(self.index.occurrences(c).iter().take(2).copied());
        }
        touched.sort();
        touched.dedup();
        for &b in &touched {
            self.refresh_flag(b);
        }

        let mut leaders: Vec<BeadId> = touched.iter().map(|&b| self.leader(b)).collect();
        leaders.sort();
        leaders.dedup();
        let mut changes: Vec<(BeadId, AgentId)> = Vec::new();
        let mut others_changed = false;
        let mut pinned: Vec<BeadId> = Vec::new();
        for &l in &leaders {
            let members = self.members(l);
            let owner = match rule {
                Rule::Leader => self.owner(l),
                Rule::Resident(x) => {
                    self.owner(members.iter().copied().find(|&b| b != x).unwrap_or(x))
                }
            };
            if members.iter().any(|b| moved.contains(b)) {
                pinned.push(l);
            }
            for b in members {
                if self.owner(b) != owner {
                    others_changed |= !moved.contains(&b);
                    changes.push((b, owner));
                }
            }
        }

        let mut held: BTreeMap<AgentId, Vec<Vec<BeadId>>> = BTreeMap::new();
        for &(b, to) in &changes {
            let from = self.owner(b);
            for a in [from, to] {
                held.entry(a).or_insert_with(|| {
                    (0..self.index.n)
                        .map(|c| vec![self.index.bead(a, Color(c as u16))])
                        .collect()
                });
            }
            let c = self.necklace.color(b).index();
            held.get_mut(&from).expect("seeded")[c].retain(|&x| x != b);
            held.get_mut(&to).expect("seeded")[c].push(b);
        }
        self.necklace.reassign(&changes)?;

        let exchanges = usize::from(others_changed) + self.cascade(&mut held, &mut pinned)?;
        for (a, slots) in &held {
            for (c, slot) in slots.iter().enumerate() {
                self.index.set(*a, Color(c as u16), slot[0]);
            }
        }
        Ok(exchanges)
    }

    /// Moves whole intervals between the two unbalanced agents, lowest color
    /// first, until both hold one bead per color.
    fn cascade(
        &mut self,
        held: &mut BTreeMap<AgentId, Vec<Vec<BeadId>>>,
        pinned: &mut Vec<BeadId>,
    ) -> Result<usize> {
        let off: Vec<AgentId> = held
            .iter()
            .filter(|(_, slots)| slots.iter().any(|s| s.len() != 1))
            .map(|(a, _)| *a)
            .collect();
        if off.is_empty() {
            return Ok(0);
        }
        if off.len() != 2 {
            return Err(Error::Invariant(format!("{} agents unbalanced", off.len())));
        }
        let (p, q) = (off[0], off[1]);
        let n = self.index.n;
        let mut exchanges = 0;
        loop {
            let surplus = (0..n).find_map(|c| {
                [p, q]
                    .into_iter()
                    .find(|a| held[a][c].len() > 1)
                    .map(|a| (a, c))
            });
            let Some((from, c)) = surplus else { break };
            let to = if from == p { q } else { p };
            let candidates: Vec<BeadId> = held[&from][c]
                .iter()
                .copied()
                .filter(|&b| !pinned.contains(&self.leader(b)))
                .collect();
            let pick = candidates
                .iter()
                .copied()
                .find(|&b| self.leader(b) == b)
                .or_else(|| candidates.first().copied())
                .ok_or_else(|| Error::Invariant("cascade has no movable interval".into()))?;
            let leader = self.leader(pick);
            let members = self.members(leader);
            for &b in &members {
                let bc = self.necklace.color(b).index();
                held.get_mut(&from).expect("unbalanced")[bc].retain(|&x| x != b);
                held.get_mut(&to).expect("unbalanced")[bc].push(b);
            }
            let changes: Vec<(BeadId, AgentId)> = members.iter().map(|&b| (b, to)).collect();
            self.necklace.reassign(&changes)?;
            pinned.push(leader);
            exchanges += 1;
            if exchanges > 2 * n + 2 {
                return Err(Error::Invariant("cascade does not terminate".into()));
            }
        }
        if [p, q].iter().any(|a| held[a].iter().any(|s| s.len() != 1)) {
            return Err(Error::Invariant("cascade left a deficit".into()));
        }
        Ok(exchanges)
    }

    /// Checks every dense invariant from scratch.
    pub fn validate(&self) -> Result<()> {
        let nk = &self.necklace;
        let (n, k) = (nk.n(), nk.k());
        let fail = |msg: String| Err(Error::Invariant(msg));
        let mut seen = vec![false; n];
        let mut held = vec![vec![0usize; n]; k];
        let mut prev_owner = None;
        let mut cuts = 0;
        let mut order = vec![Vec::new(); n];
        for (pos, b) in nk.iter().enumerate() {
            let c = nk.color(b).index();
            let first = !seen[c];
            seen[c] = true;
            let expect = pos > 0 && !first;
            if self.cut_left[b.index()] != expect {
                return fail(format!("cut flag wrong at position {pos}"));
            }
            cuts += usize::from(expect);
            let owner = self.owner(b);
            if pos > 0 && !expect && prev_owner != Some(owner) {
                return fail(format!("owner changes without a cut at position {pos}"));
            }
            prev_owner = Some(owner);
            held[owner.index()][c] += 1;
            if self.index.bead(owner, Color(c as u16)) != b {
                return fail(format!("index cell for {owner} color {c} is stale"));
            }
            order[c].push(b);
        }
        if cuts != n * (k - 1) {
            return fail(format!("{cuts} cuts, expected {}", n * (k - 1)));
        }
        if held.iter().flatten().any(|&h| h != 1) {
            return fail("an agent does not hold one bead per color".into());
        }
        if order != self.index.order {
            return fail("color order out of sync".into());
        }
        Ok(())
    }
}

enum Dest {
    Index(usize),
    After(BeadId),
}
