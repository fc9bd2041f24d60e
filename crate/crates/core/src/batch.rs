//! Batch relocation, insertion and deletion for two-color necklaces.
//!
//! After the beads are physically placed, every agent holds some surplus or
//! deficit of the moved color. Those imbalances are routed through a spanning
//! tree of the neighborhood graph, and the offline splitter is rerun on the
//! agents that carry flow.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::dynamic2::DynamicNecklace;
use crate::error::{Error, Result};
use crate::graph::{peel_order, NeighborhoodGraph};
use crate::necklace::{AgentId, BeadId, Color, Mode, Necklace};
use crate::offline::{offline_split, offline_split_range};

/// Leveled spanning tree of the neighborhood graph.
///
/// An agent's level is one more than the number of later-selected agents
/// whose span strictly contains its own. Edges between agents of equal level
/// above 1 are dropped.
#[derive(Clone, Debug)]
pub struct NeighborhoodTree {
    levels: Vec<usize>,
    adj: Vec<BTreeSet<AgentId>>,
    parent: Vec<Option<AgentId>>,
    depth: Vec<usize>,
    level1: Vec<AgentId>,
    order: Vec<AgentId>,
    dropped: Vec<(AgentId, AgentId)>,
    restored: Vec<(AgentId, AgentId)>,
}

impl NeighborhoodTree {
    pub fn level(&self, a: AgentId) -> usize {
        self.levels[a.index()]
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn agent_count(&self) -> usize {
        self.levels.len()
    }

    pub fn neighbors(&self, a: AgentId) -> impl Iterator<Item = AgentId> + '_ {
        self.adj[a.index()].iter().copied()
    }

    pub fn has_edge(&self, a: AgentId, b: AgentId) -> bool {
        self.adj[a.index()].contains(&b)
    }

    pub fn edges(&self) -> Vec<(AgentId, AgentId)> {
        let mut out = Vec::new();
        for (a, nbrs) in self.adj.iter().enumerate() {
            let a = AgentId(a as u32);
            out.extend(nbrs.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }

    /// Neighbor toward the root: the level below, or the right neighbor on
    /// level 1.
    pub fn parent(&self, a: AgentId) -> Option<AgentId> {
        self.parent[a.index()]
    }

    /// Level-1 agents from left to right.
    pub fn level1(&self) -> &[AgentId] {
        &self.level1
    }

    /// Interval-selection order the levels were derived from.
    pub fn selection_order(&self) -> &[AgentId] {
        &self.order
    }

    /// Same-level graph edges left out of the tree.
    pub fn dropped(&self) -> &[(AgentId, AgentId)] {
        &self.dropped
    }

    /// Dropped edges put back because the leveled tree alone was not
    /// connected (siblings whose encloser does not touch them).
    pub fn restored(&self) -> &[(AgentId, AgentId)] {
        &self.restored
    }

    pub fn is_spanning_tree(&self) -> bool {
        let k = self.agent_count();
        if k == 0 {
            return true;
        }
        let edges = self.edges().len();
        let g = NeighborhoodGraph::with_agents(k);
        let mut g = g;
        for (a, b) in self.edges() {
            g.add_edge(a, b);
        }
        edges + 1 == k && g.is_connected()
    }
}

/// Builds the neighborhood tree of a peelable allocation, using the peeling
/// order as the interval-selection order.
pub fn build_neighborhood_tree(necklace: &Necklace) -> Result<NeighborhoodTree> {
    let order = peel_order(necklace)?.ok_or(Error::NotPeelable)?;
    let owners = necklace.assigned_owners()?;
    let graph = NeighborhoodGraph::from_pair_map(necklace);
    Ok(tree_from_parts(&owners, necklace.k(), &graph, order))
}

fn tree_from_parts(
    owners: &[AgentId],
    k: usize,
    graph: &NeighborhoodGraph,
    order: Vec<AgentId>,
) -> NeighborhoodTree {
    let mut span: Vec<Option<(usize, usize)>> = vec![None; k];
    for (p, a) in owners.iter().enumerate() {
        let s = &mut span[a.index()];
        *s = Some(match *s {
            None => (p, p),
            Some((f, _)) => (f, p),
        });
    }
    // spans of a peelable allocation are laminar, so nesting depth is the
    // number of strictly enclosing spans
    let mut by_start: Vec<(usize, usize, AgentId)> = span
        .iter()
        .enumerate()
        .filter_map(|(a, s)| s.map(|(f, l)| (f, l, AgentId(a as u32))))
        .collect();
    by_start.sort_unstable();
    let mut levels = vec![1usize; k];
    let mut stack: Vec<usize> = Vec::new();
    let mut level1 = Vec::new();
    for &(f, l, a) in &by_start {
        while stack.last().is_some_and(|&top| top < f) {
            stack.pop();
        }
        levels[a.index()] = stack.len() + 1;
        if stack.is_empty() {
            level1.push(a);
        }
        stack.push(l);
    }

    let mut uf = UnionFind::new(k);
    let mut adj = vec![BTreeSet::new(); k];
    let mut dropped = Vec::new();
    for (a, b) in graph.edges() {
        let (la, lb) = (levels[a.index()], levels[b.index()]);
        if la == lb && la > 1 {
            dropped.push((a, b));
        } else if uf.union(a.index(), b.index()) {
            adj[a.index()].insert(b);
            adj[b.index()].insert(a);
        } else {
            dropped.push((a, b));
        }
    }
    let mut restored = Vec::new();
    for &(a, b) in &dropped {
        if uf.union(a.index(), b.index()) {
            adj[a.index()].insert(b);
            adj[b.index()].insert(a);
            restored.push((a, b));
        }
    }
    dropped.retain(|e| !restored.contains(e));

    let mut parent = vec![None; k];
    let mut depth = vec![0usize; k];
    let mut seen = vec![false; k];
    let roots = level1
        .iter()
        .rev()
        .copied()
        .chain((0..k as u32).map(AgentId));
    for root in roots {
        if seen[root.index()] {
            continue;
        }
        seen[root.index()] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u.index()] {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    parent[v.index()] = Some(u);
                    depth[v.index()] = depth[u.index()] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    NeighborhoodTree {
        levels,
        adj,
        parent,
        depth,
        level1,
        order,
        dropped,
        restored,
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Interior nodes with signed excess: positive excess is a source edge of
/// that capacity, negative excess a sink edge. Interior edges are uncapped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    excess: Vec<i64>,
    adj: Vec<BTreeSet<AgentId>>,
}

impl FlowNetwork {
    /// Network over an arbitrary edge list.
    pub fn new(excess: Vec<i64>, edges: &[(AgentId, AgentId)]) -> Result<Self> {
        if excess.iter().sum::<i64>() != 0 {
            return Err(Error::Infeasible);
        }
        if excess.iter().all(|&e| e == 0) {
            return Err(Error::ZeroBatch);
        }
        let mut adj = vec![BTreeSet::new(); excess.len()];
        for &(a, b) in edges {
            if a != b {
                adj[a.index()].insert(b);
                adj[b.index()].insert(a);
            }
        }
        Ok(FlowNetwork { excess, adj })
    }

    pub fn on_graph(graph: &NeighborhoodGraph, excess: Vec<i64>) -> Result<Self> {
        Self::new(excess, &graph.edges())
    }

    pub fn on_tree(tree: &NeighborhoodTree, excess: Vec<i64>) -> Result<Self> {
        Self::new(excess, &tree.edges())
    }

    pub fn node_count(&self) -> usize {
        self.excess.len()
    }

    pub fn excess(&self, a: AgentId) -> i64 {
        self.excess[a.index()]
    }

    pub fn source_capacity(&self, a: AgentId) -> u64 {
        self.excess[a.index()].max(0) as u64
    }

    pub fn sink_capacity(&self, a: AgentId) -> u64 {
        (-self.excess[a.index()]).max(0) as u64
    }

    pub fn sources(&self) -> Vec<AgentId> {
        self.terminals()
            .into_iter()
            .filter(|&a| self.excess(a) > 0)
            .collect()
    }

    pub fn sinks(&self) -> Vec<AgentId> {
        self.terminals()
            .into_iter()
            .filter(|&a| self.excess(a) < 0)
            .collect()
    }

    pub fn terminals(&self) -> Vec<AgentId> {
        (0..self.excess.len() as u32)
            .map(AgentId)
            .filter(|&a| self.excess(a) != 0)
            .collect()
    }

    /// Beads that must change owner.
    pub fn demand(&self) -> u64 {
        self.excess
            .iter()
            .filter(|&&e| e > 0)
            .map(|&e| e as u64)
            .sum()
    }

    pub fn has_edge(&self, a: AgentId, b: AgentId) -> bool {
        self.adj[a.index()].contains(&b)
    }

    pub fn neighbors(&self, a: AgentId) -> impl Iterator<Item = AgentId> + '_ {
        self.adj[a.index()].iter().copied()
    }

    pub fn edges(&self) -> Vec<(AgentId, AgentId)> {
        let mut out = Vec::new();
        for (a, nbrs) in self.adj.iter().enumerate() {
            let a = AgentId(a as u32);
            out.extend(nbrs.iter().filter(|&&b| a < b).map(|&b| (a, b)));
        }
        out
    }
}

/// Directed flow amounts on interior edges; never positive both ways.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Flow {
    amounts: BTreeMap<(AgentId, AgentId), u64>,
}

impl Flow {
    pub fn get(&self, u: AgentId, v: AgentId) -> u64 {
        self.amounts.get(&(u, v)).copied().unwrap_or(0)
    }

    /// Adds `amount` from `u` to `v`, cancelling against any reverse flow.
    pub fn push(&mut self, u: AgentId, v: AgentId, amount: u64) {
        if amount == 0 {
            return;
        }
        let back = self.get(v, u);
        if back >= amount {
            self.set(v, u, back - amount);
        } else {
            self.set(v, u, 0);
            let fwd = self.get(u, v);
            self.set(u, v, fwd + amount - back);
        }
    }

    fn set(&mut self, u: AgentId, v: AgentId, amount: u64) {
        if amount == 0 {
            self.amounts.remove(&(u, v));
        } else {
            self.amounts.insert((u, v), amount);
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = ((AgentId, AgentId), u64)> + '_ {
        self.amounts.iter().map(|(&e, &a)| (e, a))
    }

    pub fn inflow(&self, v: AgentId) -> u64 {
        self.amounts
            .iter()
            .filter(|((_, h), _)| *h == v)
            .map(|(_, &a)| a)
            .sum()
    }

    pub fn outflow(&self, u: AgentId) -> u64 {
        self.amounts
            .iter()
            .filter(|((t, _), _)| *t == u)
            .map(|(_, &a)| a)
            .sum()
    }

    /// Conservation with saturated source and sink edges, on edges of
    /// `network` only.
    pub fn is_feasible(&self, network: &FlowNetwork) -> bool {
        let n = network.node_count();
        let mut net = vec![0i64; n];
        for ((u, v), a) in self.edges() {
            if !network.has_edge(u, v) {
                return false;
            }
            net[u.index()] += a as i64;
            net[v.index()] -= a as i64;
        }
        (0..n).all(|i| net[i] == network.excess[i])
    }

    /// Same as [`Flow::is_feasible`] but against an arbitrary graph.
    pub fn is_feasible_in(&self, graph: &NeighborhoodGraph, excess: &[i64]) -> bool {
        let mut net = vec![0i64; excess.len()];
        for ((u, v), a) in self.edges() {
            if !graph.has_edge(u, v) {
                return false;
            }
            net[u.index()] += a as i64;
            net[v.index()] -= a as i64;
        }
        net == excess
    }

    /// Nodes with both incoming and outgoing flow, plus terminals.
    pub fn active_nodes(&self, network: &FlowNetwork) -> BTreeSet<AgentId> {
        let mut has_in = BTreeSet::new();
        let mut has_out = BTreeSet::new();
        for ((u, v), _) in self.edges() {
            has_out.insert(u);
            has_in.insert(v);
        }
        let mut active: BTreeSet<AgentId> = has_in.intersection(&has_out).copied().collect();
        active.extend(network.terminals());
        active
    }
}

/// Solved tree flow.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeFlow {
    pub flow: Flow,
    pub active: BTreeSet<AgentId>,
}

/// Routes every excess toward the root of `tree`, deepest nodes first: nodes
/// above level 1 drain into the level below, then level 1 is swept left to
/// right. Flow on a tree is unique, so this is the max flow.
pub fn solve_tree_flow(network: &FlowNetwork, tree: &NeighborhoodTree) -> Result<TreeFlow> {
    let k = network.node_count();
    let mut residual = network.excess.clone();
    let mut nodes: Vec<AgentId> = (0..k as u32).map(AgentId).collect();
    nodes.sort_by_key(|&a| (std::cmp::Reverse(tree.depth[a.index()]), a));
    let mut flow = Flow::default();
    for u in nodes {
        let r = residual[u.index()];
        if r == 0 {
            continue;
        }
        let Some(p) = tree.parent(u) else {
            return Err(Error::Infeasible);
        };
        if !network.has_edge(u, p) {
            return Err(Error::Infeasible);
        }
        if r > 0 {
            flow.push(u, p, r as u64);
        } else {
            flow.push(p, u, (-r) as u64);
        }
        residual[p.index()] += r;
        residual[u.index()] = 0;
    }
    let active = flow.active_nodes(network);
    Ok(TreeFlow { flow, active })
}

/// Drops relays whose flow only touches active agents one level up, when
/// those agents are connected among themselves in `graph`; their flow is
/// rerouted along a spanning tree of that subgraph. Runs from the highest
/// level down.
pub fn prune_active(
    graph: &NeighborhoodGraph,
    tree: &NeighborhoodTree,
    network: &FlowNetwork,
    solved: &TreeFlow,
) -> TreeFlow {
    let mut flow = solved.flow.clone();
    let mut active = solved.active.clone();
    let mut candidates: Vec<AgentId> = active.iter().copied().collect();
    candidates.sort_by_key(|&a| (std::cmp::Reverse(tree.level(a)), a));
    for u in candidates {
        if network.excess(u) != 0 || !active.contains(&u) {
            continue;
        }
        let lu = tree.level(u);
        let touching: Vec<(AgentId, i64)> = flow
            .edges()
            .filter_map(|((a, b), amt)| {
                if a == u {
                    Some((b, -(amt as i64)))
                } else if b == u {
                    Some((a, amt as i64))
                } else {
                    None
                }
            })
            .collect();
        if touching
            .iter()
            .any(|&(w, _)| tree.level(w) != lu + 1 || !active.contains(&w))
        {
            continue;
        }
        let upper: Vec<AgentId> = graph
            .neighbors(u)
            .filter(|w| tree.level(*w) == lu + 1 && active.contains(w))
            .collect();
        let Some(sub_tree) = induced_spanning_tree(graph, &upper) else {
            continue;
        };

        // w's net contribution into u must now go directly to the others
        let mut excess: BTreeMap<AgentId, i64> = upper.iter().map(|&w| (w, 0)).collect();
        for &(w, into_u) in &touching {
            *excess
                .get_mut(&w)
                .expect("touching nodes are upper neighbors") += into_u;
        }
        for &(w, into_u) in &touching {
            if into_u > 0 {
                flow.push(u, w, into_u as u64);
            } else {
                flow.push(w, u, (-into_u) as u64);
            }
        }
        for (child, parent) in sub_tree {
            let r = excess[&child];
            if r > 0 {
                flow.push(child, parent, r as u64);
            } else if r < 0 {
                flow.push(parent, child, (-r) as u64);
            }
            *excess.get_mut(&parent).expect("in subtree") += r;
            excess.insert(child, 0);
        }
        active = flow.active_nodes(network);
    }
    TreeFlow { flow, active }
}

/// Child-to-parent edges of a BFS tree over `nodes` in the subgraph they
/// induce, deepest first. `None` unless that subgraph is connected.
fn induced_spanning_tree(
    graph: &NeighborhoodGraph,
    nodes: &[AgentId],
) -> Option<Vec<(AgentId, AgentId)>> {
    let &root = nodes.first()?;
    let inside: BTreeSet<AgentId> = nodes.iter().copied().collect();
    let mut seen = BTreeSet::from([root]);
    let mut order = Vec::new();
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for v in graph.neighbors(u) {
            if inside.contains(&v) && seen.insert(v) {
                order.push((v, u));
                queue.push_back(v);
            }
        }
    }
    if seen.len() != inside.len() {
        return None;
    }
    order.reverse();
    Some(order)
}

/// A batch of single-color relocations, applied one after another. Each
/// `(from, to)` pair uses 0-based positions in the necklace as it stands when
/// that move is made; the bead ends up at `to` and is handed to the owner of
/// the bead that was there.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoveBatch {
    pub moves: Vec<(usize, usize)>,
}

impl MoveBatch {
    pub fn new(moves: Vec<(usize, usize)>) -> Self {
        MoveBatch { moves }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchOptions {
    pub prune: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions { prune: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BatchStats {
    /// Agents with nonzero imbalance after the physical step (`k''`).
    pub imbalanced: usize,
    /// Beads that had to change owner (`m''`).
    pub demand: u64,
    /// Active agents in the tree flow before and after pruning (`k'`).
    pub active_before_prune: usize,
    pub active: usize,
    pub reruns: usize,
    /// The allocation was recomputed from scratch.
    pub full_resplit: bool,
}

/// Relocates a batch of same-colored beads and restores fairness.
pub fn batch_relocate(
    necklace: &mut Necklace,
    batch: &MoveBatch,
    options: BatchOptions,
) -> Result<BatchStats> {
    require_two_colors(necklace)?;
    if batch.is_empty() {
        return Ok(BatchStats::default());
    }
    let plan = plan_moves(necklace, &batch.moves)?;
    let color = necklace.color(plan[0].0);
    for &(b, _) in &plan {
        if necklace.color(b) != color {
            return Err(Error::ColorMismatch {
                expected: color,
                found: necklace.color(b),
            });
        }
    }
    for (&(bead, to_owner), &(_, to)) in plan.iter().zip(&batch.moves) {
        necklace.move_to(bead, to)?;
        necklace.reassign(&[(bead, to_owner)])?;
    }
    rebalance(necklace, color, options)
}

/// Inserts beads of one color, `positions.len()` a multiple of `k`, then
/// restores fairness under the raised quota. Positions are applied one after
/// another; each new bead joins the owner of its left neighbor (the right
/// neighbor at the head).
pub fn insert_batch(
    necklace: &mut Necklace,
    color: Color,
    positions: &[usize],
    options: BatchOptions,
) -> Result<BatchStats> {
    require_two_colors(necklace)?;
    require_exact(necklace)?;
    let k = necklace.k();
    if !positions.len().is_multiple_of(k) {
        return Err(Error::CountNotMultipleOfK {
            count: positions.len(),
            k,
        });
    }
    let mut len = necklace.len();
    for &p in positions {
        if p > len {
            return Err(Error::OutOfRange { pos: p, len });
        }
        len += 1;
    }
    if color.index() >= necklace.n() {
        return Err(Error::Invariant(format!(
            "color {} outside palette",
            color.0
        )));
    }
    for &p in positions {
        let anchor = if p == necklace.len() {
            None
        } else {
            Some(necklace.bead_at(p)?)
        };
        let neighbor = match anchor {
            Some(a) => necklace.prev(a).or(Some(a)),
            None => necklace.tail(),
        };
        let owner = neighbor.and_then(|b| necklace.owner(b));
        necklace.insert_before(anchor, color, owner)?;
    }
    rebalance(necklace, color, options)
}

/// Deletes beads of one color, `positions.len()` a multiple of `k`, applied
/// one after another, then restores fairness under the lowered quota.
pub fn delete_batch(
    necklace: &mut Necklace,
    positions: &[usize],
    options: BatchOptions,
) -> Result<BatchStats> {
    require_two_colors(necklace)?;
    require_exact(necklace)?;
    let k = necklace.k();
    if !positions.len().is_multiple_of(k) {
        return Err(Error::CountNotMultipleOfK {
            count: positions.len(),
            k,
        });
    }
    if positions.is_empty() {
        return Ok(BatchStats::default());
    }
    let mut order: Vec<BeadId> = necklace.iter().collect();
    let mut doomed = Vec::with_capacity(positions.len());
    for &p in positions {
        if p >= order.len() {
            return Err(Error::OutOfRange {
                pos: p,
                len: order.len(),
            });
        }
        doomed.push(order.remove(p));
    }
    let color = necklace.color(doomed[0]);
    for &b in &doomed {
        if necklace.color(b) != color {
            return Err(Error::ColorMismatch {
                expected: color,
                found: necklace.color(b),
            });
        }
    }
    if doomed.len() == necklace.len() {
        return Err(Error::EmptyInput);
    }
    for b in doomed {
        necklace.remove(b);
    }
    rebalance(necklace, color, options)
}

fn require_two_colors(necklace: &Necklace) -> Result<()> {
    if necklace.n() > 2 {
        return Err(Error::NotTwoColors(necklace.n()));
    }
    Ok(())
}

fn require_exact(necklace: &Necklace) -> Result<()> {
    if necklace.mode() != Mode::Exact {
        return Err(Error::Invariant(
            "batch insertion and deletion need exact mode".into(),
        ));
    }
    Ok(())
}

/// Replays the moves on a plain vector of handles: returns each moved bead
/// with the owner it will receive.
fn plan_moves(necklace: &Necklace, moves: &[(usize, usize)]) -> Result<Vec<(BeadId, AgentId)>> {
    let mut order: Vec<BeadId> = necklace.iter().collect();
    let len = order.len();
    let mut plan = Vec::with_capacity(moves.len());
    // owners already promised to moved beads
    let mut promised: BTreeMap<BeadId, AgentId> = BTreeMap::new();
    for &(from, to) in moves {
        for j in [from, to] {
            if j >= len {
                return Err(Error::OutOfRange { pos: j, len });
            }
        }
        let bead = order[from];
        let target = order[to];
        let owner = match promised.get(&target) {
            Some(&o) => o,
            None => necklace.owner(target).ok_or(Error::UnassignedBead(to))?,
        };
        promised.insert(bead, owner);
        order.remove(from);
        order.insert(to, bead);
        plan.push((bead, owner));
    }
    Ok(plan)
}

/// Per-agent surplus of `color` against the current quota.
pub fn imbalance(necklace: &Necklace, color: Color) -> Vec<i64> {
    let q = necklace.quota(color) as i64;
    necklace
        .agents()
        .map(|a| necklace.holding(a, color) as i64 - q)
        .collect()
}

fn rebalance(necklace: &mut Necklace, color: Color, options: BatchOptions) -> Result<BatchStats> {
    let excess = imbalance(necklace, color);
    let mut stats = BatchStats {
        imbalanced: excess.iter().filter(|&&e| e != 0).count(),
        demand: excess.iter().filter(|&&e| e > 0).map(|&e| e as u64).sum(),
        ..Default::default()
    };
    if stats.demand == 0 {
        return Ok(stats);
    }
    // an agent left without beads has no neighbors to trade with
    let stranded = necklace.agents().any(|a| necklace.agent_size(a) == 0);
    let tree = if stranded {
        None
    } else {
        Some(build_neighborhood_tree(necklace)?)
    };
    let Some(tree) = tree else {
        offline_split(necklace)?;
        stats.full_resplit = true;
        stats.reruns = 1;
        stats.active = necklace.k();
        return Ok(stats);
    };
    let network = FlowNetwork::on_tree(&tree, excess)?;
    let mut solved = solve_tree_flow(&network, &tree)?;
    stats.active_before_prune = solved.active.len();
    if options.prune {
        let graph = NeighborhoodGraph::from_pair_map(necklace);
        solved = prune_active(&graph, &tree, &network, &solved);
    }
    stats.active = solved.active.len();
    for group in flow_components(&solved, necklace.k()) {
        offline_split_range(necklace, &group)?;
        stats.reruns += 1;
    }
    Ok(stats)
}

/// Agents joined by positive flow, one group per connected piece, each in
/// ascending id order.
fn flow_components(solved: &TreeFlow, k: usize) -> Vec<Vec<AgentId>> {
    let mut uf = UnionFind::new(k);
    for ((u, v), _) in solved.flow.edges() {
        uf.union(u.index(), v.index());
    }
    let mut groups: BTreeMap<usize, Vec<AgentId>> = BTreeMap::new();
    for &a in &solved.active {
        groups.entry(uf.find(a.index())).or_default().push(a);
    }
    groups.into_values().filter(|g| g.len() > 1).collect()
}

impl DynamicNecklace {
    pub fn batch_relocate(
        &mut self,
        batch: &MoveBatch,
        options: BatchOptions,
    ) -> Result<BatchStats> {
        batch_relocate(self.clean_mut()?, batch, options)
    }

    pub fn insert_batch(
        &mut self,
        color: Color,
        positions: &[usize],
        options: BatchOptions,
    ) -> Result<BatchStats> {
        insert_batch(self.clean_mut()?, color, positions, options)
    }

    pub fn delete_batch(
        &mut self,
        positions: &[usize],
        options: BatchOptions,
    ) -> Result<BatchStats> {
        delete_batch(self.clean_mut()?, positions, options)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuts::verify_fair;
    use crate::graph::is_peelable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn a(i: u32) -> AgentId {
        AgentId(i - 1)
    }

    /// Owner layout whose tree is the one drawn for the worked flow example.
    pub(crate) fn figure_necklace() -> Necklace {
        let owners = [5, 4, 1, 2, 4, 3, 4, 5, 8, 6, 7, 8];
        let mut nk = Necklace::parse("RBRBRBRBRBRB", 8, Mode::Approx).unwrap();
        nk.assign_owners(&owners.map(a)).unwrap();
        nk
    }

    fn random_split(rng: &mut ChaCha8Rng, m: usize, k: usize) -> Necklace {
        let mut colors: Vec<Color> = (0..m)
            .map(|i| if i < m / 2 { Color::RED } else { Color::BLUE })
            .collect();
        for i in (1..m).rev() {
            colors.swap(i, rng.gen_range(0..=i));
        }
        let mut nk = Necklace::new(&colors, k, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
        nk
    }

    fn check(nk: &Necklace) {
        assert!(verify_fair(nk).is_fair());
        assert!(
            nk.cut_count() <= 2 * (nk.k() - 1),
            "{} cuts",
            nk.cut_count()
        );
        assert!(is_peelable(nk).unwrap());
    }

    #[test]
    fn figure_tree() {
        let tree = build_neighborhood_tree(&figure_necklace()).unwrap();
        let expect: Vec<(AgentId, AgentId)> =
            vec![(1, 4), (2, 4), (3, 4), (4, 5), (5, 8), (6, 8), (7, 8)]
                .into_iter()
                .map(|(x, y)| (a(x), a(y)))
                .collect();
        assert_eq!(tree.edges(), expect);
        assert_eq!(tree.dropped(), &[(a(1), a(2)), (a(6), a(7))]);
        assert!(tree.restored().is_empty());
        assert_eq!(tree.levels(), &[3, 3, 3, 2, 1, 2, 2, 1]);
        assert_eq!(tree.level1(), &[a(5), a(8)]);
        assert!(tree.is_spanning_tree());
    }

    #[test]
    fn single_agent_tree() {
        let mut nk = Necklace::parse("RB", 1, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
        let tree = build_neighborhood_tree(&nk).unwrap();
        assert_eq!(tree.levels(), &[1]);
        assert!(tree.edges().is_empty());
        assert!(tree.is_spanning_tree());
    }

    #[test]
    fn random_trees_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let k = rng.gen_range(2..=8);
            let m = 2 * k * rng.gen_range(1..=5);
            let nk = random_split(&mut rng, m, k);
            assert!(build_neighborhood_tree(&nk).unwrap().is_spanning_tree());
        }
    }

    #[test]
    fn unpeelable_is_rejected() {
        let mut nk = Necklace::parse("RBRB", 2, Mode::Exact).unwrap();
        nk.assign_owners(&[a(1), a(2), a(1), a(2)]).unwrap();
        assert_eq!(
            build_neighborhood_tree(&nk).unwrap_err(),
            Error::NotPeelable
        );
    }

    fn example_network() -> (NeighborhoodTree, FlowNetwork) {
        let tree = build_neighborhood_tree(&figure_necklace()).unwrap();
        let mut excess = vec![0i64; 8];
        excess[0] = 1;
        excess[4] = 1;
        excess[2] = -1;
        excess[5] = -1;
        let net = FlowNetwork::on_tree(&tree, excess).unwrap();
        (tree, net)
    }

    #[test]
    fn example_network_terminals() {
        let (_, net) = example_network();
        assert_eq!(net.sources(), vec![a(1), a(5)]);
        assert_eq!(net.sinks(), vec![a(3), a(6)]);
        assert_eq!(net.demand(), 2);
        assert!(net.sources().iter().all(|&s| net.source_capacity(s) == 1));
        assert!(net.sinks().iter().all(|&s| net.sink_capacity(s) == 1));
    }

    #[test]
    fn zero_batch() {
        assert_eq!(
            FlowNetwork::new(vec![0, 0], &[]).unwrap_err(),
            Error::ZeroBatch
        );
    }

    #[test]
    fn example_tree_flow() {
        let (tree, net) = example_network();
        let solved = solve_tree_flow(&net, &tree).unwrap();
        let edges: Vec<_> = solved.flow.edges().collect();
        assert_eq!(
            edges,
            vec![
                ((a(1), a(4)), 1),
                ((a(4), a(3)), 1),
                ((a(5), a(8)), 1),
                ((a(8), a(6)), 1)
            ]
        );
        assert!(solved.flow.is_feasible(&net));
        let active: Vec<AgentId> = solved.active.iter().copied().collect();
        assert_eq!(active, vec![a(1), a(3), a(4), a(5), a(6), a(8)]);
    }

    #[test]
    fn adjacent_source_and_sink() {
        let mut nk = Necklace::parse("RB", 2, Mode::Approx).unwrap();
        nk.assign_owners(&[a(1), a(2)]).unwrap();
        let tree = build_neighborhood_tree(&nk).unwrap();
        let net = FlowNetwork::on_tree(&tree, vec![1, -1]).unwrap();
        let solved = solve_tree_flow(&net, &tree).unwrap();
        assert_eq!(
            solved.flow.edges().collect::<Vec<_>>(),
            vec![((a(1), a(2)), 1)]
        );
        assert_eq!(solved.active.len(), 2);
    }

    #[test]
    fn example_pruning_changes_nothing() {
        let (tree, net) = example_network();
        let solved = solve_tree_flow(&net, &tree).unwrap();
        let graph = NeighborhoodGraph::from_pair_map(&figure_necklace());
        assert_eq!(prune_active(&graph, &tree, &net, &solved), solved);
    }

    #[test]
    fn relay_with_adjacent_upper_neighbors_is_pruned() {
        // R X Y R Z: R encloses X and Y, which touch each other
        let (x, y, r, z) = (a(1), a(2), a(3), a(4));
        let mut nk = Necklace::parse("RBRBR", 4, Mode::Approx).unwrap();
        nk.assign_owners(&[r, x, y, r, z]).unwrap();
        let tree = build_neighborhood_tree(&nk).unwrap();
        assert_eq!(tree.level(x), 2);
        assert!(!tree.has_edge(x, y));
        let net = FlowNetwork::on_tree(&tree, vec![1, -1, 0, 0]).unwrap();
        let solved = solve_tree_flow(&net, &tree).unwrap();
        assert_eq!(solved.active.len(), 3);
        let graph = NeighborhoodGraph::from_pair_map(&nk);
        let pruned = prune_active(&graph, &tree, &net, &solved);
        assert_eq!(pruned.active.len(), 2);
        assert!(!pruned.active.contains(&r));
        assert!(pruned.flow.is_feasible_in(&graph, &[1, -1, 0, 0]));
        assert_eq!(pruned.flow.get(x, y), 1);
        let empty = TreeFlow {
            flow: Flow::default(),
            active: BTreeSet::new(),
        };
        assert_eq!(prune_active(&graph, &tree, &net, &empty).active.len(), 0);
    }

    #[test]
    fn single_move_batch() {
        let mut nk = Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
        let stats = batch_relocate(
            &mut nk,
            &MoveBatch::new(vec![(0, 11)]),
            BatchOptions::default(),
        )
        .unwrap();
        assert_eq!(stats.demand, 1);
        check(&nk);
    }

    #[test]
    fn mixed_colors_are_rejected_untouched() {
        let mut nk = Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
        let before = nk.assigned_owners().unwrap();
        let err = batch_relocate(
            &mut nk,
            &MoveBatch::new(vec![(0, 5), (1, 7)]),
            BatchOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ColorMismatch { .. }));
        assert_eq!(nk.assigned_owners().unwrap(), before);
        assert_eq!(
            nk.colors(),
            Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact)
                .unwrap()
                .colors()
        );
    }

    #[test]
    fn crossing_moves_need_no_flow() {
        // A1 = RB RB, A2 = RB RB; one red each way
        let mut nk = Necklace::parse("RBRBRBRB", 2, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
        let stats = batch_relocate(
            &mut nk,
            &MoveBatch::new(vec![(0, 5), (6, 1)]),
            BatchOptions::default(),
        )
        .unwrap();
        assert_eq!(stats.imbalanced, 0);
        assert_eq!(stats.reruns, 0);
        check(&nk);
    }

    #[test]
    fn random_batches() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut nk = random_split(&mut rng, 64, 8);
        for _ in 0..100 {
            let color = if rng.gen_bool(0.5) {
                Color::RED
            } else {
                Color::BLUE
            };
            let mut moves = Vec::new();
            let mut order = nk.colors();
            while moves.len() < 8 {
                let from = rng.gen_range(0..64);
                let to = rng.gen_range(0..64);
                if order[from] == color && from != to {
                    let c = order.remove(from);
                    order.insert(to, c);
                    moves.push((from, to));
                }
            }
            batch_relocate(&mut nk, &MoveBatch::new(moves), BatchOptions::default()).unwrap();
            check(&nk);
        }
    }

    #[test]
    fn insertion_into_distinct_agents_needs_no_flow() {
        let mut nk = Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
        // owners A2 A2 A1 A1 A1 A1 A2 A2 A3 A3 A3 A3; insert inside A2, A1, A3
        let stats =
            insert_batch(&mut nk, Color::RED, &[1, 4, 11], BatchOptions::default()).unwrap();
        assert_eq!(stats.imbalanced, 0);
        check(&nk);
    }

    #[test]
    fn insertion_into_one_agent_makes_a_single_source() {
        let mut nk = Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
        let mut probe = nk.clone();
        for p in [3, 3, 3] {
            let anchor = probe.bead_at(p).unwrap();
            probe
                .insert_before(Some(anchor), Color::BLUE, Some(a(1)))
                .unwrap();
        }
        let excess = imbalance(&probe, Color::BLUE);
        assert_eq!(excess, vec![2, -1, -1]);
        let stats =
            insert_batch(&mut nk, Color::BLUE, &[3, 3, 3], BatchOptions::default()).unwrap();
        assert_eq!(stats.imbalanced, 3);
        assert_eq!(stats.demand, 2);
        check(&nk);
    }

    #[test]
    fn insertion_count_must_be_multiple_of_k() {
        let mut nk = Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
        assert_eq!(
            insert_batch(&mut nk, Color::RED, &[1, 2], BatchOptions::default()).unwrap_err(),
            Error::CountNotMultipleOfK { count: 2, k: 3 }
        );
    }

    #[test]
    fn deletion_one_per_agent_and_all_from_one() {
        let mut nk = Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
        let mut one_each = nk.clone();
        // reds at 0 (A2), 3 (A1), 8 (A3); positions shift after each delete
        let stats = delete_batch(&mut one_each, &[0, 2, 6], BatchOptions::default()).unwrap();
        assert_eq!(stats.imbalanced, 0);
        check(&one_each);

        let mut nk = crate::offline::adversarial_necklace(3, 18).unwrap();
        offline_split(&mut nk).unwrap();
        let victim = nk
            .agents()
            .find(|&ag| nk.holding(ag, Color::RED) == 3)
            .unwrap();
        let mut positions: Vec<usize> = nk
            .chain(victim)
            .filter(|&b| nk.color(b) == Color::RED)
            .map(|b| nk.position(b))
            .collect();
        positions.reverse();
        let mut probe = nk.clone();
        for &p in &positions {
            let b = probe.bead_at(p).unwrap();
            probe.remove(b);
        }
        let excess = imbalance(&probe, Color::RED);
        let sinks: Vec<usize> = (0..3).filter(|&i| excess[i] < 0).collect();
        assert_eq!(sinks, vec![victim.index()]);
        assert_eq!(excess[victim.index()], -2);
        let stats = delete_batch(&mut nk, &positions, BatchOptions::default()).unwrap();
        assert_eq!(stats.demand, 2);
        check(&nk);
    }

    #[test]
    fn random_insertions_and_deletions() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut nk = random_split(&mut rng, 64, 4);
        for step in 0..100 {
            let color = if rng.gen_bool(0.5) {
                Color::RED
            } else {
                Color::BLUE
            };
            if step % 2 == 0 {
                let mut len = nk.len();
                let positions: Vec<usize> = (0..4)
                    .map(|_| {
                        let p = rng.gen_range(0..=len);
                        len += 1;
                        p
                    })
                    .collect();
                insert_batch(&mut nk, color, &positions, BatchOptions::default()).unwrap();
            } else {
                let mut colors = nk.colors();
                let mut positions = Vec::new();
                while positions.len() < 4 {
                    let p = rng.gen_range(0..colors.len());
                    if colors[p] == color {
                        colors.remove(p);
                        positions.push(p);
                    }
                }
                delete_batch(&mut nk, &positions, BatchOptions::default()).unwrap();
            }
            check(&nk);
        }
    }
}
