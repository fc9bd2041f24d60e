//! Single-bead updates for two-color necklaces.
//!
//! Positions are 0-based. A relocation from `j1` to `j2` leaves the bead at
//! position `j2` of the updated necklace, so `swap(j)` and `relocate(j, j + 1)`
//! describe the same physical move.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::graph::NeighborhoodGraph;
use crate::necklace::{AgentId, BeadId, Color, Necklace};
use crate::offline::{baseline_split, offline_split, offline_split_range};

/// What an update did, for reports and tests.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateStats {
    /// Agents on the chosen path (`k'`), or agents re-split.
    pub agents: usize,
    /// Calls into the offline splitter.
    pub reruns: usize,
    /// Single-bead ownership transfers across good edges.
    pub transfers: usize,
    /// Weight of the colored path; 0 when only good edges were used.
    pub path_weight: usize,
    pub rebuilt: bool,
}

/// Exchanges the beads at `j` and `j + 1`.
pub fn swap(necklace: &mut Necklace, j: usize) -> Result<UpdateStats> {
    let len = necklace.len();
    if j + 1 >= len {
        return Err(Error::OutOfRange { pos: j + 1, len });
    }
    let a = necklace.bead_at(j)?;
    let b = necklace.next(a).expect("j + 1 in range");
    let (oa, ob) = owners_of(necklace, a, b)?;
    let mut stats = UpdateStats {
        agents: 1,
        ..Default::default()
    };
    if necklace.color(a) == necklace.color(b) {
        // identical colors: the owner sequence must stay put
        necklace.swap_positions(a, b);
        if oa != ob {
            necklace.reassign(&[(a, ob), (b, oa)])?;
        }
        return Ok(stats);
    }
    necklace.swap_positions(a, b);
    if oa != ob {
        let mut pair = [oa, ob];
        pair.sort();
        offline_split_range(necklace, &pair)?;
        stats.agents = 2;
        stats.reruns = 1;
    }
    Ok(stats)
}

/// Moves the bead at `j1` to `j2` and re-splits the agents on a shortest path
/// between the old and new owner regions.
pub fn relocate_path(necklace: &mut Necklace, j1: usize, j2: usize) -> Result<UpdateStats> {
    let (bead, a1, a2) = relocation_endpoints(necklace, j1, j2)?;
    let graph = NeighborhoodGraph::from_pair_map(necklace);
    let path = graph
        .shortest_path(a1, a2)
        .ok_or_else(|| Error::Invariant(format!("no path from {a1} to {a2}")))?;
    necklace.move_to(bead, j2)?;
    offline_split_range(necklace, &path)?;
    Ok(UpdateStats {
        agents: path.len(),
        reruns: 1,
        ..Default::default()
    })
}

/// Directed neighborhood graph for one color. The edge `u -> v` is good
/// (weight 0) when some boundary between `u` and `v` has a bead of that color
/// on `u`'s side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredDigraph {
    color: Color,
    out: Vec<BTreeMap<AgentId, Arc>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub weight: u8,
    /// Leftmost qualifying `(tail bead, head bead)` pair of a good edge.
    pub witness: Option<(BeadId, BeadId)>,
}

impl ColoredDigraph {
    /// Reads boundaries off the agent-pair cut map; cost is linear in the
    /// number of cuts.
    pub fn build(necklace: &Necklace, color: Color) -> Result<Self> {
        if !necklace.is_assigned() {
            let pos = necklace
                .owners()
                .iter()
                .position(|o| o.is_none())
                .unwrap_or(0);
            return Err(Error::UnassignedBead(pos));
        }
        let mut out = vec![BTreeMap::new(); necklace.k()];
        let pairs: Vec<(AgentId, AgentId)> = necklace.cut_pairs().map(|(p, _)| p).collect();
        for (u, v) in pairs {
            for left in necklace.pair_cuts(u, v) {
                let right = necklace.next(left).expect("cut has a right bead");
                let lo = necklace.owner(left).expect("assigned");
                let ro = necklace.owner(right).expect("assigned");
                Self::offer(&mut out, necklace, color, (lo, left), (ro, right));
                Self::offer(&mut out, necklace, color, (ro, right), (lo, left));
            }
        }
        Ok(ColoredDigraph { color, out })
    }

    fn offer(
        out: &mut [BTreeMap<AgentId, Arc>],
        necklace: &Necklace,
        color: Color,
        (tail, tb): (AgentId, BeadId),
        (head, hb): (AgentId, BeadId),
    ) {
        let good = necklace.color(tb) == color;
        let arc = out[tail.index()].entry(head).or_insert(Arc {
            weight: 1,
            witness: None,
        });
        if good {
            arc.weight = 0;
            let better = match arc.witness {
                None => true,
                Some((old, _)) => necklace.label(tb) < necklace.label(old),
            };
            if better {
                arc.witness = Some((tb, hb));
            }
        }
    }

    pub fn color(&self) -> Color {
        self.color
    }

    pub fn arc(&self, u: AgentId, v: AgentId) -> Option<Arc> {
        self.out[u.index()].get(&v).copied()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(|m| m.len()).sum()
    }

    pub fn out_edges(&self, u: AgentId) -> impl Iterator<Item = (AgentId, Arc)> + '_ {
        self.out[u.index()].iter().map(|(&v, &a)| (v, a))
    }

    /// 0/1-weighted shortest path with a deque, neighbors in ascending id
    /// order. Returns the agents from `from` to `to` and the path weight.
    pub fn shortest_path(&self, from: AgentId, to: AgentId) -> Option<(Vec<AgentId>, usize)> {
        let k = self.out.len();
        let mut dist = vec![usize::MAX; k];
        let mut parent: Vec<Option<AgentId>> = vec![None; k];
        let mut done = vec![false; k];
        dist[from.index()] = 0;
        let mut deque = VecDeque::from([from]);
        while let Some(u) = deque.pop_front() {
            if done[u.index()] {
                continue;
            }
            done[u.index()] = true;
            if u == to {
                break;
            }
            let du = dist[u.index()];
            for (v, arc) in self.out_edges(u) {
                let dv = du + arc.weight as usize;
                if dv < dist[v.index()] {
                    dist[v.index()] = dv;
                    parent[v.index()] = Some(u);
                    if arc.weight == 0 {
                        deque.push_front(v);
                    } else {
                        deque.push_back(v);
                    }
                }
            }
        }
        if dist[to.index()] == usize::MAX {
            return None;
        }
        let mut path = vec![to];
        let mut cur = to;
        while let Some(p) = parent[cur.index()] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some((path, dist[to.index()]))
    }
}

/// Moves the bead at `j1` to `j2`, hands it to the owner of the target region
/// and walks the surplus back to the old owner: good edges pass one bead of
/// the moved color across a cut, maximal runs of bad edges are re-split.
pub fn relocate_colorpath(necklace: &mut Necklace, j1: usize, j2: usize) -> Result<UpdateStats> {
    let (bead, a1, a2) = relocation_endpoints(necklace, j1, j2)?;
    let color = necklace.color(bead);
    necklace.move_to(bead, j2)?;
    if a1 == a2 {
        return Ok(UpdateStats {
            agents: 1,
            ..Default::default()
        });
    }
    necklace.reassign(&[(bead, a2)])?;
    let digraph = ColoredDigraph::build(necklace, color)?;
    let Some((path, weight)) = digraph.shortest_path(a2, a1) else {
        // a1 gave away its last bead and fell out of the graph
        necklace.reassign(&[(bead, a1)])?;
        let graph = NeighborhoodGraph::from_pair_map(necklace);
        let path = graph
            .shortest_path(a1, a2)
            .ok_or_else(|| Error::Invariant(format!("no path from {a1} to {a2}")))?;
        offline_split_range(necklace, &path)?;
        return Ok(UpdateStats {
            agents: path.len(),
            reruns: 1,
            ..Default::default()
        });
    };

    let mut stats = UpdateStats {
        agents: path.len(),
        path_weight: weight,
        ..Default::default()
    };
    let mut transfers = Vec::new();
    for w in path.windows(2) {
        let arc = digraph.arc(w[0], w[1]).expect("path edge");
        if let Some((tail_bead, _)) = arc.witness {
            transfers.push((tail_bead, w[1]));
        }
    }
    for &(b, to) in &transfers {
        necklace.reassign(&[(b, to)])?;
        stats.transfers += 1;
    }
    // maximal runs of bad edges, as agent slices including both endpoints
    let mut i = 0;
    while i + 1 < path.len() {
        if digraph.arc(path[i], path[i + 1]).expect("path edge").weight == 0 {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < path.len()
            && digraph.arc(path[i], path[i + 1]).expect("path edge").weight == 1
        {
            i += 1;
        }
        offline_split_range(necklace, &path[start..=i])?;
        stats.reruns += 1;
    }
    Ok(stats)
}

/// Extra-cut allowance for fence relocations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FencePolicy {
    budget: usize,
    used: usize,
    dirty: bool,
    rebuilds: usize,
}

impl FencePolicy {
    /// `2k` extra cuts for two colors, `2kn` otherwise.
    pub fn for_necklace(necklace: &Necklace) -> Self {
        let (k, n) = (necklace.k(), necklace.n());
        let budget = if n <= 2 { 2 * k } else { 2 * k * n };
        Self::with_budget(budget)
    }

    pub fn with_budget(budget: usize) -> Self {
        FencePolicy {
            budget,
            used: 0,
            dirty: false,
            rebuilds: 0,
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty
    }

    pub fn rebuilds(&self) -> usize {
        self.rebuilds
    }
}

/// Splits from scratch: the exact splitter for two colors, the round-robin
/// baseline otherwise.
pub fn resplit(necklace: &mut Necklace) -> Result<usize> {
    if necklace.n() <= 2 {
        offline_split(necklace)
    } else {
        baseline_split(necklace)
    }
}

/// Moves the bead at `j1` to `j2` without changing any owner. The cuts this
/// adds are charged to `policy`; once the charge would pass the budget the
/// necklace is split again from scratch.
pub fn relocate_fence(
    necklace: &mut Necklace,
    j1: usize,
    j2: usize,
    policy: &mut FencePolicy,
) -> Result<UpdateStats> {
    let (bead, _, _) = relocation_endpoints(necklace, j1, j2)?;
    let before = necklace.cut_count();
    necklace.move_to(bead, j2)?;
    let added = necklace.cut_count().saturating_sub(before);
    let mut stats = UpdateStats {
        agents: 1,
        ..Default::default()
    };
    if policy.used + added > policy.budget {
        resplit(necklace)?;
        policy.used = 0;
        policy.dirty = false;
        policy.rebuilds += 1;
        stats.rebuilt = true;
        stats.reruns = 1;
        stats.agents = necklace.k();
    } else {
        policy.used += added;
        policy.dirty = true;
    }
    Ok(stats)
}

/// Necklace plus fence bookkeeping. Operations that rely on the offline
/// structure refuse to run while fenced cuts are outstanding.
#[derive(Clone, Debug)]
pub struct DynamicNecklace {
    necklace: Necklace,
    policy: FencePolicy,
}

impl DynamicNecklace {
    /// Splits `necklace` from scratch and wraps it.
    pub fn split(mut necklace: Necklace) -> Result<Self> {
        resplit(&mut necklace)?;
        Ok(Self::from_split(necklace))
    }

    /// Wraps an already allocated necklace.
    pub fn from_split(necklace: Necklace) -> Self {
        let policy = FencePolicy::for_necklace(&necklace);
        DynamicNecklace { necklace, policy }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.policy.budget = budget;
        self
    }

    pub fn necklace(&self) -> &Necklace {
        &self.necklace
    }

    pub fn policy(&self) -> &FencePolicy {
        &self.policy
    }

    pub fn into_inner(self) -> Necklace {
        self.necklace
    }

    pub(crate) fn clean_mut(&mut self) -> Result<&mut Necklace> {
        if self.policy.dirty {
            return Err(Error::DirtyState);
        }
        Ok(&mut self.necklace)
    }

    pub fn swap(&mut self, j: usize) -> Result<UpdateStats> {
        swap(self.clean_mut()?, j)
    }

    pub fn relocate_path(&mut self, j1: usize, j2: usize) -> Result<UpdateStats> {
        relocate_path(self.clean_mut()?, j1, j2)
    }

    pub fn relocate_colorpath(&mut self, j1: usize, j2: usize) -> Result<UpdateStats> {
        relocate_colorpath(self.clean_mut()?, j1, j2)
    }

    pub fn relocate_fence(&mut self, j1: usize, j2: usize) -> Result<UpdateStats> {
        relocate_fence(&mut self.necklace, j1, j2, &mut self.policy)
    }

    /// Splits from scratch and clears the fence state.
    pub fn rebuild(&mut self) -> Result<usize> {
        let cuts = resplit(&mut self.necklace)?;
        self.policy.used = 0;
        self.policy.dirty = false;
        self.policy.rebuilds += 1;
        Ok(cuts)
    }
}

fn owners_of(necklace: &Necklace, a: BeadId, b: BeadId) -> Result<(AgentId, AgentId)> {
    let oa = necklace
        .owner(a)
        .ok_or_else(|| Error::UnassignedBead(necklace.position(a)))?;
    let ob = necklace
        .owner(b)
        .ok_or_else(|| Error::UnassignedBead(necklace.position(b)))?;
    Ok((oa, ob))
}

fn relocation_endpoints(
    necklace: &Necklace,
    j1: usize,
    j2: usize,
) -> Result<(BeadId, AgentId, AgentId)> {
    let len = necklace.len();
    for j in [j1, j2] {
        if j >= len {
            return Err(Error::OutOfRange { pos: j, len });
        }
    }
    let bead = necklace.bead_at(j1)?;
    let target = necklace.bead_at(j2)?;
    let (a1, a2) = owners_of(necklace, bead, target)?;
    Ok((bead, a1, a2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuts::{derive_cuts, verify_fair};
    use crate::graph::is_peelable;
    use crate::necklace::Mode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ids(v: &[u32]) -> Vec<AgentId> {
        v.iter().map(|&a| AgentId(a)).collect()
    }

    fn example() -> Necklace {
        let mut nk = Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
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

    fn fair_2agent_splits(colors: &[Color]) -> Vec<Vec<usize>> {
        // every owner pattern over two agents with equal color shares
        let len = colors.len();
        let reds = colors.iter().filter(|&&c| c == Color::RED).count();
        (0u32..1 << len)
            .map(|mask| {
                (0..len)
                    .map(|i| (mask >> i & 1) as usize)
                    .collect::<Vec<_>>()
            })
            .filter(|o| {
                let r0 = o
                    .iter()
                    .zip(colors)
                    .filter(|(&a, &c)| a == 0 && c == Color::RED)
                    .count();
                let n0 = o.iter().filter(|&&a| a == 0).count();
                2 * r0 == reds && 2 * n0 == len
            })
            .collect()
    }

    fn check(nk: &Necklace) {
        assert!(verify_fair(nk).is_fair());
        assert!(nk.cut_count() <= 2 * (nk.k() - 1));
        assert!(is_peelable(nk).unwrap());
        assert_eq!(derive_cuts(nk).unwrap().len(), nk.cut_count());
        nk.check_derived().unwrap();
    }

    #[test]
    fn swap_within_one_owner_keeps_cuts() {
        let mut nk = example();
        let before = derive_cuts(&nk).unwrap();
        // 1-based positions 5 and 6, both A1
        swap(&mut nk, 4).unwrap();
        assert_eq!(derive_cuts(&nk).unwrap(), before);
        assert_eq!(nk.colors()[4..6], [Color::BLUE, Color::RED]);
    }

    #[test]
    fn swap_across_cut_reruns_both_agents() {
        let mut nk = example();
        // 1-based 8 and 9: B of A2, R of A3
        let stats = swap(&mut nk, 7).unwrap();
        assert_eq!(stats.reruns, 1);
        check(&nk);
        assert!(nk.cut_count() <= 4);
        let sub: Vec<usize> = (0..12)
            .filter(|&p| {
                let o = nk.owners()[p].unwrap();
                o == AgentId(1) || o == AgentId(2)
            })
            .collect();
        let colors: Vec<Color> = sub.iter().map(|&p| nk.colors()[p]).collect();
        let owners: Vec<usize> = sub
            .iter()
            .map(|&p| nk.owners()[p].unwrap().index() - 1)
            .collect();
        assert!(fair_2agent_splits(&colors).contains(&owners));
        let internal = owners.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(internal <= 2);
    }

    #[test]
    fn random_swap_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut nk = random_split(&mut rng, 48, 4);
        for _ in 0..100 {
            let j = rng.gen_range(0..47);
            swap(&mut nk, j).unwrap();
            check(&nk);
        }
    }

    #[test]
    fn swap_out_of_range() {
        let mut nk = example();
        assert_eq!(
            swap(&mut nk, 11).unwrap_err(),
            Error::OutOfRange { pos: 12, len: 12 }
        );
    }

    #[test]
    fn path_within_one_agent_is_local() {
        let mut nk = example();
        let before = nk.cut_count();
        let stats = relocate_path(&mut nk, 2, 5).unwrap();
        assert_eq!(stats.agents, 1);
        assert_eq!(nk.cut_count(), before);
        check(&nk);
    }

    #[test]
    fn path_example_moves_first_bead_to_the_end() {
        let mut nk = example();
        let stats = relocate_path(&mut nk, 0, 11).unwrap();
        assert_eq!(stats.agents, 2);
        check(&nk);
        assert!(nk.cut_count() <= 4);
        let sub = nk.agent_beads(&ids(&[1, 2]));
        assert_eq!(sub.len(), 8);
        let colors: Vec<Color> = sub.iter().map(|&b| nk.color(b)).collect();
        let owners: Vec<usize> = sub
            .iter()
            .map(|&b| nk.owner(b).unwrap().index() - 1)
            .collect();
        assert!(fair_2agent_splits(&colors).contains(&owners));
    }

    #[test]
    fn random_path_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut nk = random_split(&mut rng, 64, 8);
        for _ in 0..200 {
            let j1 = rng.gen_range(0..64);
            let j2 = rng.gen_range(0..64);
            if j1 != j2 {
                relocate_path(&mut nk, j1, j2).unwrap();
                check(&nk);
            }
        }
    }

    #[test]
    fn digraph_two_agents() {
        let mut nk = Necklace::parse("RB", 2, Mode::Approx).unwrap();
        nk.assign_owners(&ids(&[0, 1])).unwrap();
        let g = ColoredDigraph::build(&nk, Color::RED).unwrap();
        assert_eq!(g.arc(AgentId(0), AgentId(1)).unwrap().weight, 0);
        assert_eq!(g.arc(AgentId(1), AgentId(0)).unwrap().weight, 1);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn digraph_single_agent() {
        let mut nk = Necklace::parse("RBRB", 1, Mode::Exact).unwrap();
        offline_split(&mut nk).unwrap();
        assert_eq!(
            ColoredDigraph::build(&nk, Color::RED).unwrap().edge_count(),
            0
        );
    }

    #[test]
    fn digraph_matches_boundary_scan() {
        let nk = example();
        let g = ColoredDigraph::build(&nk, Color::RED).unwrap();
        let owners = nk.assigned_owners().unwrap();
        let colors = nk.colors();
        let mut expect: BTreeMap<(AgentId, AgentId), u8> = BTreeMap::new();
        for j in 0..owners.len() - 1 {
            let (u, v) = (owners[j], owners[j + 1]);
            if u == v {
                continue;
            }
            for (t, h, tc) in [(u, v, colors[j]), (v, u, colors[j + 1])] {
                let w = expect.entry((t, h)).or_insert(1);
                if tc == Color::RED {
                    *w = 0;
                }
            }
        }
        assert_eq!(g.edge_count(), expect.len());
        for ((t, h), w) in expect {
            assert_eq!(g.arc(t, h).unwrap().weight, w, "{t}->{h}");
        }
        assert!(g.edge_count() <= 2 * nk.cut_count());
    }

    #[test]
    fn colorpath_single_good_edge() {
        let mut nk2 = Necklace::parse("RBRB", 2, Mode::Exact).unwrap();
        nk2.assign_owners(&ids(&[0, 0, 1, 1])).unwrap();
        let stats = relocate_colorpath(&mut nk2, 0, 3).unwrap();
        assert_eq!(stats.transfers, 1);
        assert_eq!(stats.reruns, 0);
        assert_eq!(stats.path_weight, 0);
        check(&nk2);
        assert_eq!(
            nk2.colors(),
            vec![Color::BLUE, Color::RED, Color::BLUE, Color::RED]
        );
        assert_eq!(nk2.assigned_owners().unwrap(), ids(&[0, 0, 1, 1]));
    }

    #[test]
    fn colorpath_within_one_agent() {
        let mut nk = example();
        let before = derive_cuts(&nk).unwrap();
        relocate_colorpath(&mut nk, 2, 4).unwrap();
        assert_eq!(derive_cuts(&nk).unwrap(), before);
    }

    #[test]
    fn random_colorpath_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut nk = random_split(&mut rng, 48, 4);
        for _ in 0..100 {
            let j1 = rng.gen_range(0..48);
            let j2 = rng.gen_range(0..48);
            if j1 != j2 {
                relocate_colorpath(&mut nk, j1, j2).unwrap();
                check(&nk);
            }
        }
    }

    #[test]
    fn fence_next_to_own_bead_needs_one_cut() {
        let mut nk = Necklace::parse("RBRBRBRB", 2, Mode::Exact).unwrap();
        nk.assign_owners(&ids(&[0, 0, 1, 1, 1, 1, 0, 0])).unwrap();
        let mut policy = FencePolicy::for_necklace(&nk);
        let bead = nk.bead_at(0).unwrap();
        relocate_fence(&mut nk, 0, 5, &mut policy).unwrap();
        assert_eq!(
            nk.assigned_owners().unwrap(),
            ids(&[0, 1, 1, 1, 1, 0, 0, 0])
        );
        let fences = [nk.prev(bead), nk.next(bead)]
            .into_iter()
            .flatten()
            .filter(|&b| nk.owner(b) != nk.owner(bead))
            .count();
        assert_eq!(fences, 1);
        assert_eq!(policy.used(), 0);
        assert!(verify_fair(&nk).is_fair());

        // dropped inside a foreign run: two fences
        let mut policy = FencePolicy::for_necklace(&nk);
        let before = nk.cut_count();
        relocate_fence(&mut nk, 6, 2, &mut policy).unwrap();
        assert_eq!(nk.cut_count(), before + 2);
        assert_eq!(policy.used(), 2);
        assert!(policy.is_dirty());
    }

    #[test]
    fn fence_bound_and_rebuild() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = 4;
        let mut dn = DynamicNecklace::split(random_split(&mut rng, 48, k)).unwrap();
        let mut r = 0;
        for _ in 0..200 {
            let j1 = rng.gen_range(0..48);
            let j2 = rng.gen_range(0..48);
            if j1 == j2 {
                continue;
            }
            let stats = dn.relocate_fence(j1, j2).unwrap();
            assert!(verify_fair(dn.necklace()).is_fair());
            if stats.rebuilt {
                r = 0;
                assert!(dn.necklace().cut_count() <= 2 * (k - 1));
                assert!(!dn.policy().is_dirty());
            } else {
                r += 1;
                assert!(dn.necklace().cut_count() <= 2 * (k + r - 1));
                assert!(dn.policy().used() <= dn.policy().budget());
                assert_eq!(dn.swap(0).unwrap_err(), Error::DirtyState);
            }
        }
        assert!(dn.policy().rebuilds() > 0);
    }
}
