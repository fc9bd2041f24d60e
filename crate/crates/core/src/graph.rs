//! Neighborhood graph over agents and the peeling test for offline-shaped
//! allocations.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::necklace::{AgentId, Necklace};

/// Undirected graph with an edge between agents owning adjacent beads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborhoodGraph {
    adj: Vec<BTreeSet<AgentId>>,
}

impl NeighborhoodGraph {
    pub fn with_agents(k: usize) -> Self {
        NeighborhoodGraph {
            adj: vec![BTreeSet::new(); k],
        }
    }

    /// Full scan of adjacent bead pairs.
    pub fn build(necklace: &Necklace) -> Result<Self> {
        let owners = necklace.assigned_owners()?;
        let mut g = Self::with_agents(necklace.k());
        for w in owners.windows(2) {
            g.add_edge(w[0], w[1]);
        }
        Ok(g)
    }

    /// Reads the edge set off the necklace's agent-pair cut map.
    pub fn from_pair_map(necklace: &Necklace) -> Self {
        let mut g = Self::with_agents(necklace.k());
        for ((a, b), _) in necklace.cut_pairs() {
            g.add_edge(a, b);
        }
        g
    }

    /// Drops every edge incident to `agents` and re-derives them by walking
    /// only those agents' bead chains.
    pub fn partial_rebuild(&mut self, necklace: &Necklace, agents: &[AgentId]) -> Result<()> {
        for &a in agents {
            let nbrs: Vec<AgentId> = self.adj[a.index()].iter().copied().collect();
            for b in nbrs {
                self.adj[b.index()].remove(&a);
            }
            self.adj[a.index()].clear();
        }
        for &a in agents {
            for bead in necklace.chain(a) {
                for nb in [necklace.prev(bead), necklace.next(bead)]
                    .into_iter()
                    .flatten()
                {
                    let pos = necklace.position(nb);
                    let other = necklace.owner(nb).ok_or(Error::UnassignedBead(pos))?;
                    self.add_edge(a, other);
                }
            }
        }
        Ok(())
    }

    pub fn add_edge(&mut self, a: AgentId, b: AgentId) {
        if a != b {
            self.adj[a.index()].insert(b);
            self.adj[b.index()].insert(a);
        }
    }

    pub fn remove_edge(&mut self, a: AgentId, b: AgentId) {
        self.adj[a.index()].remove(&b);
        self.adj[b.index()].remove(&a);
    }

    pub fn has_edge(&self, a: AgentId, b: AgentId) -> bool {
        self.adj[a.index()].contains(&b)
    }

    pub fn neighbors(&self, a: AgentId) -> impl Iterator<Item = AgentId> + '_ {
        self.adj[a.index()].iter().copied()
    }

    pub fn degree(&self, a: AgentId) -> usize {
        self.adj[a.index()].len()
    }

    pub fn agent_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(AgentId, AgentId)> {
        let mut out = Vec::new();
        for (a, nbrs) in self.adj.iter().enumerate() {
            let a = AgentId(a as u32);
            for &b in nbrs {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.adj.is_empty() {
            return true;
        }
        self.distances(AgentId(0)).iter().all(|d| d.is_some())
    }

    /// Breadth-first hop counts from `src`.
    pub fn distances(&self, src: AgentId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.adj.len()];
        dist[src.index()] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u.index()].unwrap();
            for v in self.neighbors(u) {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest path by breadth-first search, neighbors visited in ascending
    /// id order. Returns the agents from `from` to `to` inclusive.
    pub fn shortest_path(&self, from: AgentId, to: AgentId) -> Option<Vec<AgentId>> {
        let mut parent: Vec<Option<AgentId>> = vec![None; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        seen[from.index()] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for v in self.neighbors(u) {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    parent[v.index()] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        if !seen[to.index()] {
            return None;
        }
        let mut path = vec![to];
        let mut cur = to;
        while let Some(p) = parent[cur.index()] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// Order in which agents can be peeled off: each agent, when removed, owns a
/// single contiguous run of the necklace contracted by all earlier removals.
/// Ties go to the lowest agent id. `None` when peeling gets stuck.
pub fn peel_order(necklace: &Necklace) -> Result<Option<Vec<AgentId>>> {
    let owners = necklace.assigned_owners()?;
    Ok(peel_owners(&owners, necklace.k()))
}

pub fn is_peelable(necklace: &Necklace) -> Result<bool> {
    Ok(peel_order(necklace)?.is_some())
}

/// Peeling over a plain owner sequence.
pub fn peel_owners(owners: &[AgentId], k: usize) -> Option<Vec<AgentId>> {
    // maximal runs as a doubly linked list
    let mut run_owner: Vec<AgentId> = Vec::new();
    for &o in owners {
        if run_owner.last() != Some(&o) {
            run_owner.push(o);
        }
    }
    let r = run_owner.len();
    let mut prev: Vec<Option<usize>> = (0..r).map(|i| i.checked_sub(1)).collect();
    let mut next: Vec<Option<usize>> = (0..r)
        .map(|i| if i + 1 < r { Some(i + 1) } else { None })
        .collect();
    let mut runs_of: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for (i, o) in run_owner.iter().enumerate() {
        runs_of[o.index()].insert(i);
    }
    let mut ready: BTreeSet<AgentId> = (0..k as u32)
        .map(AgentId)
        .filter(|a| runs_of[a.index()].len() <= 1)
        .collect();
    let mut removed = vec![false; k];
    let mut order = Vec::with_capacity(k);
    while let Some(a) = ready.pop_first() {
        removed[a.index()] = true;
        order.push(a);
        let Some(&run) = runs_of[a.index()].iter().next() else {
            continue;
        };
        runs_of[a.index()].clear();
        let (p, nx) = (prev[run], next[run]);
        if let Some(p) = p {
            next[p] = nx;
        }
        if let Some(nx) = nx {
            prev[nx] = p;
        }
        if let (Some(p), Some(nx)) = (p, nx) {
            if run_owner[p] == run_owner[nx] {
                let o = run_owner[p];
                // merge nx into p
                next[p] = next[nx];
                if let Some(nn) = next[nx] {
                    prev[nn] = Some(p);
                }
                runs_of[o.index()].remove(&nx);
                if runs_of[o.index()].len() == 1 && !removed[o.index()] {
                    ready.insert(o);
                }
            }
        }
    }
    (order.len() == k).then_some(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::necklace::Mode;

    fn agents(v: &[u32]) -> Vec<AgentId> {
        v.iter().map(|&a| AgentId(a)).collect()
    }

    fn example() -> Necklace {
        let mut nk = Necklace::parse("RRBRRBBBRBRB", 3, Mode::Exact).unwrap();
        nk.assign_owners(&agents(&[1, 1, 0, 0, 0, 0, 1, 1, 2, 2, 2, 2]))
            .unwrap();
        nk
    }

    #[test]
    fn example_graph_is_a_path() {
        let g = NeighborhoodGraph::build(&example()).unwrap();
        assert_eq!(
            g.edges(),
            vec![(AgentId(0), AgentId(1)), (AgentId(1), AgentId(2))]
        );
        assert_eq!(g, NeighborhoodGraph::from_pair_map(&example()));
    }

    #[test]
    fn block_necklace_gives_linear_graph() {
        let k = 6;
        let mut nk = Necklace::parse(&"RB".repeat(k), k, Mode::Exact).unwrap();
        let owners: Vec<AgentId> = (0..2 * k).map(|i| AgentId((i / 2) as u32)).collect();
        nk.assign_owners(&owners).unwrap();
        let g = NeighborhoodGraph::build(&nk).unwrap();
        assert_eq!(g.edge_count(), k - 1);
        for a in 0..k - 1 {
            assert!(g.has_edge(AgentId(a as u32), AgentId(a as u32 + 1)));
        }
        assert_eq!(
            g.shortest_path(AgentId(0), AgentId(3)).unwrap(),
            agents(&[0, 1, 2, 3])
        );
    }

    #[test]
    fn single_agent_graph() {
        let mut nk = Necklace::parse("RBR", 1, Mode::Exact).unwrap();
        nk.assign_owners(&[AgentId(0); 3]).unwrap();
        let g = NeighborhoodGraph::build(&nk).unwrap();
        assert_eq!(g.agent_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert!(g.is_connected());
    }

    #[test]
    fn partial_rebuild_matches_full_build() {
        let mut nk = example();
        let mut g = NeighborhoodGraph::build(&nk).unwrap();
        let b = nk.bead_at(0).unwrap();
        nk.move_to(b, 11).unwrap();
        g.partial_rebuild(&nk, &[AgentId(1)]).unwrap();
        assert_eq!(g, NeighborhoodGraph::build(&nk).unwrap());
        assert!(g.has_edge(AgentId(1), AgentId(2)));
    }

    #[test]
    fn peeling() {
        assert_eq!(peel_order(&example()).unwrap(), Some(agents(&[0, 1, 2])));
        assert_eq!(peel_owners(&agents(&[0, 1, 0, 1]), 2), None);
        assert_eq!(
            peel_owners(&agents(&[0, 1, 2, 1, 0]), 3),
            Some(agents(&[2, 1, 0]))
        );
        // agent with no beads peels trivially
        assert_eq!(peel_owners(&agents(&[0, 0]), 2), Some(agents(&[0, 1])));
    }
}
