//! Exhaustive reference solvers for small instances. They share data types
//! with the rest of the crate but none of its algorithms.

use std::collections::VecDeque;

use crate::batch::FlowNetwork;
use crate::error::{Error, Result};
use crate::necklace::{AgentId, Color};

pub const MAX_ORACLE_BEADS: usize = 20;
pub const MAX_ORACLE_NODES: usize = 12;

/// Fewest cuts of any exactly fair split of `colors` among `k` agents, or
/// `None` when no fair split exists.
pub fn brute_force_min_cuts(colors: &[Color], k: usize) -> Result<Option<usize>> {
    let m = colors.len();
    if m > MAX_ORACLE_BEADS {
        return Err(Error::TooLarge(format!(
            "{m} beads, limit {MAX_ORACLE_BEADS}"
        )));
    }
    if m == 0 || k == 0 {
        return Err(Error::EmptyInput);
    }
    let n = colors.iter().map(|c| c.index()).max().unwrap_or(0) + 1;
    let mut totals = vec![0usize; n];
    for c in colors {
        totals[c.index()] += 1;
    }
    if totals.iter().any(|t| t % k != 0) {
        return Ok(None);
    }
    let quota: Vec<usize> = totals.iter().map(|t| t / k).collect();
    for cuts in 0..m {
        let mut chosen = Vec::with_capacity(cuts);
        if subsets(m - 1, cuts, 0, &mut chosen, &mut |bounds| {
            let pieces = pieces(colors, n, bounds);
            let mut load = vec![vec![0usize; n]; k];
            assign(&pieces, 0, &mut load, &quota, 0)
        }) {
            return Ok(Some(cuts));
        }
    }
    Ok(None)
}

/// Calls `f` on every `size`-subset of `0..universe` in lexicographic order
/// until it returns true.
fn subsets(
    universe: usize,
    size: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if chosen.len() == size {
        return f(chosen);
    }
    let need = size - chosen.len();
    for b in start..universe {
        if universe - b < need {
            break;
        }
        chosen.push(b);
        if subsets(universe, size, b + 1, chosen, f) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Color counts of the pieces between cut boundaries (boundary `b` sits after
/// bead `b`).
fn pieces(colors: &[Color], n: usize, bounds: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(bounds.len() + 1);
    let mut start = 0;
    for end in bounds
        .iter()
        .map(|&b| b + 1)
        .chain(std::iter::once(colors.len()))
    {
        let mut counts = vec![0usize; n];
        for c in &colors[start..end] {
            counts[c.index()] += 1;
        }
        out.push(counts);
        start = end;
    }
    out
}

fn assign(
    pieces: &[Vec<usize>],
    i: usize,
    load: &mut [Vec<usize>],
    quota: &[usize],
    used: usize,
) -> bool {
    if i == pieces.len() {
        return load.iter().all(|l| l == quota);
    }
    // agents are interchangeable: a fresh agent is only tried once
    let limit = (used + 1).min(load.len());
    for a in 0..limit {
        if load[a]
            .iter()
            .zip(&pieces[i])
            .zip(quota)
            .any(|((l, p), q)| l + p > *q)
        {
            continue;
        }
        for (l, p) in load[a].iter_mut().zip(&pieces[i]) {
            *l += p;
        }
        let next_used = used.max(a + 1);
        if assign(pieces, i + 1, load, quota, next_used) {
            return true;
        }
        for (l, p) in load[a].iter_mut().zip(&pieces[i]) {
            *l -= p;
        }
    }
    false
}

/// Fewest active nodes over all maximum flows of `network`: terminals plus
/// the smallest relay set through which every demand can be routed.
pub fn exact_min_node_max_flow(network: &FlowNetwork) -> Result<usize> {
    let k = network.node_count();
    if k > MAX_ORACLE_NODES {
        return Err(Error::TooLarge(format!(
            "{k} nodes, limit {MAX_ORACLE_NODES}"
        )));
    }
    let terminals: Vec<AgentId> = network.terminals();
    let relays: Vec<AgentId> = (0..k as u32)
        .map(AgentId)
        .filter(|a| network.excess(*a) == 0)
        .collect();
    let demand = network.demand();
    for extra in 0..=relays.len() {
        let mut chosen = Vec::new();
        let found = subsets(relays.len(), extra, 0, &mut chosen, &mut |pick| {
            let mut inside = vec![false; k];
            for t in &terminals {
                inside[t.index()] = true;
            }
            for &i in pick {
                inside[relays[i].index()] = true;
            }
            restricted_max_flow(network, &inside) == demand
        });
        if found {
            return Ok(terminals.len() + extra);
        }
    }
    Err(Error::Infeasible)
}

/// Edmonds-Karp on the network restricted to `inside` nodes, with a super
/// source and super sink.
fn restricted_max_flow(network: &FlowNetwork, inside: &[bool]) -> u64 {
    let k = network.node_count();
    let (s, t) = (k, k + 1);
    let size = k + 2;
    let big = network.demand() + 1;
    let mut cap = vec![vec![0u64; size]; size];
    for u in 0..k {
        if !inside[u] {
            continue;
        }
        let a = AgentId(u as u32);
        cap[s][u] = network.source_capacity(a);
        cap[u][t] = network.sink_capacity(a);
        for v in network.neighbors(a) {
            if inside[v.index()] {
                cap[u][v.index()] = big;
            }
        }
    }
    let mut total = 0;
    loop {
        let mut prev = vec![usize::MAX; size];
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..size {
                if prev[v] == usize::MAX && cap[u][v] > 0 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return total;
        }
        let mut bottleneck = u64::MAX;
        let mut v = t;
        while v != s {
            bottleneck = bottleneck.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            let u = prev[v];
            cap[u][v] -= bottleneck;
            cap[v][u] += bottleneck;
            v = u;
        }
        total += bottleneck;
    }
}

/// Bernoulli trial tally for the statistical checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatReport {
    pub trials: usize,
    pub successes: usize,
    /// Threshold each trial's value is compared against.
    pub threshold: f64,
    pub values: Vec<usize>,
}

impl StatReport {
    pub fn new(threshold: f64) -> Self {
        StatReport {
            threshold,
            ..Default::default()
        }
    }

    /// Records a trial; it succeeds when `value < threshold`.
    pub fn record(&mut self, value: usize) {
        self.trials += 1;
        if (value as f64) < self.threshold {
            self.successes += 1;
        }
        self.values.push(value);
    }

    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.successes as f64 / self.trials as f64
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<usize>() as f64 / self.values.len() as f64
    }
}
