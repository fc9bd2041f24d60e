//! Cut derivation and fairness validation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::necklace::{AgentId, Color, Necklace};

/// Owner-change boundaries of an allocation. Boundary `j` sits between
/// 0-based positions `j` and `j + 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CutSet {
    boundaries: Vec<usize>,
    by_pair: BTreeMap<(AgentId, AgentId), Vec<usize>>,
}

impl CutSet {
    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn pair(&self, a: AgentId, b: AgentId) -> &[usize] {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.by_pair.get(&key).map_or(&[], |v| v.as_slice())
    }

    pub(crate) fn push(&mut self, j: usize, a: AgentId, b: AgentId) {
        self.boundaries.push(j);
        let key = if a <= b { (a, b) } else { (b, a) };
        self.by_pair.entry(key).or_default().push(j);
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&(AgentId, AgentId), &Vec<usize>)> {
        self.by_pair.iter()
    }
}

/// Scans the necklace once and lists every boundary whose two beads have
/// different owners.
pub fn derive_cuts(necklace: &Necklace) -> Result<CutSet> {
    let owners = necklace.assigned_owners()?;
    let mut cuts = CutSet::default();
    for (j, w) in owners.windows(2).enumerate() {
        if w[0] != w[1] {
            cuts.push(j, w[0], w[1]);
        }
    }
    Ok(cuts)
}

/// Per-agent, per-color holdings compared with the exact share `m_i / k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FairnessReport {
    k: usize,
    n: usize,
    held: Vec<usize>,
    quota: Vec<usize>,
    unassigned: usize,
}

impl FairnessReport {
    pub fn held(&self, agent: AgentId, color: Color) -> usize {
        self.held[agent.index() * self.n + color.index()]
    }

    pub fn quota(&self, color: Color) -> usize {
        self.quota[color.index()]
    }

    /// Signed surplus: positive when the agent holds more than its share.
    pub fn deviation(&self, agent: AgentId, color: Color) -> i64 {
        self.held(agent, color) as i64 - self.quota(color) as i64
    }

    pub fn is_fair(&self) -> bool {
        self.unassigned == 0
            && (0..self.k).all(|a| {
                (0..self.n).all(|c| self.deviation(AgentId(a as u32), Color(c as u16)) == 0)
            })
    }

    /// Agents and colors with nonzero deviation.
    pub fn violations(&self) -> Vec<(AgentId, Color, i64)> {
        let mut out = Vec::new();
        for a in 0..self.k {
            for c in 0..self.n {
                let (a, c) = (AgentId(a as u32), Color(c as u16));
                let d = self.deviation(a, c);
                if d != 0 {
                    out.push((a, c, d));
                }
            }
        }
        out
    }
}

/// Recounts holdings by a full scan (independent of the incremental
/// bookkeeping inside [`Necklace`]).
pub fn verify_fair(necklace: &Necklace) -> FairnessReport {
    let (k, n) = (necklace.k(), necklace.n());
    let mut held = vec![0usize; k * n];
    let mut counts = vec![0usize; n];
    let mut unassigned = 0;
    for b in necklace.iter() {
        let c = necklace.color(b).index();
        counts[c] += 1;
        match necklace.owner(b) {
            Some(a) => held[a.index() * n + c] += 1,
            None => unassigned += 1,
        }
    }
    let quota = counts.iter().map(|&c| c / k).collect();
    FairnessReport {
        k,
        n,
        held,
        quota,
        unassigned,
    }
}

/// Fails with [`Error::Invariant`] unless the allocation is exactly fair.
pub fn ensure_fair(necklace: &Necklace) -> Result<()> {
    let report = verify_fair(necklace);
    if report.is_fair() {
        Ok(())
    } else {
        Err(Error::Invariant(format!(
            "unfair allocation: {:?}",
            report.violations()
        )))
    }
}
