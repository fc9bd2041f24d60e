//! Exact two-color offline splitter.
//!
//! A sliding window of length `m/k` is kept over the not-yet-allocated beads.
//! `window_reds[j]` counts the reds in the window starting at `j` and `balanced`
//! holds every start whose window carries exactly the red share. Each step
//! hands the leftmost balanced window to the next agent, splices it out of the
//! list and repairs only the `m/k - 1` windows that straddled it. The last agent
//! takes whatever remains.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::necklace::{AgentId, BeadId, Color, Mode, Necklace};

/// Splits a sequence over at most two colors into `k` equal shares. Returns the
/// share index (0 = first selected) of each element.
pub fn split_sequence(colors: &[Color], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::Divisibility {
            color: 0,
            count: colors.len(),
            k,
        });
    }
    if let Some(c) = colors.iter().find(|c| c.index() > 1) {
        return Err(Error::NotTwoColors(c.index() + 1));
    }
    let len = colors.len();
    let reds = colors.iter().filter(|&&c| c == Color::RED).count();
    let blues = len - reds;
    if reds % k != 0 {
        return Err(Error::QuotaMismatch {
            color: 0,
            found: reds,
            expected: reds / k * k,
        });
    }
    if !blues.is_multiple_of(k) {
        return Err(Error::QuotaMismatch {
            color: 1,
            found: blues,
            expected: blues / k * k,
        });
    }
    let mut slot = vec![k - 1; len];
    let width = len / k;
    let red_share = reds / k;
    if k == 1 || width == 0 {
        return Ok(slot);
    }
    let is_red = |i: usize| (colors[i] == Color::RED) as usize;

    let mut next: Vec<Option<usize>> = (0..len).map(|i| (i + 1 < len).then_some(i + 1)).collect();
    let mut prev: Vec<Option<usize>> = (0..len).map(|i| i.checked_sub(1)).collect();
    let mut window_reds: Vec<Option<usize>> = vec![None; len];
    let mut balanced = BTreeSet::new();

    let mut acc: usize = (0..width).map(is_red).sum();
    for j in 0..=len - width {
        if j > 0 {
            acc = acc - is_red(j - 1) + is_red(j + width - 1);
        }
        window_reds[j] = Some(acc);
        if acc == red_share {
            balanced.insert(j);
        }
    }

    for share in 0..k - 1 {
        let start = balanced
            .pop_first()
            .ok_or_else(|| Error::Invariant("no balanced window left".into()))?;

        let mut block = Vec::with_capacity(width);
        let mut cur = Some(start);
        while block.len() < width {
            let i = cur.expect("window fits");
            block.push(i);
            cur = next[i];
        }
        let mut after = Vec::with_capacity(width);
        while after.len() < width {
            match cur {
                Some(i) => {
                    after.push(i);
                    cur = next[i];
                }
                None => break,
            }
        }

        for &i in &block {
            slot[i] = share;
            if window_reds[i].take().is_some() {
                balanced.remove(&i);
            }
        }
        let before_block = prev[start];
        let after_block = after.first().copied();
        if let Some(p) = before_block {
            next[p] = after_block;
        }
        if let Some(a) = after_block {
            prev[a] = before_block;
        }

        let mut block_prefix = vec![0usize; width + 1];
        for (t, &i) in block.iter().enumerate() {
            block_prefix[t + 1] = block_prefix[t] + is_red(i);
        }
        let mut after_prefix = vec![0usize; after.len() + 1];
        for (t, &i) in after.iter().enumerate() {
            after_prefix[t + 1] = after_prefix[t] + is_red(i);
        }

        // the window starting t beads before the block keeps t of its beads and
        // borrows width - t from behind the block
        let mut p = before_block;
        for t in 1..width {
            let Some(j) = p else { break };
            let tail = width - t;
            if let Some(old) = window_reds[j] {
                if old == red_share {
                    balanced.remove(&j);
                }
                if after.len() >= tail {
                    let new = old - block_prefix[tail] + after_prefix[tail];
                    window_reds[j] = Some(new);
                    if new == red_share {
                        balanced.insert(j);
                    }
                } else {
                    window_reds[j] = None;
                }
            }
            p = prev[j];
        }
    }
    Ok(slot)
}

/// Splits the whole necklace among its `k` agents. Agent `A_{s+1}` receives
/// the window chosen at step `s`. Returns the resulting cut count.
pub fn offline_split(necklace: &mut Necklace) -> Result<usize> {
    if necklace.n() > 2 {
        return Err(Error::NotTwoColors(necklace.n()));
    }
    let k = necklace.k();
    for (i, &count) in necklace.color_counts().iter().enumerate() {
        if count % k != 0 {
            return Err(Error::Divisibility { color: i, count, k });
        }
    }
    let slots = split_sequence(&necklace.colors(), k)?;
    let owners: Vec<AgentId> = slots.into_iter().map(|s| AgentId(s as u32)).collect();
    necklace.assign_owners(&owners)?;
    Ok(necklace.cut_count())
}

/// Reruns the splitter on the beads of `agents` only, in necklace order, giving
/// the `s`-th selected window to `agents[s]`. Other agents are untouched. The
/// subsequence must hold exactly `agents.len()` shares of every color; on a
/// mismatch nothing is modified. Returns the number of owner changes inside
/// the subsequence.
pub fn offline_split_range(necklace: &mut Necklace, agents: &[AgentId]) -> Result<usize> {
    if necklace.n() > 2 {
        return Err(Error::NotTwoColors(necklace.n()));
    }
    if let Some(&a) = agents.iter().find(|a| a.index() >= necklace.k()) {
        return Err(Error::UnknownAgent(a));
    }
    let beads = necklace.agent_beads(agents);
    let colors: Vec<Color> = beads.iter().map(|&b| necklace.color(b)).collect();
    for c in 0..necklace.n() {
        let found = colors.iter().filter(|x| x.index() == c).count();
        let expected = agents.len() * necklace.quota(Color(c as u16));
        if found != expected {
            return Err(Error::QuotaMismatch {
                color: c,
                found,
                expected,
            });
        }
    }
    if agents.is_empty() {
        return Ok(0);
    }
    let slots = split_sequence(&colors, agents.len())?;
    let changes: Vec<(BeadId, AgentId)> = beads
        .iter()
        .zip(&slots)
        .map(|(&b, &s)| (b, agents[s]))
        .collect();
    necklace.reassign(&changes)?;
    Ok(slots.windows(2).filter(|w| w[0] != w[1]).count())
}

/// `R^{m/2} B^{m/2}`, which needs `2(k-1)` cuts.
pub fn adversarial_necklace(k: usize, m: usize) -> Result<Necklace> {
    if k == 0 || m == 0 || !m.is_multiple_of(2 * k) {
        return Err(Error::Divisibility {
            color: 0,
            count: m / 2,
            k,
        });
    }
    let mut colors = vec![Color::RED; m / 2];
    colors.extend(std::iter::repeat_n(Color::BLUE, m / 2));
    Necklace::new(&colors, k, Mode::Exact)
}

/// Exact splitter for any number of colors: the `i`-th occurrence of every
/// color goes to agent `i mod k`. Used where no low-cut splitter exists.
pub fn baseline_split(necklace: &mut Necklace) -> Result<usize> {
    let k = necklace.k();
    for (i, &count) in necklace.color_counts().iter().enumerate() {
        if count % k != 0 {
            return Err(Error::Divisibility { color: i, count, k });
        }
    }
    let mut seen = vec![0usize; necklace.n()];
    let owners: Vec<AgentId> = necklace
        .colors()
        .into_iter()
        .map(|c| {
            let a = seen[c.index()] % k;
            seen[c.index()] += 1;
            AgentId(a as u32)
        })
        .collect();
    necklace.assign_owners(&owners)?;
    Ok(necklace.cut_count())
}
