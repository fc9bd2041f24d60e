//! Seeded instance generators for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::necklace::{AgentId, Color, Mode, Necklace};

/// `m` beads, half red and half blue, shuffled.
pub fn balanced_colors<R: Rng>(rng: &mut R, m: usize) -> Vec<Color> {
    let mut colors: Vec<Color> = (0..m)
        .map(|i| if i < m / 2 { Color::RED } else { Color::BLUE })
        .collect();
    colors.shuffle(rng);
    colors
}

/// Two colors of `m` beads (a multiple of `k`) where each count is a random
/// multiple of `k`.
pub fn divisible_colors<R: Rng>(rng: &mut R, m: usize, k: usize) -> Vec<Color> {
    let blocks = m / k;
    let reds = k * rng.gen_range(0..=blocks);
    let mut colors: Vec<Color> = (0..blocks * k)
        .map(|i| if i < reds { Color::RED } else { Color::BLUE })
        .collect();
    colors.shuffle(rng);
    colors
}

/// `n` colors, each appearing `per_color` times, shuffled.
pub fn uniform_multicolor<R: Rng>(rng: &mut R, n: usize, per_color: usize) -> Vec<Color> {
    let mut colors: Vec<Color> = (0..n * per_color)
        .map(|i| Color((i / per_color) as u16))
        .collect();
    colors.shuffle(rng);
    colors
}

/// `k` consecutive "RB" blocks with one agent per block; its neighborhood
/// graph is a path.
pub fn linear_graph_necklace(k: usize) -> Result<Necklace> {
    let colors: Vec<Color> = (0..2 * k).map(|i| Color((i % 2) as u16)).collect();
    let mut nk = Necklace::new(&colors, k, Mode::Exact)?;
    let owners: Vec<AgentId> = (0..2 * k).map(|i| AgentId((i / 2) as u32)).collect();
    nk.assign_owners(&owners)?;
    Ok(nk)
}
