use thiserror::Error;

use crate::necklace::{AgentId, Color};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("necklace is empty")]
    EmptyInput,
    #[error("color {color} has {count} beads, not divisible by k={k}")]
    Divisibility {
        color: usize,
        count: usize,
        k: usize,
    },
    #[error("bead at position {0} has no owner")]
    UnassignedBead(usize),
    #[error("operation requires at most two colors, necklace has {0}")]
    NotTwoColors(usize),
    #[error("subsequence holds {found} beads of color {color}, expected {expected}")]
    QuotaMismatch {
        color: usize,
        found: usize,
        expected: usize,
    },
    #[error("position {pos} out of range for necklace of length {len}")]
    OutOfRange { pos: usize, len: usize },
    #[error("allocation was modified by a fence relocation; rebuild required")]
    DirtyState,
    #[error("allocation is not peelable")]
    NotPeelable,
    #[error("batch moves no bead between agents")]
    ZeroBatch,
    #[error("flow network is infeasible")]
    Infeasible,
    #[error("bead color {found:?} does not match batch color {expected:?}")]
    ColorMismatch { expected: Color, found: Color },
    #[error("batch of {count} beads is not a multiple of k={k}")]
    CountNotMultipleOfK { count: usize, k: usize },
    #[error("necklace is not dense: {0}")]
    NotDense(String),
    #[error("population of {available} beads is smaller than requested sample of {requested}")]
    PopulationTooSmall { requested: usize, available: usize },
    #[error("order index out of sync with necklace")]
    IndexDesync,
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("epsilon must lie strictly inside (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("agent {0:?} is out of range")]
    UnknownAgent(AgentId),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
