//! Exact and approximate dynamic necklace splitting.
//!
//! A necklace is a sequence of colored beads shared among `k` agents so that
//! every agent owns the same number of beads of each color. The crate keeps
//! such an allocation valid, with few cuts, while beads are swapped, moved,
//! inserted and deleted.

pub mod approx;
pub mod batch;
pub mod cuts;
pub mod dense;
pub mod dynamic2;
pub mod error;
pub mod generate;
pub mod graph;
pub mod necklace;
pub mod offline;
pub mod oracle;

pub use approx::{
    approx_cuts, approx_static, epsilon_sample_size, sample_complement, ApproxConfig,
    ApproxNecklace, ApproxPlan, ExclusionSet, OrderIndex, Update,
};
pub use batch::{BatchOptions, BatchStats, FlowNetwork, MoveBatch, NeighborhoodTree};
pub use cuts::{derive_cuts, verify_fair, CutSet, FairnessReport};
pub use dense::{dense_offline_split, DenseCase, DenseIndex, DenseNecklace, DenseStats};
pub use dynamic2::{ColoredDigraph, DynamicNecklace, FencePolicy, UpdateStats};
pub use error::{Error, Result};
pub use graph::{is_peelable, peel_order, NeighborhoodGraph};
pub use necklace::{AgentId, BeadId, Color, Mode, Necklace};
