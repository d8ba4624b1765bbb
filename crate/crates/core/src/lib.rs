//! Demand-driven quorum duty cycling for data-gathering sensor networks.
//!
//! Nodes wake only in the slots of a grid quorum sized to their traffic.
//! Regions around a connected dominating set take turns in a superframe so
//! that nearby regions never transmit together, and children always wake
//! before their parents so a round of aggregation climbs the tree in one
//! pass.
//!
//! - [`quorum`]: slots, grid quorums, rotations, rendezvous bounds, load.
//! - [`topology`]: graphs, the aggregation tree, regions and their coloring.
//! - [`scheduling`]: windows, quorum selection, validation, delay bounds.
//! - [`sim`]: a slot-level simulator with clock shifts and quorum sharing,
//!   plus a low-power listening baseline.
//! - [`verify`]: the exhaustive rendezvous checks.
//!
//! ```
//! use adc::quorum::{verify_rotation_closure, GridQuorumSystem};
//!
//! let g = GridQuorumSystem::build(16)?;
//! assert!(verify_rotation_closure(&g.quorums_with_rows(1)).is_ok());
//! # Ok::<(), adc::quorum::QuorumError>(())
//! ```

pub mod quorum;
pub mod scheduling;
pub mod sim;
pub mod topology;
pub mod verify;

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/quorums.md")]
    mod quorums {}
    #[doc = include_str!("../../../book/src/topology.md")]
    mod topology {}
    #[doc = include_str!("../../../book/src/scheduling.md")]
    mod scheduling {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/shifts.md")]
    mod shifts {}
    #[doc = include_str!("../../../book/src/baseline.md")]
    mod baseline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
