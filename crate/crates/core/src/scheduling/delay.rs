use serde::Serialize;

use crate::topology::AggregationTree;

/// Worst-case aggregation delays, in slots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayBound {
    pub phi: usize,
    pub m: usize,
    pub radius: usize,
    pub max_degree: usize,
    /// `φ·m·R + Δ²`, synchronised clocks.
    pub sync_bound: u64,
    /// `(2φ−1)·m·R + Δ²`, shifted clocks with every neighbour pair connected.
    pub async_bound: u64,
    /// `φ²·m·R + Δ²`, shifted clocks repaired by quorum sharing.
    pub share_bound: u64,
    /// `(φ·m + 1)·D + Δ²` with `D = R/2`, for a sink at the centre.
    pub centered_bound: f64,
}

pub fn delay_bounds(tree: &AggregationTree, phi: usize, m: usize) -> DelayBound {
    bounds_from(phi, m, tree.radius(), tree.max_degree())
}

pub(crate) fn bounds_from(phi: usize, m: usize, radius: usize, max_degree: usize) -> DelayBound {
    let (p, mm, r, d2) = (phi as u64, m as u64, radius as u64, (max_degree * max_degree) as u64);
    DelayBound {
        phi,
        m,
        radius,
        max_degree,
        sync_bound: p * mm * r + d2,
        async_bound: (2 * p).saturating_sub(1) * mm * r + d2,
        share_bound: p * p * mm * r + d2,
        centered_bound: (p * mm + 1) as f64 * (radius as f64 / 2.0) + d2 as f64,
    }
}
