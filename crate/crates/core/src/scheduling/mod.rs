//! From a colored aggregation tree to an executable wakeup plan.
//!
//! Every region gets one period window per superframe of `W` periods and
//! each of its members gets a grid quorum inside that window. The number of
//! windows is `max(φ, χ)`: regions within interference range always differ in
//! color, and giving every color its own window keeps them apart even when
//! the greedy coloring needs more than `φ` colors.

use serde::Serialize;
use thiserror::Error;

use crate::quorum::{GridQuorumSystem, Period, Quorum, QuorumError};
use crate::topology::{build_tree, color_regions, extract_regions, AggregationTree, InterferenceModel, Region, Topology, TopologyError};

mod delay;
mod export;
mod selection;
mod validate;
mod windows;

pub use delay::{delay_bounds, DelayBound};
pub use export::{export_schedule, parse_schedule};
pub use selection::{determinate_quorum_selection, random_quorum_selection};
pub use validate::{validate_schedule, ValidationReport, Violation};
pub use windows::{assign_slot_windows, SlotWindow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedulingError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Quorum(#[from] QuorumError),
    #[error("region {region} needs {needed} anchor rows but the grid has {available}")]
    AnchorShortage { region: usize, needed: usize, available: usize },
    #[error("infeasible demand: {0}")]
    InfeasibleDemand(String),
    #[error("region {0} is uncolored")]
    Uncolored(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One member's quorum inside a region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub node: usize,
    pub quorum: Quorum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSchedule {
    pub region_id: usize,
    pub center: usize,
    pub window: SlotWindow,
    pub members: Vec<Assignment>,
}

impl RegionSchedule {
    pub fn quorum_of(&self, node: usize) -> Option<&Quorum> {
        self.members.iter().find(|a| a.node == node).map(|a| &a.quorum)
    }
}

/// Per-node quorums for every region the node belongs to, with each
/// region's window in the superframe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    period: Period,
    windows: usize,
    phi: usize,
    regions: Vec<RegionSchedule>,
    // Per node: (index into `regions`, index into its members).
    #[serde(skip)]
    contexts: Vec<Vec<(usize, usize)>>,
}

impl Schedule {
    pub fn new(period: Period, windows: usize, phi: usize, nodes: usize, regions: Vec<RegionSchedule>) -> Self {
        let mut contexts = vec![Vec::new(); nodes];
        for (ri, r) in regions.iter().enumerate() {
            for (mi, a) in r.members.iter().enumerate() {
                contexts[a.node].push((ri, mi));
            }
        }
        Schedule { period, windows: windows.max(1), phi, regions, contexts }
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn m(&self) -> usize {
        self.period.slots()
    }

    /// Periods per superframe.
    pub fn windows(&self) -> usize {
        self.windows
    }

    pub fn phi(&self) -> usize {
        self.phi
    }

    pub fn superframe_slots(&self) -> usize {
        self.windows * self.m()
    }

    pub fn regions(&self) -> &[RegionSchedule] {
        &self.regions
    }

    pub fn node_count(&self) -> usize {
        self.contexts.len()
    }

    /// Regions `node` belongs to, with its quorum in each.
    pub fn contexts(&self, node: usize) -> impl Iterator<Item = (&RegionSchedule, &Quorum)> + '_ {
        self.contexts[node].iter().map(|&(r, m)| (&self.regions[r], &self.regions[r].members[m].quorum))
    }

    pub fn region_by_center(&self, center: usize) -> Option<&RegionSchedule> {
        self.regions.iter().find(|r| r.center == center)
    }

    pub fn quorum(&self, node: usize, region_id: usize) -> Option<&Quorum> {
        self.contexts(node).find(|(r, _)| r.region_id == region_id).map(|(_, q)| q)
    }

    /// Fraction of slots `node` is scheduled awake, `Σ|Q| / (W·m)`.
    pub fn duty_cycle(&self, node: usize) -> f64 {
        let active: usize = self.contexts(node).map(|(_, q)| q.len()).sum();
        active as f64 / self.superframe_slots() as f64
    }

    /// Largest number of quorums handed out in one region.
    pub fn max_region_members(&self) -> usize {
        self.regions.iter().map(|r| r.members.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOptions {
    pub model: InterferenceModel,
    /// Slots per period; when absent the smallest perfect square whose grid
    /// fits the largest region is used.
    pub m: Option<usize>,
    /// Rows (and columns) per quorum.
    pub rows: usize,
    pub palette: Option<usize>,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions { model: InterferenceModel::rts_cts(), m: None, rows: 1, palette: None }
    }
}

/// Everything the pipeline derives from a topology.
#[derive(Debug, Clone)]
pub struct Plan {
    pub tree: AggregationTree,
    pub regions: Vec<Region>,
    pub colors: usize,
    pub schedule: Schedule,
}

impl Plan {
    /// Bounds with `φ` replaced by the number of windows actually used.
    pub fn delay_bounds(&self) -> DelayBound {
        delay_bounds(&self.tree, self.schedule.windows(), self.schedule.m())
    }
}

/// Tree, regions, coloring, windows and determinate quorums in one go.
pub fn build_plan(topology: &Topology, options: &ScheduleOptions) -> Result<Plan, SchedulingError> {
    let tree = build_tree(topology)?;
    let mut regions = extract_regions(&tree, topology);
    let colors = color_regions(&mut regions, topology, &options.model, options.palette)?;
    let windows = colors.max(options.model.phi);
    let slot_windows = assign_slot_windows(&regions, &tree, windows)?;

    let rows = options.rows.max(1);
    let largest = regions.iter().map(|r| r.members.len()).max().unwrap_or(1);
    let m = match options.m {
        Some(m) => m,
        None => (largest * rows).pow(2),
    };
    let grid = GridQuorumSystem::build(m)?;

    let mut out = Vec::with_capacity(regions.len());
    for (region, window) in regions.iter().zip(slot_windows) {
        let members = determinate_quorum_selection(region, &tree, &grid, |_| rows)?;
        out.push(RegionSchedule { region_id: region.id, center: region.center, window, members });
    }
    let schedule = Schedule::new(grid.period(), windows, options.model.phi, topology.len(), out);
    Ok(Plan { tree, regions, colors, schedule })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_on_a_grid_fits_one_hundred_slots() {
        let t = Topology::jittered_grid(10, 10, 1.5, 0.05, 3).unwrap();
        let plan = build_plan(&t, &ScheduleOptions::default()).unwrap();
        assert!(plan.schedule.m() <= 81);
        let fixed = build_plan(&t, &ScheduleOptions { m: Some(100), ..Default::default() }).unwrap();
        assert_eq!(fixed.schedule.m(), 100);
        for u in 0..t.len() {
            assert!(fixed.schedule.contexts(u).count() >= 1);
            let d = fixed.schedule.duty_cycle(u);
            assert!(d > 0.0 && d <= 1.0);
        }
    }

    #[test]
    fn too_small_a_period_is_an_anchor_shortage() {
        let t = Topology::jittered_grid(10, 10, 1.5, 0.05, 3).unwrap();
        let e = build_plan(&t, &ScheduleOptions { m: Some(16), ..Default::default() }).unwrap_err();
        assert!(matches!(e, SchedulingError::AnchorShortage { available: 4, .. }));
    }
}
