use std::fmt;

use serde::Serialize;

use super::Schedule;
use crate::topology::{region_relation, AggregationTree, InterferenceModel, Region, RegionRelation, Topology};

/// A broken scheduling guarantee. Node fields hold node labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Two interfering regions share a window.
    WindowClash { region_a: usize, region_b: usize, window: usize },
    /// Two children of one centre can both reach it in the same slot.
    SharedTransmitSlot { region: usize, slot: usize, first: u64, second: u64 },
    /// A child's earliest slot does not precede its parent's.
    ChildNotEarlier { region: usize, child: u64, parent: u64, child_slot: usize, parent_slot: usize },
    /// A region does not start after a region that feeds it.
    RegionOrder { child_region: usize, parent_region: usize, child_first: usize, parent_first: usize },
    /// A node has no quorum where it needs one.
    Unassigned { node: u64, region: Option<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WindowClash { region_a, region_b, window } => {
                write!(f, "regions {region_a} and {region_b} interfere but share window {window}")
            }
            Violation::SharedTransmitSlot { region, slot, first, second } => {
                write!(f, "region {region}: nodes {first} and {second} both transmit in slot {slot}")
            }
            Violation::ChildNotEarlier { region, child, parent, child_slot, parent_slot } => {
                write!(f, "region {region}: child {child} starts at slot {child_slot}, parent {parent} at {parent_slot}")
            }
            Violation::RegionOrder { child_region, parent_region, child_first, parent_first } => write!(
                f,
                "region {child_region} (period {child_first}) does not precede region {parent_region} (period {parent_first})"
            ),
            Violation::Unassigned { node, region: Some(r) } => write!(f, "node {node} has no quorum in region {r}"),
            Violation::Unassigned { node, region: None } => write!(f, "node {node} has no quorum at all"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that interfering regions use different windows, that no two links
/// into one centre share a slot, and that children come before parents both
/// inside a period and across regions.
pub fn validate_schedule(
    schedule: &Schedule,
    regions: &[Region],
    tree: &AggregationTree,
    topology: &Topology,
    model: &InterferenceModel,
) -> ValidationReport {
    let mut violations = Vec::new();
    let label = |u: usize| topology.label(u);

    let window_of = |id: usize| schedule.regions().iter().find(|r| r.region_id == id).map(|r| r.window.window);
    for (i, a) in regions.iter().enumerate() {
        for b in &regions[i + 1..] {
            if region_relation(a, b, topology, model) == RegionRelation::Disjoint {
                continue;
            }
            if let (Some(wa), Some(wb)) = (window_of(a.id), window_of(b.id)) {
                if wa == wb {
                    violations.push(Violation::WindowClash { region_a: a.id, region_b: b.id, window: wa });
                }
            }
        }
    }

    for rs in schedule.regions() {
        let Some(center_q) = rs.quorum_of(rs.center) else {
            violations.push(Violation::Unassigned { node: label(rs.center), region: Some(rs.region_id) });
            continue;
        };
        let senders: Vec<_> = rs.members.iter().filter(|a| tree.parent(a.node) == Some(rs.center)).collect();
        for &slot in center_q.slots() {
            let mut hits = senders.iter().filter(|a| a.quorum.contains(slot));
            if let (Some(x), Some(y)) = (hits.next(), hits.next()) {
                violations.push(Violation::SharedTransmitSlot {
                    region: rs.region_id,
                    slot,
                    first: label(x.node),
                    second: label(y.node),
                });
            }
        }
    }

    for u in 0..tree.len() {
        if schedule.contexts(u).next().is_none() {
            violations.push(Violation::Unassigned { node: label(u), region: None });
        }
        let Some(p) = tree.parent(u) else { continue };
        let Some(rp) = schedule.region_by_center(p) else {
            violations.push(Violation::Unassigned { node: label(u), region: None });
            continue;
        };
        match (rp.quorum_of(u), rp.quorum_of(p)) {
            (Some(qu), Some(qp)) => {
                let (cs, ps) = (qu.first_slot().unwrap_or(usize::MAX), qp.first_slot().unwrap_or(usize::MAX));
                if cs >= ps {
                    violations.push(Violation::ChildNotEarlier {
                        region: rp.region_id,
                        child: label(u),
                        parent: label(p),
                        child_slot: cs,
                        parent_slot: ps,
                    });
                }
            }
            _ => violations.push(Violation::Unassigned { node: label(u), region: Some(rp.region_id) }),
        }
        if !tree.children(u).is_empty() {
            if let Some(ru) = schedule.region_by_center(u) {
                if ru.window.first_period >= rp.window.first_period {
                    violations.push(Violation::RegionOrder {
                        child_region: ru.region_id,
                        parent_region: rp.region_id,
                        child_first: ru.window.first_period,
                        parent_first: rp.window.first_period,
                    });
                }
            }
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduling::{build_plan, RegionSchedule, ScheduleOptions};

    fn plan(seed: u64) -> (Topology, crate::scheduling::Plan) {
        let t = Topology::random_geometric(100, 10.0, 1.8, seed).unwrap();
        let p = build_plan(&t, &ScheduleOptions::default()).unwrap();
        (t, p)
    }

    #[test]
    fn pipeline_schedules_are_clean() {
        for seed in 0..5 {
            let (t, p) = plan(seed);
            let report = validate_schedule(&p.schedule, &p.regions, &p.tree, &t, &InterferenceModel::rts_cts());
            assert!(report.is_clean(), "seed {seed}: {:?}", report.violations.first());
        }
    }

    #[test]
    fn same_window_neighbours_are_flagged() {
        let (t, p) = plan(1);
        let model = InterferenceModel::rts_cts();
        let (a, b) = p
            .regions
            .iter()
            .enumerate()
            .flat_map(|(i, a)| p.regions[i + 1..].iter().map(move |b| (a, b)))
            .find(|(a, b)| region_relation(a, b, &t, &model) == RegionRelation::Neighboring)
            .map(|(a, b)| (a.id, b.id))
            .expect("some neighbouring pair");
        let mut regions: Vec<RegionSchedule> = p.schedule.regions().to_vec();
        let wa = regions[a].window.window;
        regions[b].window.window = wa;
        let s = Schedule::new(p.schedule.period(), p.schedule.windows(), 2, t.len(), regions);
        let report = validate_schedule(&s, &p.regions, &p.tree, &t, &model);
        assert!(report.violations.contains(&Violation::WindowClash { region_a: a, region_b: b, window: wa }));
    }

    #[test]
    fn parent_before_child_is_flagged() {
        let (t, p) = plan(2);
        let model = InterferenceModel::rts_cts();
        let mut regions: Vec<RegionSchedule> = p.schedule.regions().to_vec();
        // Swap the quorums of the centre and its first child in some region.
        let (ri, ci) = regions
            .iter()
            .enumerate()
            .find_map(|(ri, r)| r.members.iter().position(|m| p.tree.parent(m.node) == Some(r.center)).map(|ci| (ri, ci)))
            .unwrap();
        let pi = regions[ri].members.iter().position(|m| m.node == regions[ri].center).unwrap();
        let (qc, qp) = (regions[ri].members[ci].quorum.clone(), regions[ri].members[pi].quorum.clone());
        regions[ri].members[ci].quorum = qp;
        regions[ri].members[pi].quorum = qc;
        let s = Schedule::new(p.schedule.period(), p.schedule.windows(), 2, t.len(), regions);
        let report = validate_schedule(&s, &p.regions, &p.tree, &t, &model);
        assert!(report.violations.iter().any(|v| matches!(v, Violation::ChildNotEarlier { .. })));
    }
}
