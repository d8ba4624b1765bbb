use rand::Rng;

use super::{Assignment, SchedulingError};
use crate::quorum::{demand_lower_bound, demand_sum_feasible, is_occupied, select_with_retries, Demand, GridQuorumSystem, Quorum};
use crate::topology::{AggregationTree, Region};

/// Algorithm-4 style hand-out: members one level below the centre first,
/// then the centre's own level, then the level above, ascending id within
/// each group. Anchors are consecutive bands, so the `i`-th member starts
/// where the previous member's rows end; earlier members therefore always
/// own smaller slot indices.
pub fn determinate_quorum_selection(
    region: &Region,
    tree: &AggregationTree,
    grid: &GridQuorumSystem,
    rows_of: impl Fn(usize) -> usize,
) -> Result<Vec<Assignment>, SchedulingError> {
    let k = tree.level(region.center);
    let mut order: Vec<usize> = region.members.clone();
    // S3, then S2, then S1.
    order.sort_by_key(|&u| (std::cmp::Reverse(tree.level(u) as isize - k as isize), u));

    let needed: usize = order.iter().map(|&u| rows_of(u).max(1)).sum();
    if needed > grid.anchor_rows() {
        return Err(SchedulingError::AnchorShortage { region: region.id, needed, available: grid.anchor_rows() });
    }
    let mut anchor = 1;
    let mut out = Vec::with_capacity(order.len());
    for u in order {
        let rows = rows_of(u).max(1);
        out.push(Assignment { node: u, quorum: grid.quorum_with_rows(anchor, rows)? });
        anchor += rows;
    }
    Ok(out)
}

/// Algorithm-1 random selection for the members of one region, in order.
///
/// Each member draws an anchor uniformly; a draw counts as occupied when an
/// earlier member's quorum overlaps it by more than the occupancy threshold,
/// and the member redraws among anchors it has not tried, up to `k` draws in
/// total. Earlier members' choices are known to later ones.
pub fn random_quorum_selection<R: Rng + ?Sized>(
    demands: &[Demand],
    grid: &GridQuorumSystem,
    k: usize,
    rho: f64,
    rng: &mut R,
) -> Result<Vec<Quorum>, SchedulingError> {
    if !demand_sum_feasible(demands, rho) {
        let total: f64 = demands.iter().map(Demand::fraction).sum();
        return Err(SchedulingError::InfeasibleDemand(format!("demands sum to {total:.4}R, above R/{rho}")));
    }
    if grid.m() > 1 {
        let floor = demand_lower_bound(grid.m())?;
        if let Some(d) = demands.iter().find(|d| d.fraction() + 1e-12 < floor) {
            return Err(SchedulingError::InfeasibleDemand(format!("demand {:.4}R is below {floor:.4}R", d.fraction())));
        }
    }
    let mut chosen: Vec<(Quorum, Demand)> = Vec::with_capacity(demands.len());
    for (i, d) in demands.iter().enumerate() {
        let rows = grid.rows_for(d);
        let available = grid.anchor_count(rows);
        if available == 0 || demands.len() > available {
            return Err(SchedulingError::AnchorShortage { region: i, needed: demands.len(), available });
        }
        let candidates: Vec<Quorum> = grid.quorums_with_rows(rows);
        let pick = select_with_retries(rng, available, k, |a| {
            chosen.iter().filter(|(q, dq)| is_occupied(&candidates[a], q, d, dq).unwrap_or(false)).count()
        });
        chosen.push((candidates[pick].clone(), *d));
    }
    Ok(chosen.into_iter().map(|(q, _)| q).collect())
}
