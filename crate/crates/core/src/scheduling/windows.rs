use serde::{Deserialize, Serialize};

use super::SchedulingError;
use crate::topology::{AggregationTree, Region};

/// A region's place in the superframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotWindow {
    pub region_id: usize,
    /// `color mod W`: the period of each superframe the region is active in.
    pub window: usize,
    /// First period, counted from the start of an aggregation round, in
    /// which the region collects data: `window + rotations·W`.
    pub first_period: usize,
    /// How many whole superframes the region waits so that it follows all
    /// of its child regions.
    pub rotations: usize,
}

/// Assigns `window = color mod W` and, working from the deepest regions up,
/// delays each region by whole superframes until it comes strictly after
/// every child region, i.e. every region centred at a child of its centre
/// that itself collects data. Regions with no such children keep their
/// window as their first period.
pub fn assign_slot_windows(regions: &[Region], tree: &AggregationTree, windows: usize) -> Result<Vec<SlotWindow>, SchedulingError> {
    let w = windows.max(1);
    let mut by_center = vec![None; tree.len()];
    for (i, r) in regions.iter().enumerate() {
        by_center[r.center] = Some(i);
    }
    let mut out: Vec<SlotWindow> = regions
        .iter()
        .map(|r| {
            let window = r.color.ok_or(SchedulingError::Uncolored(r.id))? % w;
            Ok(SlotWindow { region_id: r.id, window, first_period: window, rotations: 0 })
        })
        .collect::<Result<_, SchedulingError>>()?;

    let mut order: Vec<usize> = (0..regions.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(tree.level(regions[i].center)), regions[i].id));
    for i in order {
        let latest_child = tree
            .children(regions[i].center)
            .iter()
            .filter(|&&c| !tree.children(c).is_empty())
            .filter_map(|&c| by_center[c])
            .map(|j| out[j].first_period)
            .max();
        if let Some(after) = latest_child {
            let window = out[i].window;
            let mut first = window;
            while first <= after {
                first += w;
            }
            out[i].first_period = first;
            out[i].rotations = (first - window) / w;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_tree, color_regions, extract_regions, InterferenceModel, Topology};

    fn colored(t: &Topology) -> (AggregationTree, Vec<Region>, usize) {
        let tree = build_tree(t).unwrap();
        let mut regions = extract_regions(&tree, t);
        let chi = color_regions(&mut regions, t, &InterferenceModel::rts_cts(), None).unwrap();
        (tree, regions, chi)
    }

    #[test]
    fn single_region() {
        let t = Topology::from_edges(0, [], (1..4).map(|i| (0, i))).unwrap();
        let (tree, regions, _) = colored(&t);
        let w = assign_slot_windows(&regions, &tree, 2).unwrap();
        assert_eq!(w, vec![SlotWindow { region_id: 0, window: 0, first_period: 0, rotations: 0 }]);
    }

    #[test]
    fn chain_puts_the_deepest_region_first() {
        // sink - a - b - c: regions at the sink, a and b, pairwise overlapping.
        let t = Topology::from_edges(0, [], [(0, 1), (1, 2), (2, 3)]).unwrap();
        let (tree, regions, chi) = colored(&t);
        assert_eq!(chi, 3);
        let w = assign_slot_windows(&regions, &tree, 3).unwrap();
        let windows: Vec<usize> = w.iter().map(|s| s.window).collect();
        assert_eq!(windows, vec![0, 1, 2]);
        let firsts: Vec<usize> = w.iter().map(|s| s.first_period).collect();
        assert_eq!(firsts, vec![6, 4, 2]);
        assert_eq!(w[0].rotations, 2);
    }

    #[test]
    fn parent_after_child_with_two_windows() {
        let t = Topology::from_edges(0, [], [(0, 1), (1, 2), (2, 3)]).unwrap();
        let (tree, mut regions, _) = colored(&t);
        // Child region (centre 1) gets window 1, the sink's region window 0.
        regions[0].color = Some(0);
        regions[1].color = Some(1);
        regions[2].color = Some(0);
        let w = assign_slot_windows(&regions, &tree, 2).unwrap();
        assert_eq!(w[2].first_period, 0);
        assert_eq!(w[1].first_period, 1);
        assert_eq!((w[0].window, w[0].first_period, w[0].rotations), (0, 2, 1));
    }

    #[test]
    fn uncolored_is_an_error() {
        let t = Topology::from_edges(0, [], [(0, 1)]).unwrap();
        let tree = build_tree(&t).unwrap();
        let regions = extract_regions(&tree, &t);
        assert_eq!(assign_slot_windows(&regions, &tree, 2), Err(SchedulingError::Uncolored(0)));
    }
}
