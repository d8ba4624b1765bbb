use serde::{Deserialize, Serialize};

use super::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceKind {
    RtsCts,
    Protocol,
    /// SINR reduced to an explicit conflict graph plus a hop radius.
    Physical,
}

/// How far interference reaches, in hops (`phi`), plus any extra
/// node-pair conflicts beyond that radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceModel {
    pub kind: InterferenceKind,
    pub phi: usize,
    /// Extra conflicting node pairs, by label.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conflicts: Vec<(u64, u64)>,
}

impl InterferenceModel {
    pub fn rts_cts() -> Self {
        InterferenceModel { kind: InterferenceKind::RtsCts, phi: 2, conflicts: Vec::new() }
    }

    /// `phi = ⌈interference_range / comm_range⌉ + 1`.
    pub fn protocol(comm_range: f64, interference_range: f64) -> Self {
        let phi = (interference_range / comm_range - 1e-9).ceil().max(1.0) as usize + 1;
        InterferenceModel { kind: InterferenceKind::Protocol, phi, conflicts: Vec::new() }
    }

    pub fn physical(phi: usize, conflicts: Vec<(u64, u64)>) -> Self {
        InterferenceModel { kind: InterferenceKind::Physical, phi: phi.max(1), conflicts }
    }

    /// Whether a transmission at `a` can disturb a reception at `b`.
    pub fn nodes_interfere(&self, topology: &Topology, a: usize, b: usize) -> bool {
        if topology.hops(a, b) as usize <= self.phi {
            return true;
        }
        let (la, lb) = (topology.label(a), topology.label(b));
        self.conflicts.iter().any(|&(x, y)| (x, y) == (la, lb) || (y, x) == (la, lb))
    }

    pub(crate) fn sets_interfere(&self, topology: &Topology, a: &[usize], b: &[usize]) -> bool {
        a.iter().any(|&x| b.iter().any(|&y| self.nodes_interfere(topology, x, y)))
    }
}

/// Greedy sequential coloring of vertices `0..n` in index order: each vertex
/// takes the smallest color unused by its earlier conflicting vertices.
pub fn greedy_coloring(n: usize, mut conflict: impl FnMut(usize, usize) -> bool) -> Vec<usize> {
    let mut colors: Vec<usize> = Vec::with_capacity(n);
    for v in 0..n {
        let mut used = vec![false; v + 1];
        for u in 0..v {
            if conflict(u, v) && colors[u] <= v {
                used[colors[u]] = true;
            }
        }
        colors.push(used.iter().position(|&x| !x).unwrap());
    }
    colors
}

/// Colors used by greedily coloring the conflict graph of the given
/// communication sets: two sets conflict when they share a node or any pair
/// of their members interferes.
pub fn interference_constant_of_sets(sets: &[Vec<usize>], topology: &Topology, model: &InterferenceModel) -> usize {
    let colors = greedy_coloring(sets.len(), |i, j| model.sets_interfere(topology, &sets[i], &sets[j]));
    colors.iter().max().map_or(0, |c| c + 1)
}

/// `ρ(I)` for a topology: the communication sets are the closed one-hop
/// neighbourhoods of every node.
pub fn interference_constant(topology: &Topology, model: &InterferenceModel) -> usize {
    let sets: Vec<Vec<usize>> = (0..topology.len())
        .map(|u| std::iter::once(u).chain(topology.neighbors(u).iter().copied()).collect())
        .collect();
    interference_constant_of_sets(&sets, topology, model)
}
