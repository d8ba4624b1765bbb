use serde::Serialize;

use super::{greedy_coloring, AggregationTree, InterferenceModel, Topology, TopologyError};

/// Closed one-hop neighbourhood of a CDS node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Region {
    pub id: usize,
    pub center: usize,
    /// Sorted, centre included.
    pub members: Vec<usize>,
    pub color: Option<usize>,
}

impl Region {
    pub fn contains(&self, node: usize) -> bool {
        self.members.binary_search(&node).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionRelation {
    Overlap,
    Neighboring,
    Disjoint,
}

/// One region per CDS node, ids in ascending centre order.
pub fn extract_regions(tree: &AggregationTree, topology: &Topology) -> Vec<Region> {
    tree.cds_nodes()
        .into_iter()
        .enumerate()
        .map(|(id, center)| {
            let mut members: Vec<usize> = topology.neighbors(center).to_vec();
            members.push(center);
            members.sort_unstable();
            Region { id, center, members, color: None }
        })
        .collect()
}

/// Smallest hop distance between a member of `a` and a member of `b`.
pub fn region_distance(a: &Region, b: &Region, topology: &Topology) -> usize {
    a.members
        .iter()
        .flat_map(|&x| b.members.iter().map(move |&y| topology.hops(x, y)))
        .min()
        .unwrap_or(u32::MAX) as usize
}

pub fn region_relation(a: &Region, b: &Region, topology: &Topology, model: &InterferenceModel) -> RegionRelation {
    if a.members.iter().any(|&x| b.contains(x)) {
        RegionRelation::Overlap
    } else if model.sets_interfere(topology, &a.members, &b.members) {
        RegionRelation::Neighboring
    } else {
        RegionRelation::Disjoint
    }
}

/// Greedy coloring in region-id order so that overlapping or neighbouring
/// regions never share a color. Returns the number of colors used. With a
/// `palette`, running out of colors is an error.
pub fn color_regions(
    regions: &mut [Region],
    topology: &Topology,
    model: &InterferenceModel,
    palette: Option<usize>,
) -> Result<usize, TopologyError> {
    let colors = greedy_coloring(regions.len(), |i, j| {
        region_relation(&regions[i], &regions[j], topology, model) != RegionRelation::Disjoint
    });
    for (region, &c) in regions.iter_mut().zip(&colors) {
        if let Some(p) = palette {
            if c >= p {
                return Err(TopologyError::PaletteExhausted { region: region.id, palette: p });
            }
        }
        region.color = Some(c);
    }
    Ok(colors.iter().max().map_or(0, |c| c + 1))
}
