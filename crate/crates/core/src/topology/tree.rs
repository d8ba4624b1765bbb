use serde::Serialize;

use super::{Topology, TopologyError};

/// BFS aggregation tree rooted at the sink whose internal nodes form a
/// connected dominating set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AggregationTree {
    sink: usize,
    parent: Vec<Option<usize>>,
    level: Vec<usize>,
    dominator: Vec<bool>,
    cds: Vec<bool>,
    children: Vec<Vec<usize>>,
    radius: usize,
    max_degree: usize,
}

/// Layers the graph by BFS from the sink, picks a maximal independent set
/// of dominators greedily in `(level, id)` order, then gives every node a
/// parent one level up: the smallest-id dominator there if any, else an
/// existing connector, else the smallest-id upper neighbour, which is promoted
/// to connector. Parents are therefore always CDS nodes exactly one level up.
pub fn build_tree(topology: &Topology) -> Result<AggregationTree, TopologyError> {
    if let Some(u) = topology.first_unreachable() {
        return Err(TopologyError::Disconnected(topology.label(u)));
    }
    let n = topology.len();
    let sink = topology.sink();
    let level: Vec<usize> = topology.bfs(sink).into_iter().map(|d| d as usize).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&u| (level[u], u));

    let mut dominator = vec![false; n];
    for &u in &order {
        if !topology.neighbors(u).iter().any(|&v| dominator[v]) {
            dominator[u] = true;
        }
    }

    let mut cds = dominator.clone();
    let mut parent = vec![None; n];
    for &u in order.iter().skip(1) {
        let up: Vec<usize> = topology.neighbors(u).iter().copied().filter(|&v| level[v] + 1 == level[u]).collect();
        let p = up
            .iter()
            .copied()
            .find(|&v| dominator[v])
            .or_else(|| up.iter().copied().find(|&v| cds[v]))
            .unwrap_or(up[0]);
        cds[p] = true;
        parent[u] = Some(p);
    }

    let mut children = vec![Vec::new(); n];
    for u in 0..n {
        if let Some(p) = parent[u] {
            children[p].push(u);
        }
    }
    Ok(AggregationTree {
        sink,
        radius: level.iter().copied().max().unwrap_or(0),
        max_degree: topology.max_degree(),
        parent,
        level,
        dominator,
        cds,
        children,
    })
}

impl AggregationTree {
    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn level(&self, node: usize) -> usize {
        self.level[node]
    }

    /// Children in ascending id order.
    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn is_dominator(&self, node: usize) -> bool {
        self.dominator[node]
    }

    pub fn is_cds(&self, node: usize) -> bool {
        self.cds[node]
    }

    pub fn cds_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&u| self.cds[u]).collect()
    }

    /// Eccentricity of the sink, which is also the deepest level.
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Largest degree in the underlying graph.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of nodes in the subtree rooted at `node`, itself included.
    pub fn subtree_size(&self, node: usize) -> usize {
        1 + self.children[node].iter().map(|&c| self.subtree_size(c)).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sink_only() {
        let t = Topology::from_edges(3, [], []).unwrap();
        let tree = build_tree(&t).unwrap();
        assert_eq!((tree.len(), tree.radius(), tree.max_degree()), (1, 0, 0));
        assert!(tree.is_cds(0));
    }

    #[test]
    fn path() {
        let t = Topology::from_edges(0, [], [(0, 1), (1, 2)]).unwrap();
        let tree = build_tree(&t).unwrap();
        assert_eq!((0..3).map(|u| tree.level(u)).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(tree.radius(), 2);
        assert_eq!(tree.parent(2), Some(1));
        assert!(tree.is_cds(1) && !tree.is_dominator(1));
        assert!(tree.is_dominator(2));
    }

    #[test]
    fn star() {
        let t = Topology::from_edges(0, [], (1..=5).map(|i| (0, i))).unwrap();
        let tree = build_tree(&t).unwrap();
        assert!((1..=5).all(|u| tree.level(u) == 1 && tree.parent(u) == Some(0)));
        assert_eq!(tree.max_degree(), 5);
        assert_eq!(tree.cds_nodes(), vec![0]);
    }

    #[test]
    fn disconnected_is_an_error() {
        let t = Topology::from_edges(0, [9], [(0, 1)]).unwrap();
        assert_eq!(build_tree(&t), Err(TopologyError::Disconnected(9)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn tree_properties(seed in 0u64..10_000, n in 2usize..60) {
            let t = Topology::random_geometric(n, 6.0, 1.8, seed).unwrap();
            let tree = build_tree(&t).unwrap();
            for u in 0..n {
                if u == t.sink() {
                    prop_assert!(tree.parent(u).is_none());
                    continue;
                }
                let p = tree.parent(u).unwrap();
                prop_assert!(t.are_adjacent(u, p));
                prop_assert_eq!(tree.level(u), tree.level(p) + 1);
                prop_assert!(tree.is_cds(p));
                // Domination.
                prop_assert!(tree.is_cds(u) || t.neighbors(u).iter().any(|&v| tree.is_dominator(v)));
            }
            // The CDS is connected: every CDS node reaches the sink through CDS parents.
            for u in tree.cds_nodes() {
                let mut x = u;
                while let Some(p) = tree.parent(x) {
                    prop_assert!(tree.is_cds(p));
                    x = p;
                }
                prop_assert_eq!(x, t.sink());
            }
            prop_assert_eq!(tree.subtree_size(t.sink()), n);
            prop_assert_eq!(&tree, &build_tree(&t).unwrap());
        }
    }
}
