//! Communication graphs, the BFS aggregation tree built on a connected
//! dominating set, regions and their interference-aware coloring.
//!
//! Nodes carry arbitrary `u64` labels on the way in and out; internally they
//! are dense indices assigned in ascending label order, so "smallest ID" tie
//! breaks and "smallest index" tie breaks agree.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

mod interference;
mod region;
mod tree;

pub use interference::{greedy_coloring, interference_constant, interference_constant_of_sets, InterferenceKind, InterferenceModel};
pub use region::{color_regions, extract_regions, region_distance, region_relation, Region, RegionRelation};
pub use tree::{build_tree, AggregationTree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no `# sink <id>` header")]
    MissingSink,
    #[error("unknown node {0}")]
    UnknownNode(u64),
    #[error("topology is disconnected: node {0} cannot reach the sink")]
    Disconnected(u64),
    #[error("no connected topology after {0} attempts")]
    GeneratorGaveUp(usize),
    #[error("region {region} needs more than {palette} colors")]
    PaletteExhausted { region: usize, palette: usize },
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
}

/// Undirected communication graph with a designated sink.
#[derive(Debug, Clone)]
pub struct Topology {
    labels: Vec<u64>,
    positions: Vec<Option<(f64, f64)>>,
    adj: Vec<Vec<usize>>,
    sink: usize,
    comm_range: f64,
    interference_range: f64,
    hops: OnceLock<Vec<Vec<u32>>>,
}

pub const UNREACHABLE: u32 = u32::MAX;

impl Topology {
    /// Builds a topology from labels and undirected edges. Nodes that only
    /// appear in `nodes` (or as the sink) are isolated. Self-loops are dropped.
    pub fn from_edges(
        sink: u64,
        nodes: impl IntoIterator<Item = u64>,
        edges: impl IntoIterator<Item = (u64, u64)>,
    ) -> Result<Self, TopologyError> {
        let edges: Vec<(u64, u64)> = edges.into_iter().collect();
        let mut set: BTreeSet<u64> = nodes.into_iter().collect();
        set.insert(sink);
        for &(u, v) in &edges {
            set.insert(u);
            set.insert(v);
        }
        let labels: Vec<u64> = set.into_iter().collect();
        let index: BTreeMap<u64, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let mut adj = vec![BTreeSet::new(); labels.len()];
        for (u, v) in edges {
            if u != v {
                adj[index[&u]].insert(index[&v]);
                adj[index[&v]].insert(index[&u]);
            }
        }
        let n = labels.len();
        Ok(Topology {
            sink: index[&sink],
            labels,
            positions: vec![None; n],
            adj: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
            comm_range: 1.0,
            interference_range: 1.0,
            hops: OnceLock::new(),
        })
    }

    /// Unit-disk graph over explicit positions. Node `i` gets label `i`.
    pub fn from_positions(positions: &[(f64, f64)], range: f64, sink: usize) -> Result<Self, TopologyError> {
        if sink >= positions.len() {
            return Err(TopologyError::UnknownNode(sink as u64));
        }
        let mut edges = Vec::new();
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                let (dx, dy) = (positions[i].0 - positions[j].0, positions[i].1 - positions[j].1);
                if (dx * dx + dy * dy).sqrt() <= range {
                    edges.push((i as u64, j as u64));
                }
            }
        }
        let mut t = Self::from_edges(sink as u64, 0..positions.len() as u64, edges)?;
        t.positions = positions.iter().map(|&p| Some(p)).collect();
        t.comm_range = range;
        t.interference_range = range;
        Ok(t)
    }

    /// Random geometric graph: `n` points uniform in an `area × area` square,
    /// linked when within `range`. Layouts are redrawn from the same seeded
    /// stream until the graph is connected. The sink is the node closest to
    /// the centre of the square.
    pub fn random_geometric(n: usize, area: f64, range: f64, seed: u64) -> Result<Self, TopologyError> {
        if n == 0 || !(area > 0.0) || !(range > 0.0) {
            return Err(TopologyError::InvalidParameter(format!("n={n} area={area} range={range}")));
        }
        const ATTEMPTS: usize = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..ATTEMPTS {
            let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..area), rng.gen_range(0.0..area))).collect();
            let t = Self::from_positions(&pos, range, closest_to(&pos, (area / 2.0, area / 2.0)))?;
            if t.is_connected() {
                return Ok(t);
            }
        }
        Err(TopologyError::GeneratorGaveUp(ATTEMPTS))
    }

    /// `rows × cols` lattice with unit spacing, each point jittered by up to
    /// `jitter` in both axes. The sink is the point closest to the centre.
    pub fn jittered_grid(rows: usize, cols: usize, range: f64, jitter: f64, seed: u64) -> Result<Self, TopologyError> {
        if rows == 0 || cols == 0 || !(range > 0.0) || !(jitter >= 0.0) {
            return Err(TopologyError::InvalidParameter(format!("{rows}x{cols} range={range} jitter={jitter}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jit = |rng: &mut ChaCha8Rng| if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
        let pos: Vec<(f64, f64)> = (0..rows * cols)
            .map(|i| ((i % cols) as f64 + jit(&mut rng), (i / cols) as f64 + jit(&mut rng)))
            .collect();
        let centre = ((cols - 1) as f64 / 2.0, (rows - 1) as f64 / 2.0);
        let t = Self::from_positions(&pos, range, closest_to(&pos, centre))?;
        if !t.is_connected() {
            return Err(TopologyError::InvalidParameter(format!("range {range} leaves the grid disconnected")));
        }
        Ok(t)
    }

    /// Records the interference range used by the protocol model. Defaults
    /// to the communication range.
    pub fn with_ranges(mut self, comm_range: f64, interference_range: f64) -> Self {
        self.comm_range = comm_range;
        self.interference_range = interference_range;
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn label(&self, node: usize) -> u64 {
        self.labels[node]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn index_of(&self, label: u64) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    pub fn position(&self, node: usize) -> Option<(f64, f64)> {
        self.positions[node]
    }

    pub fn comm_range(&self) -> f64 {
        self.comm_range
    }

    pub fn interference_range(&self) -> f64 {
        self.interference_range
    }

    /// Neighbours of `node` in ascending index order.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adj[node].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn are_adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// BFS hop counts from `source`; unreachable nodes get [`UNREACHABLE`].
    pub fn bfs(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.len()];
        let mut queue = VecDeque::from([source]);
        dist[source] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == UNREACHABLE {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Hop distance between two nodes, computed once for all pairs on first use.
    pub fn hops(&self, u: usize, v: usize) -> u32 {
        self.hops.get_or_init(|| (0..self.len()).map(|s| self.bfs(s)).collect())[u][v]
    }

    pub fn is_connected(&self) -> bool {
        self.first_unreachable().is_none()
    }

    pub(crate) fn first_unreachable(&self) -> Option<usize> {
        self.bfs(self.sink).iter().position(|&d| d == UNREACHABLE)
    }

    /// Parses the edge-list format: a `# sink <id>` header, then one `u v`
    /// pair per line. A line holding a single id declares a node without
    /// edges, `# pos <id> <x> <y>` attaches a position, and any other `#`
    /// line is a comment.
    pub fn parse_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut sink = None;
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut positions = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| TopologyError::Parse { line, message };
            let num = |tok: &str| tok.parse::<u64>().map_err(|_| err(format!("`{tok}` is not a node id")));
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                let toks: Vec<&str> = comment.split_whitespace().collect();
                match toks.as_slice() {
                    ["sink", id] => sink = Some(num(id)?),
                    ["sink", ..] => return Err(err("expected `# sink <id>`".into())),
                    ["pos", id, x, y] => {
                        let coord = |t: &str| t.parse::<f64>().map_err(|_| err(format!("`{t}` is not a coordinate")));
                        positions.push((num(id)?, (coord(x)?, coord(y)?)));
                    }
                    _ => {}
                }
                continue;
            }
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            match toks.as_slice() {
                [u] => nodes.push(num(u)?),
                [u, v] => edges.push((num(u)?, num(v)?)),
                _ => return Err(err(format!("expected `u v`, found `{trimmed}`"))),
            }
        }
        let sink = sink.ok_or(TopologyError::MissingSink)?;
        let mut t = Self::from_edges(sink, nodes, edges)?;
        for (label, p) in positions {
            let idx = t.index_of(label).ok_or(TopologyError::UnknownNode(label))?;
            t.positions[idx] = Some(p);
        }
        Ok(t)
    }

    /// Renders the topology in the format read by [`parse_edge_list`](Self::parse_edge_list).
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# sink {}\n", self.label(self.sink));
        for (i, p) in self.positions.iter().enumerate() {
            if let Some((x, y)) = p {
                let _ = writeln!(out, "# pos {} {x} {y}", self.label(i));
            }
        }
        for u in 0..self.len() {
            if self.adj[u].is_empty() && u != self.sink {
                let _ = writeln!(out, "{}", self.label(u));
            }
        }
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{} {}", self.label(u), self.label(v));
        }
        out
    }
}

fn closest_to(pos: &[(f64, f64)], c: (f64, f64)) -> usize {
    let d = |p: &(f64, f64)| (p.0 - c.0).powi(2) + (p.1 - c.1).powi(2);
    (0..pos.len()).min_by(|&a, &b| d(&pos[a]).total_cmp(&d(&pos[b])).then(a.cmp(&b))).unwrap_or(0)
}
