//! Immutable sparse networks.
//!
//! Adjacency is stored per node as a sorted array of `(neighbor, weight)`
//! pairs. Directed networks keep a second array of incoming edges so both
//! directions can be scanned in time proportional to the degree. Undirected
//! networks store each edge under both endpoints (a self-loop once), and
//! their in-neighbors are the same as their neighbors.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GraphKind {
    pub directed: bool,
    pub self_loops: bool,
}

impl GraphKind {
    pub const UNDIRECTED: GraphKind = GraphKind { directed: false, self_loops: false };
    pub const DIRECTED: GraphKind = GraphKind { directed: true, self_loops: false };

    pub fn new(directed: bool, self_loops: bool) -> Self {
        GraphKind { directed, self_loops }
    }

    /// Number of node pairs that can carry an edge inside one cluster of `n` nodes.
    #[inline]
    pub fn diagonal_pairs(self, n: u64) -> u64 {
        match (self.directed, self.self_loops) {
            (false, false) => n * n.saturating_sub(1) / 2,
            (false, true) => n * (n + 1) / 2,
            (true, false) => n * n.saturating_sub(1),
            (true, true) => n * n,
        }
    }

    /// Number of node pairs in the block between clusters of sizes `n_k` and `n_l`.
    #[inline]
    pub fn block_pairs(self, n_k: u64, n_l: u64, diagonal: bool) -> u64 {
        if diagonal {
            self.diagonal_pairs(n_k)
        } else {
            n_k * n_l
        }
    }

    /// Total number of candidate pairs in a network of `n` nodes.
    pub fn total_pairs(self, n: u64) -> u64 {
        self.diagonal_pairs(n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeModel {
    /// Bernoulli edges; every present edge has weight 1.
    Binary,
    /// Poisson edge counts; present edges have integer weight >= 1.
    CountWeighted,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: malformed edge line: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: edge weight must be a positive integer")]
    InvalidWeight { line: usize },
    #[error("line {line}: binary edge carries weight {weight}, expected 1")]
    NonBinaryWeight { line: usize, weight: u64 },
    #[error("line {line}: self-loop on node {node} but the graph kind forbids self-loops")]
    SelfLoopForbidden { line: usize, node: u32 },
    #[error("line {line}: duplicate edge {src} {dst}")]
    DuplicateEdge { line: usize, src: u32, dst: u32 },
    #[error("node {node} out of range for a network of {n_nodes} nodes")]
    NodeOutOfRange { node: usize, n_nodes: usize },
    #[error("nodes={declared} header is smaller than the largest node id {max_id}")]
    HeaderTooSmall { declared: usize, max_id: u32 },
}

/// One stored edge endpoint: `(neighbor id, weight)`.
pub type Adjacent = (u32, u32);

#[derive(Clone, Debug, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    entries: Vec<Adjacent>,
}

impl Csr {
    fn build(n_nodes: usize, edges: impl Iterator<Item = (u32, u32, u32)> + Clone) -> Csr {
        let mut offsets = alloc::vec![0usize; n_nodes + 1];
        for (s, _, _) in edges.clone() {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..n_nodes {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut entries = alloc::vec![(0u32, 0u32); offsets[n_nodes]];
        for (s, d, w) in edges {
            entries[fill[s as usize]] = (d, w);
            fill[s as usize] += 1;
        }
        for i in 0..n_nodes {
            entries[offsets[i]..offsets[i + 1]].sort_unstable_by_key(|e| e.0);
        }
        Csr { offsets, entries }
    }

    #[inline]
    fn row(&self, i: usize) -> &[Adjacent] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// An immutable sparse network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    n_nodes: usize,
    kind: GraphKind,
    model: EdgeModel,
    out: Csr,
    incoming: Option<Csr>,
    n_edges: usize,
    total_weight: u64,
}

impl Network {
    /// Builds a network from `(src, dst, weight)` triples.
    ///
    /// For undirected kinds each unordered pair must appear once, in either
    /// orientation.
    pub fn from_edges(
        n_nodes: usize,
        kind: GraphKind,
        model: EdgeModel,
        edges: impl IntoIterator<Item = (u32, u32, u32)>,
    ) -> Result<Network, GraphError> {
        let lined = edges.into_iter().enumerate().map(|(i, (s, d, w))| (s, d, w, i + 1));
        Self::from_lined_edges(n_nodes, kind, model, lined.collect())
    }

    fn from_lined_edges(
        n_nodes: usize,
        kind: GraphKind,
        model: EdgeModel,
        mut edges: Vec<(u32, u32, u32, usize)>,
    ) -> Result<Network, GraphError> {
        for &(s, d, w, line) in &edges {
            for node in [s, d] {
                if node as usize >= n_nodes {
                    return Err(GraphError::NodeOutOfRange { node: node as usize, n_nodes });
                }
            }
            check_edge(kind, model, s, d, w as u64, line)?;
        }
        if !kind.directed {
            for e in edges.iter_mut() {
                if e.0 > e.1 {
                    core::mem::swap(&mut e.0, &mut e.1);
                }
            }
        }
        edges.sort_unstable_by_key(|&(s, d, _, line)| (s, d, line));
        for pair in edges.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(GraphError::DuplicateEdge {
                    line: pair[1].3,
                    src: pair[1].0,
                    dst: pair[1].1,
                });
            }
        }
        let total_weight = edges.iter().map(|e| e.2 as u64).sum();
        let n_edges = edges.len();
        let (out, incoming) = if kind.directed {
            let out = Csr::build(n_nodes, edges.iter().map(|&(s, d, w, _)| (s, d, w)));
            let inc = Csr::build(n_nodes, edges.iter().map(|&(s, d, w, _)| (d, s, w)));
            (out, Some(inc))
        } else {
            let both = edges.iter().flat_map(|&(s, d, w, _)| {
                let mirror = if s != d { Some((d, s, w)) } else { None };
                core::iter::once((s, d, w)).chain(mirror)
            });
            (Csr::build(n_nodes, both), None)
        };
        Ok(Network { n_nodes, kind, model, out, incoming, n_edges, total_weight })
    }

    /// An edgeless network.
    pub fn empty(n_nodes: usize, kind: GraphKind, model: EdgeModel) -> Network {
        Self::from_edges(n_nodes, kind, model, core::iter::empty()).expect("edgeless network is valid")
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    #[inline]
    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    #[inline]
    pub fn model(&self) -> EdgeModel {
        self.model
    }

    /// Number of stored distinct pairs (unordered pairs when undirected).
    #[inline]
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    /// `M`: total edge weight, each unordered pair counted once when undirected.
    #[inline]
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// Out-neighbors (directed) or all incident neighbors (undirected).
    pub fn neighbors(&self, i: usize) -> Result<&[Adjacent], GraphError> {
        self.check_node(i)?;
        Ok(self.out.row(i))
    }

    /// In-neighbors; identical to [`Network::neighbors`] for undirected networks.
    pub fn in_neighbors(&self, i: usize) -> Result<&[Adjacent], GraphError> {
        self.check_node(i)?;
        Ok(self.in_row(i))
    }

    #[inline]
    pub(crate) fn out_row(&self, i: usize) -> &[Adjacent] {
        self.out.row(i)
    }

    #[inline]
    pub(crate) fn in_row(&self, i: usize) -> &[Adjacent] {
        match &self.incoming {
            Some(inc) => inc.row(i),
            None => self.out.row(i),
        }
    }

    fn check_node(&self, i: usize) -> Result<(), GraphError> {
        if i < self.n_nodes {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange { node: i, n_nodes: self.n_nodes })
        }
    }

    /// Distinct stored pairs in canonical order: sorted by `(src, dst)`, with
    /// `src <= dst` for undirected networks.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        let directed = self.kind.directed;
        (0..self.n_nodes).flat_map(move |s| {
            self.out
                .row(s)
                .iter()
                .filter(move |&&(d, _)| directed || s as u32 <= d)
                .map(move |&(d, w)| (s as u32, d, w))
        })
    }

    /// Weight stored on the ordered pair `(i, j)`, 0 when absent.
    pub fn weight(&self, i: usize, j: usize) -> u32 {
        let row = self.out.row(i);
        match row.binary_search_by_key(&(j as u32), |e| e.0) {
            Ok(pos) => row[pos].1,
            Err(_) => 0,
        }
    }

    /// Canonical edge-list text: a `nodes=N` header then sorted `src dst weight` lines.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(16 * self.n_edges + 16);
        let _ = writeln!(out, "nodes={}", self.n_nodes);
        for (s, d, w) in self.edges() {
            let _ = writeln!(out, "{s} {d} {w}");
        }
        out
    }
}

fn check_edge(kind: GraphKind, model: EdgeModel, s: u32, d: u32, w: u64, line: usize) -> Result<(), GraphError> {
    if w == 0 || w > u32::MAX as u64 {
        return Err(GraphError::InvalidWeight { line });
    }
    if model == EdgeModel::Binary && w != 1 {
        return Err(GraphError::NonBinaryWeight { line, weight: w });
    }
    if s == d && !kind.self_loops {
        return Err(GraphError::SelfLoopForbidden { line, node: s });
    }
    Ok(())
}

/// Parses the edge-list text format.
///
/// Blank lines and lines starting with `#` are skipped. An optional first
/// directive `nodes=N` fixes the node count above the largest id. Every other
/// line is `src dst` or `src dst weight` with 0-based ids.
pub fn parse_edge_list(text: &str, kind: GraphKind, model: EdgeModel) -> Result<Network, GraphError> {
    let mut declared: Option<usize> = None;
    let mut seen_edge = false;
    let mut edges: Vec<(u32, u32, u32, usize)> = Vec::new();
    let mut max_id: Option<u32> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("nodes=") {
            if seen_edge || declared.is_some() {
                return Err(GraphError::Malformed {
                    line,
                    reason: "nodes= directive must precede all edges".into(),
                });
            }
            let n = rest.trim().parse::<usize>().map_err(|_| GraphError::Malformed {
                line,
                reason: format!("bad node count {rest:?}"),
            })?;
            declared = Some(n);
            continue;
        }
        seen_edge = true;
        let mut fields = trimmed.split_whitespace();
        let src = parse_id(fields.next(), line)?;
        let dst = parse_id(fields.next(), line)?;
        let weight = match fields.next() {
            None => 1u64,
            Some(tok) => {
                if tok.starts_with('-') {
                    return Err(GraphError::InvalidWeight { line });
                }
                tok.parse::<u64>().map_err(|_| GraphError::InvalidWeight { line })?
            }
        };
        if fields.next().is_some() {
            return Err(GraphError::Malformed { line, reason: "too many fields".into() });
        }
        check_edge(kind, model, src, dst, weight, line)?;
        max_id = Some(max_id.map_or(src.max(dst), |m| m.max(src).max(dst)));
        edges.push((src, dst, weight as u32, line));
    }

    let implied = max_id.map_or(0, |m| m as usize + 1);
    let n_nodes = match declared {
        Some(n) if n < implied => {
            return Err(GraphError::HeaderTooSmall { declared: n, max_id: max_id.unwrap_or(0) })
        }
        Some(n) => n,
        None => implied,
    };
    Network::from_lined_edges(n_nodes, kind, model, edges)
}

fn parse_id(tok: Option<&str>, line: usize) -> Result<u32, GraphError> {
    let tok = tok.ok_or_else(|| GraphError::Malformed { line, reason: "expected `src dst [weight]`".into() })?;
    tok.parse::<u32>().map_err(|_| GraphError::Malformed { line, reason: format!("bad node id {tok:?}") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const DB: (GraphKind, EdgeModel) = (GraphKind::DIRECTED, EdgeModel::Binary);

    #[test]
    fn parse_counts_nodes_and_weight() {
        let net = parse_edge_list("0 1\n1 2\n", DB.0, DB.1).unwrap();
        assert_eq!(net.n_nodes(), 3);
        assert_eq!(net.total_weight(), 2);

        let net = parse_edge_list("0 1 3\n", GraphKind::DIRECTED, EdgeModel::CountWeighted).unwrap();
        assert_eq!(net.total_weight(), 3);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(matches!(
            parse_edge_list("0 0\n", DB.0, DB.1),
            Err(GraphError::SelfLoopForbidden { line: 1, node: 0 })
        ));
        assert!(matches!(
            parse_edge_list("0 1\n0 1\n", DB.0, DB.1),
            Err(GraphError::DuplicateEdge { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1\n1 0\n", GraphKind::UNDIRECTED, EdgeModel::Binary),
            Err(GraphError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1 0\n", GraphKind::DIRECTED, EdgeModel::CountWeighted),
            Err(GraphError::InvalidWeight { line: 1 })
        ));
        assert!(matches!(
            parse_edge_list("0 1 -2\n", GraphKind::DIRECTED, EdgeModel::CountWeighted),
            Err(GraphError::InvalidWeight { .. })
        ));
        assert!(matches!(parse_edge_list("0 1 2\n", DB.0, DB.1), Err(GraphError::NonBinaryWeight { .. })));
        assert!(matches!(parse_edge_list("0 x\n", DB.0, DB.1), Err(GraphError::Malformed { .. })));
        assert!(matches!(parse_edge_list("7\n", DB.0, DB.1), Err(GraphError::Malformed { .. })));
        assert!(matches!(parse_edge_list("0 1 1 1\n", DB.0, DB.1), Err(GraphError::Malformed { .. })));
        assert!(matches!(parse_edge_list("nodes=2\n0 5\n", DB.0, DB.1), Err(GraphError::HeaderTooSmall { .. })));
        assert!(matches!(parse_edge_list("0 1\nnodes=9\n", DB.0, DB.1), Err(GraphError::Malformed { .. })));
    }

    #[test]
    fn header_comments_and_isolated_nodes() {
        let net = parse_edge_list("# comment\nnodes=5\n\n0 1\n", DB.0, DB.1).unwrap();
        assert_eq!(net.n_nodes(), 5);
        assert!(net.neighbors(4).unwrap().is_empty());
        assert!(net.neighbors(5).is_err());
    }

    #[test]
    fn star_neighbors() {
        let net = parse_edge_list("0 1\n0 2\n0 3\n", GraphKind::UNDIRECTED, EdgeModel::Binary).unwrap();
        assert_eq!(net.neighbors(0).unwrap(), &[(1, 1), (2, 1), (3, 1)]);
        assert_eq!(net.neighbors(2).unwrap(), &[(0, 1)]);
        assert_eq!(net.total_weight(), 3);
    }

    #[test]
    fn self_loop_listed_once() {
        let kind = GraphKind::new(false, true);
        let net = parse_edge_list("1 1\n0 1\n", kind, EdgeModel::Binary).unwrap();
        assert_eq!(net.neighbors(1).unwrap(), &[(0, 1), (1, 1)]);
        // both endpoint incidences minus the self-loop weight counted once
        let deg: u64 = (0..2).flat_map(|i| net.neighbors(i).unwrap()).map(|e| e.1 as u64).sum();
        assert_eq!(deg, 2 * net.total_weight() - 1);
    }

    #[test]
    fn in_neighbors_directed_and_undirected() {
        let net = parse_edge_list("0 1\n", DB.0, DB.1).unwrap();
        assert_eq!(net.in_neighbors(1).unwrap(), &[(0, 1)]);
        assert!(net.in_neighbors(0).unwrap().is_empty());
        assert!(net.in_neighbors(2).is_err());

        let net = parse_edge_list("0 1\n", GraphKind::UNDIRECTED, EdgeModel::Binary).unwrap();
        assert_eq!(net.in_neighbors(0).unwrap(), &[(1, 1)]);
    }

    #[test]
    fn canonical_writer_sorts() {
        let text = "2 0\n0 2\n1 0\n";
        let net = parse_edge_list(text, DB.0, DB.1).unwrap();
        assert_eq!(net.to_edge_list(), "nodes=3\n0 2 1\n1 0 1\n2 0 1\n");

        let net = parse_edge_list("2 0\n1 0\n", GraphKind::UNDIRECTED, EdgeModel::Binary).unwrap();
        assert_eq!(net.to_edge_list(), "nodes=3\n0 1 1\n0 2 1\n");
    }

    #[test]
    fn weight_lookup() {
        let net = Network::from_edges(3, GraphKind::DIRECTED, EdgeModel::CountWeighted, vec![(0, 2, 4)]).unwrap();
        assert_eq!(net.weight(0, 2), 4);
        assert_eq!(net.weight(2, 0), 0);
    }

    #[test]
    fn pair_counts_match_four_forms() {
        assert_eq!(GraphKind::new(false, false).diagonal_pairs(10), 45);
        assert_eq!(GraphKind::new(false, true).diagonal_pairs(10), 55);
        assert_eq!(GraphKind::new(true, false).diagonal_pairs(10), 90);
        assert_eq!(GraphKind::new(true, true).diagonal_pairs(10), 100);
        assert_eq!(GraphKind::DIRECTED.block_pairs(3, 4, false), 12);
        assert_eq!(GraphKind::UNDIRECTED.diagonal_pairs(0), 0);
    }
}
