//! Immutable undirected graph in compressed adjacency form, plus the
//! edge-list and cover file loaders.
//!
//! Node ids are dense (`0..n`). External labels from input files are kept in
//! a bijective label map so results can be written back in the caller's
//! namespace.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::membership::CommunityCover;

/// Dense node identifier in `0..n`.
pub type NodeId = usize;

/// What the loader dropped while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub duplicate_edges: usize,
    pub self_loops: usize,
    /// Lines carrying more than two tokens (weights are ignored).
    pub weighted_lines: usize,
}

/// Undirected, unweighted simple graph.
///
/// Adjacency lists are sorted and duplicate free; every edge `{u, v}` is
/// stored in both `u`'s and `v`'s list.
#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl Graph {
    /// Builds a graph over nodes labelled `"0".."n-1"`.
    pub fn from_edges<I>(n: usize, edges: I) -> (Graph, LoadReport)
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges)
    }

    /// Builds a graph from explicit labels and dense-id edges. Self-loops and
    /// repeated edges are dropped and counted.
    ///
    /// Panics if an endpoint is `>= labels.len()`.
    pub fn with_labels<I>(labels: Vec<String>, edges: I) -> (Graph, LoadReport)
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let n = labels.len();
        let mut report = LoadReport::default();
        let mut lists: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) outside 0..{n}");
            if u == v {
                report.self_loops += 1;
                continue;
            }
            lists[u].push(v);
            lists[v].push(u);
        }

        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        let mut dup_half_edges = 0;
        for list in &mut lists {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            dup_half_edges += before - list.len();
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        report.duplicate_edges = dup_half_edges / 2;

        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        let graph = Graph {
            offsets,
            targets,
            labels,
            index,
        };
        (graph, report)
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of undirected edges, each counted once.
    pub fn m(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Sorted neighbor list of `v`. Panics when `v >= n`.
    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Bounds-checked variant of [`Graph::neighbors`].
    pub fn try_neighbors(&self, v: NodeId) -> Result<&[NodeId]> {
        if v >= self.n() {
            return Err(Error::OutOfRange {
                index: v,
                n: self.n(),
            });
        }
        Ok(self.neighbors(v))
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Iterates each undirected edge once as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// External label of a node.
    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id_of(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    /// Subgraph induced by `nodes`. The returned vector maps new ids to old
    /// ids; new ids follow ascending old-id order. Labels are preserved.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Result<(Graph, Vec<NodeId>)> {
        if nodes.is_empty() {
            return Err(Error::EmptyInput("induced subgraph of empty node set".into()));
        }
        let mut new_to_old: Vec<NodeId> = nodes.to_vec();
        new_to_old.sort_unstable();
        new_to_old.dedup();
        if let Some(&bad) = new_to_old.last().filter(|&&v| v >= self.n()) {
            return Err(Error::OutOfRange {
                index: bad,
                n: self.n(),
            });
        }
        let mut old_to_new = vec![usize::MAX; self.n()];
        for (new, &old) in new_to_old.iter().enumerate() {
            old_to_new[old] = new;
        }
        let labels = new_to_old.iter().map(|&v| self.labels[v].clone()).collect();
        let old_to_new = &old_to_new;
        let edges = new_to_old.iter().flat_map(|&u| {
            let nu = old_to_new[u];
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u && old_to_new[v] != usize::MAX)
                .map(move |&v| (nu, old_to_new[v]))
        });
        let (sub, _) = Graph::with_labels(labels, edges.collect::<Vec<_>>());
        Ok((sub, new_to_old))
    }

    /// Writes the graph as an edge list using external labels.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{} {}", self.labels[u], self.labels[v])?;
        }
        Ok(())
    }
}

/// Parses an edge list: one edge per line, `#` comments, whitespace
/// separated labels. Tokens beyond the first two are ignored. Dense ids are
/// assigned in order of first appearance.
pub fn load_edge_list<R: BufRead>(source: R) -> Result<(Graph, LoadReport)> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, NodeId> = HashMap::new();
    let mut edges = Vec::new();
    let mut weighted_lines = 0;

    let mut intern = |tok: &str| -> NodeId {
        if let Some(&id) = index.get(tok) {
            return id;
        }
        let id = labels.len();
        labels.push(tok.to_owned());
        index.insert(tok.to_owned(), id);
        id
    };

    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut toks = body.split_whitespace();
        let (Some(a), Some(b)) = (toks.next(), toks.next()) else {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected two endpoints, found `{body}`"),
            });
        };
        if toks.next().is_some() {
            weighted_lines += 1;
        }
        let u = intern(a);
        let v = intern(b);
        edges.push((u, v));
    }

    if edges.is_empty() {
        return Err(Error::EmptyInput("edge list contains no edges".into()));
    }
    if weighted_lines > 0 {
        log::warn!("ignored extra columns (weights) on {weighted_lines} lines");
    }

    let (graph, mut report) = Graph::with_labels(labels, edges);
    report.weighted_lines = weighted_lines;
    if report.duplicate_edges > 0 || report.self_loops > 0 {
        log::warn!(
            "dropped {} duplicate edges and {} self-loops",
            report.duplicate_edges,
            report.self_loops
        );
    }
    if graph.m() == 0 {
        return Err(Error::EmptyInput("edge list contains only self-loops".into()));
    }
    Ok((graph, report))
}

/// Parses a cover file: one community per line, whitespace-separated node
/// labels resolved through `g`'s label map. Blank lines are skipped.
pub fn load_cover<R: BufRead>(source: R, g: &Graph) -> Result<CommunityCover> {
    let mut communities = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let body = line.trim();
        if body.starts_with('#') {
            continue;
        }
        if body.is_empty() {
            log::warn!("cover line {}: empty community skipped", i + 1);
            continue;
        }
        let members = body
            .split_whitespace()
            .map(|tok| {
                g.id_of(tok).ok_or_else(|| Error::UnknownLabel {
                    label: tok.to_owned(),
                    line: i + 1,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        communities.push(members);
    }
    if communities.is_empty() {
        return Err(Error::EmptyInput("cover file has no communities".into()));
    }
    CommunityCover::new(communities, g.n())
}

/// Writes non-empty communities one per line using `g`'s labels.
pub fn write_cover<W: Write>(cover: &CommunityCover, g: &Graph, mut out: W) -> std::io::Result<()> {
    for community in cover.communities().iter().filter(|c| !c.is_empty()) {
        let line: Vec<&str> = community.iter().map(|&v| g.label(v)).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn parse(text: &str) -> Result<(Graph, LoadReport)> {
        load_edge_list(text.as_bytes())
    }

    #[test]
    fn path_of_three() {
        let (g, report) = parse("1 2\n2 3\n").unwrap();
        assert_eq!((g.n(), g.m()), (3, 2));
        assert_eq!(report, LoadReport::default());
        let mid = g.id_of("2").unwrap();
        let ends: Vec<&str> = g.neighbors(mid).iter().map(|&v| g.label(v)).collect();
        assert_eq!(ends, ["1", "3"]);
    }

    #[test]
    fn dedup_and_self_loops_reported() {
        let (g, report) = parse("1 2\n2 1\n1 1\n").unwrap();
        assert_eq!((g.n(), g.m()), (2, 1));
        assert_eq!(report.duplicate_edges, 1);
        assert_eq!(report.self_loops, 1);
    }

    #[test]
    fn comments_and_weights() {
        let (g, report) = parse("# header\n\na b 0.5\nb c 1.0 extra\n").unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!(report.weighted_lines, 2);
        assert_eq!(g.label(0), "a");
    }

    #[test]
    fn malformed_line_reports_number() {
        match parse("1 2\n3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_graph_rejected() {
        assert!(matches!(parse("# nothing\n"), Err(Error::EmptyInput(_))));
        assert!(matches!(parse("4 4\n"), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let (g, _) = Graph::from_edges(3, [(0, 1)]);
        assert!(g.neighbors(2).is_empty());
        assert!(matches!(g.try_neighbors(3), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn random_adjacency_matches_edge_list() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut raw = Vec::new();
        for u in 0..10 {
            for v in (u + 1)..10 {
                if rng.random_bool(0.4) {
                    raw.push((u, v));
                }
            }
        }
        let (g, _) = Graph::from_edges(10, raw.clone());
        for v in 0..10 {
            let mut expect: Vec<usize> = raw
                .iter()
                .filter_map(|&(a, b)| match (a == v, b == v) {
                    (true, _) => Some(b),
                    (_, true) => Some(a),
                    _ => None,
                })
                .collect();
            expect.sort_unstable();
            assert_eq!(g.neighbors(v), expect.as_slice());
        }
        let degree_sum: usize = (0..10).map(|v| g.degree(v)).sum();
        assert_eq!(degree_sum, 2 * g.m());
    }

    #[test]
    fn induced_subgraph_of_triangle() {
        let (g, _) = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]);
        let (sub, map) = g.induced_subgraph(&[0, 1]).unwrap();
        assert_eq!((sub.n(), sub.m()), (2, 1));
        assert_eq!(map, vec![0, 1]);
        assert!(g.induced_subgraph(&[]).is_err());
    }

    #[test]
    fn induced_subgraph_matches_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 24;
        let mut raw = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_bool(0.3) {
                    raw.push((u, v));
                }
            }
        }
        let (g, _) = Graph::from_edges(n, raw.clone());
        let keep: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        let (sub, map) = g.induced_subgraph(&keep).unwrap();
        let mut expect: Vec<(usize, usize)> = raw
            .into_iter()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b))
            .collect();
        expect.sort_unstable();
        let mut got: Vec<(usize, usize)> = sub.edges().map(|(a, b)| (map[a], map[b])).collect();
        got.sort_unstable();
        assert_eq!(got, expect);
    }

    #[test]
    fn round_trip_through_writer() {
        let (g, _) = parse("x y\ny z\nz x\nz w\n").unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let (h, _) = load_edge_list(buf.as_slice()).unwrap();
        assert_eq!((h.n(), h.m()), (g.n(), g.m()));
        for (u, v) in g.edges() {
            let hu = h.id_of(g.label(u)).unwrap();
            let hv = h.id_of(g.label(v)).unwrap();
            assert!(h.has_edge(hu, hv));
        }
    }

    #[test]
    fn cover_loading() {
        let (g, _) = parse("1 2\n2 3\n3 4\n4 5\n5 6\n").unwrap();
        let cover = load_cover("1 2 3\n4 5 6\n".as_bytes(), &g).unwrap();
        assert_eq!(cover.len(), 2);
        assert!(cover.is_partition(g.n()));

        let cover = load_cover("1 2\n\n2 3\n".as_bytes(), &g).unwrap();
        assert_eq!(cover.len(), 2);
        let two = g.id_of("2").unwrap();
        assert!(cover.communities().iter().all(|c| c.contains(&two)));

        match load_cover("1 2\n9 3\n".as_bytes(), &g) {
            Err(Error::UnknownLabel { label, line }) => {
                assert_eq!(label, "9");
                assert_eq!(line, 2);
            }
            other => panic!("expected unknown label, got {other:?}"),
        }
    }
}
