//! Simple undirected graphs: generation, loading, and distance queries.
//!
//! Graphs are immutable after construction and stored as per-node sorted
//! adjacency lists. The random r-regular generator samples the pairing
//! (configuration) model with a full restart on any defect, so accepted
//! samples are uniform over simple connected r-regular graphs.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sentinel distance for unreachable nodes.
pub const UNREACHABLE: u32 = u32::MAX;

/// An immutable simple undirected graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    r_hint: Option<usize>,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Builds a graph from an edge list.
    ///
    /// Rejects self-loops, parallel edges, and out-of-range endpoints. If
    /// `r_hint` is set, every node must have degree exactly `r_hint`.
    /// Connectivity is not required here; loaders and generators enforce it.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], r_hint: Option<usize>) -> Result<Self> {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidEdge { u, v, reason: "self-loop" });
            }
            if u >= n || v >= n {
                return Err(Error::InvalidEdge { u, v, reason: "endpoint out of range" });
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        for (u, list) in adj.iter().enumerate() {
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidEdge {
                    u,
                    v: w[0] as usize,
                    reason: "parallel edge",
                });
            }
        }
        if let Some(r) = r_hint {
            for (u, list) in adj.iter().enumerate() {
                if list.len() != r {
                    return Err(Error::InvalidEdge {
                        u,
                        v: list.len(),
                        reason: "degree does not match declared regularity",
                    });
                }
            }
        }
        Ok(Self { n, r_hint, adj })
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Self::from_edges(n, &edges, None).expect("path edges are valid")
    }

    /// Cycle graph on `n >= 3` nodes.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 nodes");
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges, Some(2)).expect("cycle edges are valid")
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Self::from_edges(n, &edges, if n >= 1 { Some(n - 1) } else { None })
            .expect("complete-graph edges are valid")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Declared regular degree, if the graph was built as r-regular.
    pub fn r_hint(&self) -> Option<usize> {
        self.r_hint
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&(v as u32)).is_ok()
    }

    /// Edges as `(u, v)` pairs with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list {
                let v = v as usize;
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let d = bfs_distances(self, 0).expect("source 0 is in range");
        d.dist.iter().all(|&x| x != UNREACHABLE)
    }

    /// Serializes to the edge-list text format.
    ///
    /// First line `n r` (`r = 0` if no regular degree is declared), then one
    /// `u v` line per edge with `u < v`, sorted lexicographically, LF endings.
    pub fn to_edge_list_string(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{} {}\n", self.n, self.r_hint.unwrap_or(0)));
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    /// Parses the edge-list text format, validating simplicity, the declared
    /// degree (when nonzero), and connectivity.
    pub fn from_edge_list_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::EdgeListFormat { line: 1, msg: "empty input".into() })?;
        let mut it = header.split_ascii_whitespace();
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::EdgeListFormat { line: 1, msg: "expected `n r` header".into() })?;
        let r: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::EdgeListFormat { line: 1, msg: "expected `n r` header".into() })?;
        if it.next().is_some() {
            return Err(Error::EdgeListFormat { line: 1, msg: "trailing tokens in header".into() });
        }
        let mut edges = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_ascii_whitespace();
            let u: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| {
                Error::EdgeListFormat { line: line_no, msg: "expected `u v` pair".into() }
            })?;
            let v: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| {
                Error::EdgeListFormat { line: line_no, msg: "expected `u v` pair".into() }
            })?;
            if it.next().is_some() {
                return Err(Error::EdgeListFormat {
                    line: line_no,
                    msg: "trailing tokens in edge line".into(),
                });
            }
            if u >= v {
                return Err(Error::EdgeListFormat {
                    line: line_no,
                    msg: format!("edges must satisfy u < v, got {u} {v}"),
                });
            }
            edges.push((u, v));
        }
        let g = Self::from_edges(n, &edges, if r == 0 { None } else { Some(r) })?;
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }
}

/// Hop distances from a single source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    pub source: usize,
    pub dist: Vec<u32>,
}

/// Exact BFS hop distances from `source` to every node.
pub fn bfs_distances(g: &Graph, source: usize) -> Result<DistanceField> {
    if source >= g.n {
        return Err(Error::NodeOutOfRange { node: source, n: g.n });
    }
    let mut dist = vec![UNREACHABLE; g.n];
    dist[source] = 0;
    let mut queue = VecDeque::with_capacity(g.n);
    queue.push_back(source as u32);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for &v in &g.adj[u as usize] {
            if dist[v as usize] == UNREACHABLE {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
        }
    }
    Ok(DistanceField { source, dist })
}

/// Maximum shortest-path distance over all pairs, by n BFS runs.
pub fn diameter(g: &Graph) -> Result<usize> {
    let mut best = 0u32;
    for v in 0..g.n {
        let d = bfs_distances(g, v)?;
        for &x in &d.dist {
            if x == UNREACHABLE {
                return Err(Error::Disconnected);
            }
            best = best.max(x);
        }
    }
    Ok(best as usize)
}

/// True iff the subgraph induced on the radius-`radius` ball around `v`
/// contains no cycle. The ball is connected by construction, so this reduces
/// to checking that its induced edge count equals its node count minus one.
pub fn ball_is_tree(g: &Graph, v: usize, radius: usize) -> Result<bool> {
    let d = bfs_distances(g, v)?;
    let mut in_ball = vec![false; g.n];
    let mut nodes = 0usize;
    for (u, &du) in d.dist.iter().enumerate() {
        if du != UNREACHABLE && du as usize <= radius {
            in_ball[u] = true;
            nodes += 1;
        }
    }
    let mut edges = 0usize;
    for u in 0..g.n {
        if !in_ball[u] {
            continue;
        }
        for &w in &g.adj[u] {
            let w = w as usize;
            if u < w && in_ball[w] {
                edges += 1;
            }
        }
    }
    Ok(edges == nodes - 1)
}

/// All-pairs hop distances, stored flat as `n * n` entries of `u16`.
///
/// Built once per graph by experiment runners so that per-trial distance
/// lookups are O(1). Desk-scale graphs have diameters far below `u16::MAX`.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u16>,
}

impl DistanceMatrix {
    pub fn build(g: &Graph) -> Result<Self> {
        let n = g.node_count();
        let mut d = vec![u16::MAX; n * n];
        for s in 0..n {
            let f = bfs_distances(g, s)?;
            for (v, &x) in f.dist.iter().enumerate() {
                if x == UNREACHABLE {
                    return Err(Error::Disconnected);
                }
                d[s * n + v] = x as u16;
            }
        }
        Ok(Self { n, d })
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.d[u * self.n + v] as u32
    }

    pub fn max(&self) -> u32 {
        self.d.iter().copied().max().unwrap_or(0) as u32
    }
}

/// Controls for the pairing-model generator.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorOptions {
    /// Maximum number of full restarts before giving up.
    pub max_restarts: usize,
}

impl GeneratorOptions {
    /// Default cap of `10 * n` restarts.
    pub fn for_size(n: usize) -> Self {
        Self { max_restarts: 10 * n }
    }
}

/// Samples a simple connected r-regular graph on `n` labeled nodes via the
/// pairing (configuration) model, restarting from scratch whenever the
/// pairing produces a self-loop, a parallel edge, or a disconnected graph.
///
/// Identical `(n, r, seed)` yield identical graphs.
pub fn generate_random_regular(n: usize, r: usize, seed: u64) -> Result<Graph> {
    generate_random_regular_with(n, r, seed, GeneratorOptions::for_size(n))
}

/// [`generate_random_regular`] with an explicit restart cap.
pub fn generate_random_regular_with(
    n: usize,
    r: usize,
    seed: u64,
    opts: GeneratorOptions,
) -> Result<Graph> {
    if n == 0 || r < 3 || r >= n {
        return Err(Error::InvalidDegree { n, r });
    }
    if !(n * r).is_multiple_of(2) {
        return Err(Error::OddPairingSum { n, r });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat_n(v, r)).collect();
    for _ in 0..=opts.max_restarts {
        points.shuffle(&mut rng);
        if let Some(g) = pair_points(n, r, &points) {
            if g.is_connected() {
                return Ok(g);
            }
        }
    }
    Err(Error::GenerationFailed { restarts: opts.max_restarts })
}

/// Pairs consecutive half-edges; `None` on a self-loop or parallel edge.
fn pair_points(n: usize, r: usize, points: &[u32]) -> Option<Graph> {
    let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(r); n];
    for pair in points.chunks_exact(2) {
        let (u, v) = (pair[0], pair[1]);
        if u == v || adj[u as usize].contains(&v) {
            return None;
        }
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    Some(Graph { n, r_hint: Some(r), adj })
}
