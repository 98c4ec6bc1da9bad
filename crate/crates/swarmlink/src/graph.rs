//! Undirected hop-distance graphs with cached all-pairs state.
//!
//! [`Topology`] keeps, besides the edge set, the hop distance matrix, the
//! count of shortest paths per pair, and per-node eccentricities. The caches
//! make the decision procedure cheap: criticality of an edge for a pair is a
//! constant-time test, and [`Topology::decremental_update`] refreshes the
//! caches after edge deletions/additions by re-running single-source passes
//! only from vertices whose rows can actually change.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Zero-based node index.
pub type NodeId = usize;

/// Sentinel hop distance for unreachable pairs.
pub const UNREACHABLE: u32 = u32::MAX;

/// Spectral connectivity threshold: the second-smallest Laplacian eigenvalue
/// of a connected graph on up to a few hundred nodes is many orders of
/// magnitude above this, while numerical noise on a disconnected graph stays
/// well below it.
pub const LAMBDA2_TOL: f64 = 1e-8;

/// Cap on node count accepted from untrusted edge-list text.
pub const MAX_PARSED_NODES: usize = 1024;

/// Undirected edge with normalized endpoint order (`a < b`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Edge {
    a: NodeId,
    b: NodeId,
}

impl Edge {
    /// Builds an edge; endpoint order does not matter. Panics on a self-loop,
    /// which is a programming error everywhere this type is used.
    pub fn new(i: NodeId, j: NodeId) -> Self {
        assert_ne!(i, j, "self-loops are not representable");
        Edge {
            a: i.min(j),
            b: i.max(j),
        }
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.a, self.b)
    }

    /// Lower endpoint.
    pub fn a(&self) -> NodeId {
        self.a
    }

    /// Higher endpoint.
    pub fn b(&self) -> NodeId {
        self.b
    }

    pub fn touches(&self, v: NodeId) -> bool {
        self.a == v || self.b == v
    }

    /// The endpoint that is not `v`. Panics if `v` is not an endpoint.
    pub fn other(&self, v: NodeId) -> NodeId {
        if v == self.a {
            self.b
        } else {
            assert_eq!(v, self.b);
            self.a
        }
    }
}

/// Undirected graph over nodes `0..n` with cached all-pairs shortest-path
/// state.
///
/// Invariants kept by every constructor and update:
/// - `dist` is symmetric with zero diagonal, `UNREACHABLE` off-diagonal for
///   separated pairs;
/// - `sigma[u][v]` counts shortest `u`-`v` paths (saturating), `sigma[u][u]
///   = 1`, zero for unreachable pairs;
/// - `ecc[u]` is the farthest hop distance from `u`, `UNREACHABLE` when the
///   graph is disconnected.
#[derive(Clone, Debug)]
pub struct Topology {
    n: usize,
    edges: BTreeSet<Edge>,
    adj: Vec<Vec<NodeId>>,
    dist: Vec<Vec<u32>>,
    sigma: Vec<Vec<u64>>,
    ecc: Vec<u32>,
}

impl Topology {
    /// Builds a topology and computes all caches from scratch.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for e in edges {
            if e.b >= n {
                return Err(Error::NodeOutOfRange(e.b, n));
            }
            set.insert(e);
        }
        let mut topo = Topology {
            n,
            edges: set,
            adj: Vec::new(),
            dist: Vec::new(),
            sigma: Vec::new(),
            ecc: Vec::new(),
        };
        topo.rebuild_adjacency();
        topo.rebuild_caches();
        Ok(topo)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.edges.contains(&e)
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    /// Hop distance between two nodes (`UNREACHABLE` when separated).
    pub fn dist(&self, u: NodeId, v: NodeId) -> u32 {
        self.dist[u][v]
    }

    /// Number of shortest paths between two nodes (saturating count).
    pub fn sigma(&self, u: NodeId, v: NodeId) -> u64 {
        self.sigma[u][v]
    }

    /// Hop distances from `v` to every node.
    pub fn dist_row(&self, v: NodeId) -> &[u32] {
        &self.dist[v]
    }

    pub fn dist_matrix(&self) -> &[Vec<u32>] {
        &self.dist
    }

    pub fn sigma_matrix(&self) -> &[Vec<u64>] {
        &self.sigma
    }

    /// Graph Laplacian `L = D - A` as a dense matrix.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            let (a, b) = e.endpoints();
            l[(a, b)] = -1.0;
            l[(b, a)] = -1.0;
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
        }
        l
    }

    /// Second-smallest Laplacian eigenvalue (algebraic connectivity).
    /// Graphs with fewer than two nodes report `+inf`.
    pub fn lambda2(&self) -> f64 {
        lambda2_of_edges(self.n, self.edges.iter().copied())
    }

    /// Spectral connectivity test; agrees with breadth-first reachability.
    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.lambda2() > LAMBDA2_TOL
    }

    /// Breadth-first reachability, used to cross-check the spectral test.
    pub fn is_connected_bfs(&self) -> bool {
        self.n <= 1 || self.ecc[0] != UNREACHABLE
    }

    /// Farthest hop distance from `v` (`UNREACHABLE` when disconnected).
    pub fn eccentricity(&self, v: NodeId) -> u32 {
        self.ecc[v]
    }

    /// Largest eccentricity. Errors when the graph is disconnected.
    pub fn diameter(&self) -> Result<u32> {
        self.connected_ecc_stat(|a, b| a.max(b))
    }

    /// Smallest eccentricity. Errors when the graph is disconnected.
    pub fn radius(&self) -> Result<u32> {
        self.connected_ecc_stat(|a, b| a.min(b))
    }

    /// Node of minimum eccentricity; ties resolve to the lowest id.
    pub fn central_node(&self) -> Result<NodeId> {
        if self.n == 0 {
            return Err(Error::Disconnected);
        }
        let mut best = 0;
        for v in 1..self.n {
            if self.ecc[v] < self.ecc[best] {
                best = v;
            }
        }
        if self.ecc[best] == UNREACHABLE {
            return Err(Error::Disconnected);
        }
        Ok(best)
    }

    fn connected_ecc_stat(&self, fold: impl Fn(u32, u32) -> u32) -> Result<u32> {
        if self.n == 0 {
            return Err(Error::Disconnected);
        }
        let mut acc = self.ecc[0];
        for &e in &self.ecc[1..] {
            acc = fold(acc, e);
        }
        if self.ecc.iter().any(|&e| e == UNREACHABLE) {
            return Err(Error::Disconnected);
        }
        Ok(acc)
    }

    /// True when every shortest `u`-`v` path runs through `e`.
    ///
    /// Counted from the cached path counts: the shortest paths through
    /// `e = (a, b)` from `u` to `v` number `sigma(u,a) * sigma(b,v)` when the
    /// hop distances line up (plus the symmetric orientation), and the edge
    /// is critical exactly when that total equals `sigma(u,v)`.
    pub fn edge_is_critical(&self, e: Edge, u: NodeId, v: NodeId) -> Result<bool> {
        if !self.edges.contains(&e) {
            let (a, b) = e.endpoints();
            return Err(Error::EdgeNotFound(a, b));
        }
        if u == v || self.dist[u][v] == UNREACHABLE {
            return Ok(false);
        }
        let through = self.paths_through(e, u, v);
        Ok(through > 0 && through == self.sigma[u][v])
    }

    /// Number of shortest `u`-`v` paths that use `e` (saturating).
    fn paths_through(&self, e: Edge, u: NodeId, v: NodeId) -> u64 {
        let (a, b) = e.endpoints();
        let duv = self.dist[u][v];
        let mut total: u64 = 0;
        for (x, y) in [(a, b), (b, a)] {
            let dux = self.dist[u][x];
            let dyv = self.dist[y][v];
            if dux != UNREACHABLE && dyv != UNREACHABLE && dux + 1 + dyv == duv {
                total = total.saturating_add(self.sigma[u][x].saturating_mul(self.sigma[y][v]));
            }
        }
        total
    }

    /// Applies edge deletions then additions, refreshing the caches so that
    /// the result is identical to a from-scratch rebuild.
    ///
    /// Each mutation re-runs single-source passes only from vertices whose
    /// distance or path-count rows can change (detected per pair with the
    /// cached counts); when more than half of all vertices are affected the
    /// update falls back to the full rebuild. The result may be
    /// disconnected, in which case the caches carry `UNREACHABLE`.
    pub fn decremental_update(&self, deleted: &[Edge], added: &[Edge]) -> Result<Topology> {
        for e in deleted {
            if !self.edges.contains(e) {
                let (a, b) = e.endpoints();
                return Err(Error::EdgeNotFound(a, b));
            }
        }
        for e in added {
            if e.b >= self.n {
                return Err(Error::NodeOutOfRange(e.b, self.n));
            }
            if self.edges.contains(e) || deleted.contains(e) {
                let (a, b) = e.endpoints();
                return Err(Error::EdgeExists(a, b));
            }
        }
        let mut topo = self.clone();
        for &e in deleted {
            topo.remove_edge_incremental(e);
        }
        for &e in added {
            topo.insert_edge_incremental(e);
        }
        Ok(topo)
    }

    fn remove_edge_incremental(&mut self, e: Edge) {
        let (a, b) = e.endpoints();
        // A row u changes iff some shortest u-v path currently uses e.
        let touched: Vec<NodeId> = (0..self.n)
            .filter(|&u| (0..self.n).any(|v| u != v && self.pair_uses_edge(u, v, a, b)))
            .collect();
        self.edges.remove(&e);
        self.rebuild_adjacency();
        self.refresh_rows(&touched);
    }

    fn insert_edge_incremental(&mut self, e: Edge) {
        let (a, b) = e.endpoints();
        // A row u changes iff the new edge offers some pair a path no longer
        // than its current shortest (ties add new shortest paths).
        let touched: Vec<NodeId> = (0..self.n)
            .filter(|&u| (0..self.n).any(|v| u != v && self.pair_gains_path(u, v, a, b)))
            .collect();
        self.edges.insert(e);
        self.rebuild_adjacency();
        self.refresh_rows(&touched);
    }

    fn pair_uses_edge(&self, u: NodeId, v: NodeId, a: NodeId, b: NodeId) -> bool {
        let duv = self.dist[u][v];
        if duv == UNREACHABLE {
            return false;
        }
        for (x, y) in [(a, b), (b, a)] {
            let dux = self.dist[u][x];
            let dyv = self.dist[y][v];
            if dux != UNREACHABLE && dyv != UNREACHABLE && dux + 1 + dyv == duv {
                return true;
            }
        }
        false
    }

    fn pair_gains_path(&self, u: NodeId, v: NodeId, a: NodeId, b: NodeId) -> bool {
        let duv = self.dist[u][v];
        for (x, y) in [(a, b), (b, a)] {
            let dux = self.dist[u][x];
            let dyv = self.dist[y][v];
            if dux == UNREACHABLE || dyv == UNREACHABLE {
                continue;
            }
            let candidate = dux as u64 + 1 + dyv as u64;
            if duv == UNREACHABLE || candidate <= duv as u64 {
                return true;
            }
        }
        false
    }

    fn refresh_rows(&mut self, touched: &[NodeId]) {
        if touched.len() * 2 > self.n {
            self.rebuild_caches();
            return;
        }
        for &u in touched {
            bfs_counts(&self.adj, u, &mut self.dist[u], &mut self.sigma[u]);
            self.ecc[u] = row_eccentricity(&self.dist[u]);
            // Mirror the row so the matrices stay symmetric; unaffected
            // opposite rows already hold these exact values.
            for v in 0..self.n {
                self.dist[v][u] = self.dist[u][v];
                self.sigma[v][u] = self.sigma[u][v];
            }
        }
    }

    fn rebuild_adjacency(&mut self) {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            let (a, b) = e.endpoints();
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        self.adj = adj;
    }

    fn rebuild_caches(&mut self) {
        self.dist = vec![vec![UNREACHABLE; self.n]; self.n];
        self.sigma = vec![vec![0; self.n]; self.n];
        self.ecc = vec![UNREACHABLE; self.n];
        for u in 0..self.n {
            bfs_counts(&self.adj, u, &mut self.dist[u], &mut self.sigma[u]);
            self.ecc[u] = row_eccentricity(&self.dist[u]);
        }
    }

    /// Parses edge-list text: one `i j` pair per line, 1-indexed ids,
    /// whitespace separated. Blank lines and `#` comments are skipped; the
    /// node count is the largest id seen. Duplicate pairs collapse.
    pub fn from_edge_list_str(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_id = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (i, j) = match (fields.next(), fields.next(), fields.next()) {
                (Some(i), Some(j), None) => (i, j),
                _ => {
                    return Err(Error::EdgeListParse(format!(
                        "line {}: expected exactly two ids",
                        lineno + 1
                    )))
                }
            };
            let parse = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|_| {
                    Error::EdgeListParse(format!("line {}: bad id {:?}", lineno + 1, s))
                })?;
                if v == 0 {
                    return Err(Error::EdgeListParse(format!(
                        "line {}: ids are 1-indexed",
                        lineno + 1
                    )));
                }
                if v > MAX_PARSED_NODES {
                    return Err(Error::EdgeListParse(format!(
                        "line {}: id {} exceeds the {} node cap",
                        lineno + 1,
                        v,
                        MAX_PARSED_NODES
                    )));
                }
                Ok(v)
            };
            let i = parse(i)?;
            let j = parse(j)?;
            if i == j {
                return Err(Error::EdgeListParse(format!(
                    "line {}: self-loop on {}",
                    lineno + 1,
                    i
                )));
            }
            max_id = max_id.max(i).max(j);
            edges.push(Edge::new(i - 1, j - 1));
        }
        Topology::new(max_id, edges)
    }

    /// Inverse of [`Topology::from_edge_list_str`]: sorted `i j` lines,
    /// 1-indexed.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let (a, b) = e.endpoints();
            let _ = writeln!(out, "{} {}", a + 1, b + 1);
        }
        out
    }
}

/// Single-source hop distances and shortest-path counts.
fn bfs_counts(adj: &[Vec<NodeId>], source: NodeId, dist: &mut [u32], sigma: &mut [u64]) {
    dist.fill(UNREACHABLE);
    sigma.fill(0);
    dist[source] = 0;
    sigma[source] = 1;
    let mut queue = std::collections::VecDeque::with_capacity(adj.len());
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        for &w in &adj[u] {
            if dist[w] == UNREACHABLE {
                dist[w] = du + 1;
                queue.push_back(w);
            }
            if dist[w] == du + 1 {
                sigma[w] = sigma[w].saturating_add(sigma[u]);
            }
        }
    }
}

fn row_eccentricity(dist: &[u32]) -> u32 {
    dist.iter().copied().max().unwrap_or(0)
}

/// Algebraic connectivity of an arbitrary edge set over nodes `0..n`.
pub fn lambda2_of_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    let mut l = DMatrix::zeros(n, n);
    for e in edges {
        let (a, b) = e.endpoints();
        l[(a, b)] = -1.0;
        l[(b, a)] = -1.0;
        l[(a, a)] += 1.0;
        l[(b, b)] += 1.0;
    }
    let eig = l.symmetric_eigen();
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[1]
}

/// Hop diameter of an arbitrary edge set; `None` when disconnected.
/// Plain breadth-first sweeps, no path counting.
pub fn diameter_of_edges(n: usize, edges: &BTreeSet<Edge>) -> Option<u32> {
    if n == 0 {
        return None;
    }
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        let (a, b) = e.endpoints();
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut dist = vec![UNREACHABLE; n];
    let mut diameter = 0;
    let mut queue = std::collections::VecDeque::new();
    for s in 0..n {
        dist.fill(UNREACHABLE);
        dist[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if dist[w] == UNREACHABLE {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        let far = dist.iter().copied().max().unwrap();
        if far == UNREACHABLE {
            return None;
        }
        diameter = diameter.max(far);
    }
    Some(diameter)
}

/// All pairs within `radius` of each other: the physically feasible link
/// set for a set of positions.
pub fn range_edges(positions: &[crate::Point], radius: f64) -> Vec<Edge> {
    let mut edges = Vec::new();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            if (positions[i] - positions[j]).norm() <= radius {
                edges.push(Edge::new(i, j));
            }
        }
    }
    edges
}
