//! Finite graphs, breadth-first search and combinatorial horoballs.

use std::collections::VecDeque;

use crate::error::{LabError, Result};

/// Marker for unreachable vertices in distance tables.
pub const UNREACHABLE: u32 = u32::MAX;

/// Undirected graph with neighbors produced on demand.
pub trait Graph: Sync {
    fn vertex_count(&self) -> usize;
    /// Appends the neighbors of `v` to `out` in increasing order.
    fn neighbors(&self, v: usize, out: &mut Vec<usize>);
}

/// Distances and BFS parents from `source`. Neighbors are scanned in
/// increasing order, so the parent tree is the lexicographically first
/// shortest-path tree.
pub fn bfs<G: Graph + ?Sized>(g: &G, source: usize) -> (Vec<u32>, Vec<u32>) {
    let n = g.vertex_count();
    let mut dist = vec![UNREACHABLE; n];
    let mut parent = vec![UNREACHABLE; n];
    let mut queue = VecDeque::new();
    let mut nb = Vec::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        nb.clear();
        g.neighbors(v, &mut nb);
        for &w in &nb {
            if dist[w] == UNREACHABLE {
                dist[w] = dist[v] + 1;
                parent[w] = v as u32;
                queue.push_back(w);
            }
        }
    }
    (dist, parent)
}

/// Shortest-path length between two vertices.
pub fn graph_distance<G: Graph + ?Sized>(g: &G, u: usize, v: usize) -> Result<u32> {
    let n = g.vertex_count();
    if u >= n || v >= n {
        return Err(LabError::Config(format!("vertex out of range (graph has {n})")));
    }
    let (dist, _) = bfs(g, u);
    match dist[v] {
        UNREACHABLE => Err(LabError::Disconnected(u, v)),
        d => Ok(d),
    }
}

/// Vertices from `source` to `target` along the BFS parent tree.
pub fn tree_path(parent: &[u32], source: usize, target: usize) -> Option<Vec<usize>> {
    let mut path = vec![target];
    let mut cur = target;
    while cur != source {
        let p = parent[cur];
        if p == UNREACHABLE {
            return None;
        }
        cur = p as usize;
        path.push(cur);
    }
    path.reverse();
    Some(path)
}

/// Explicit graph in compressed adjacency form.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl AdjacencyGraph {
    /// Builds from an undirected edge list; loops and duplicates dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(LabError::Config(format!("edge ({a}, {b}) out of range")));
            }
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        for mut l in adj {
            l.sort_unstable();
            l.dedup();
            targets.extend(l);
            offsets.push(targets.len());
        }
        Ok(Self { offsets, targets })
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("valid path")
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges).expect("valid cycle")
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn adjacent(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }
}

impl Graph for AdjacencyGraph {
    fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn neighbors(&self, v: usize, out: &mut Vec<usize>) {
        out.extend_from_slice(self.adjacent(v));
    }
}

/// Combinatorial horoball over a finite connected graph `Y`: vertices
/// `(v, n)` for levels `1..=max_level`, vertical edges `(v,n)–(v,n+1)` and
/// horizontal edges `(v,n)–(w,n)` whenever `0 < d_Y(v,w) ≤ 2^{n−1}`.
/// Horizontal edges are not stored; they are read off `d_Y`.
#[derive(Clone, Debug)]
pub struct HoroballGraph {
    base: usize,
    max_level: usize,
    /// Row-major `d_Y`.
    base_distance: Vec<u32>,
}

pub fn combinatorial_horoball(y: &AdjacencyGraph, max_level: usize) -> Result<HoroballGraph> {
    let n = y.vertex_count();
    if n == 0 || max_level == 0 {
        return Err(LabError::Config("horoball needs a nonempty base and max_level ≥ 1".into()));
    }
    let mut base_distance = Vec::with_capacity(n * n);
    for v in 0..n {
        let (d, _) = bfs(y, v);
        if let Some(w) = d.iter().position(|&x| x == UNREACHABLE) {
            return Err(LabError::Disconnected(v, w));
        }
        base_distance.extend(d);
    }
    Ok(HoroballGraph {
        base: n,
        max_level,
        base_distance,
    })
}

/// Largest `d_Y` joined by a horizontal edge at level `n`.
pub fn level_reach(level: usize) -> u64 {
    1u64 << (level - 1).min(62)
}

impl HoroballGraph {
    pub fn base_size(&self) -> usize {
        self.base
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// Vertex id of `(v, level)`.
    pub fn vertex(&self, v: usize, level: usize) -> usize {
        (level - 1) * self.base + v
    }

    /// `(v, level)` of a vertex id.
    pub fn coordinates(&self, id: usize) -> (usize, usize) {
        (id % self.base, id / self.base + 1)
    }

    pub fn base_distance(&self, v: usize, w: usize) -> u32 {
        self.base_distance[v * self.base + w]
    }

    pub fn edge_count(&self) -> usize {
        let vertical = self.base * (self.max_level - 1);
        let mut horizontal = 0;
        for level in 1..=self.max_level {
            let reach = level_reach(level);
            horizontal += self.base_distance.iter().filter(|&&d| d > 0 && d as u64 <= reach).count() / 2;
        }
        vertical + horizontal
    }
}

impl Graph for HoroballGraph {
    fn vertex_count(&self) -> usize {
        self.base * self.max_level
    }

    fn neighbors(&self, id: usize, out: &mut Vec<usize>) {
        let (v, level) = self.coordinates(id);
        if level > 1 {
            out.push(self.vertex(v, level - 1));
        }
        let reach = level_reach(level);
        let row = &self.base_distance[v * self.base..(v + 1) * self.base];
        for (w, &d) in row.iter().enumerate() {
            if d > 0 && d as u64 <= reach {
                out.push(self.vertex(w, level));
            }
        }
        if level < self.max_level {
            out.push(self.vertex(v, level + 1));
        }
    }
}
