//! Small undirected graphs and shortest paths.
//!
//! Edge weights fed into the shortest-path engine are floored onto the dyadic
//! grid 2^-32 first. Sums of such weights below 2^20 are exact in f64, so
//! path lengths carry no rounding error and any two correct shortest-path
//! algorithms produce bit-identical distance matrices.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::par;

const DYADIC_SCALE: f64 = 4294967296.0; // 2^32

/// Floor onto the 2^-32 grid. Never increases the weight.
pub fn quantize_down(w: f64) -> f64 {
    debug_assert!(w.is_finite() && w >= 0.0);
    (w * DYADIC_SCALE).floor() / DYADIC_SCALE
}

/// Plain undirected graph (no self-loops, no parallel edges).
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut g = Graph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: u32, v: u32) -> Result<()> {
        if u as usize >= self.n || v as usize >= self.n {
            return Err(Error::invalid(format!(
                "edge ({u},{v}) out of range for {} vertices",
                self.n
            )));
        }
        if u == v {
            return Err(Error::invalid(format!("self-loop at vertex {u}")));
        }
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        if self.adj[a as usize].contains(&b) {
            return Ok(()); // already present
        }
        self.edges.push((a, b));
        self.adj[a as usize].push(b);
        self.adj[b as usize].push(a);
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::new();
        seen[0] = true;
        queue.push_back(0u32);
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }
}

/// Undirected graph with nonnegative edge weights.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    n: usize,
    adj: Vec<Vec<(u32, f64)>>,
    edge_count: usize,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            n,
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Adds an undirected edge; keeps the lighter weight on duplicates.
    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) {
        debug_assert!(u < self.n && v < self.n && u != v);
        debug_assert!(w.is_finite() && w >= 0.0);
        for &mut (ref x, ref mut old) in self.adj[u].iter_mut() {
            if *x as usize == v {
                if w < *old {
                    *old = w;
                    for &mut (y, ref mut back) in self.adj[v].iter_mut() {
                        if y as usize == u {
                            *back = w;
                        }
                    }
                }
                return;
            }
        }
        self.adj[u].push((v as u32, w));
        self.adj[v].push((u as u32, w));
        self.edge_count += 1;
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[(u32, f64)] {
        &self.adj[v]
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::new();
        seen[0] = true;
        queue.push_back(0usize);
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v as usize);
                }
            }
        }
        count == self.n
    }

    /// Single-source shortest paths. Unreachable vertices get `f64::INFINITY`.
    pub fn dijkstra(&self, src: usize) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Entry(f64, u32);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
            }
        }

        let mut dist = vec![f64::INFINITY; self.n];
        let mut done = vec![false; self.n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Reverse(Entry(0.0, src as u32)));
        while let Some(Reverse(Entry(d, u))) = heap.pop() {
            let u = u as usize;
            if done[u] {
                continue;
            }
            done[u] = true;
            for &(v, w) in &self.adj[u] {
                let v = v as usize;
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse(Entry(nd, v as u32)));
                }
            }
        }
        dist
    }
}

/// All-pairs shortest paths by repeated Dijkstra, one source per task.
pub fn apsp(g: &WeightedGraph) -> Vec<Vec<f64>> {
    par::map_indexed(g.vertex_count(), |src| g.dijkstra(src))
}

/// Sequential twin of [`apsp`] for benchmarking the fallback path.
pub fn apsp_seq(g: &WeightedGraph) -> Vec<Vec<f64>> {
    par::map_indexed_seq(g.vertex_count(), |src| g.dijkstra(src))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_is_monotone_floor() {
        let w = 1.23456789;
        let q = quantize_down(w);
        assert!(q <= w);
        assert!(w - q < 1.0 / 4294967296.0 + 1e-15);
        assert_eq!(quantize_down(1.0), 1.0);
        assert_eq!(quantize_down(0.0), 0.0);
    }

    #[test]
    fn dijkstra_on_a_square_with_diagonal() {
        // 0-1-2-3 cycle with heavy diagonal 0-2.
        let mut g = WeightedGraph::new(4);
        g.add_edge(0, 1, 1.0);
        g.add_edge(1, 2, 1.0);
        g.add_edge(2, 3, 1.0);
        g.add_edge(3, 0, 1.0);
        g.add_edge(0, 2, 5.0);
        let d = g.dijkstra(0);
        assert_eq!(d, vec![0.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn duplicate_edge_keeps_lighter_weight() {
        let mut g = WeightedGraph::new(2);
        g.add_edge(0, 1, 3.0);
        g.add_edge(0, 1, 2.0);
        g.add_edge(1, 0, 4.0);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.dijkstra(0)[1], 2.0);
    }

    #[test]
    fn apsp_matches_sequential() {
        let mut g = WeightedGraph::new(5);
        for i in 0..4 {
            g.add_edge(i, i + 1, (i + 1) as f64 * 0.25);
        }
        g.add_edge(4, 0, 0.125);
        assert_eq!(apsp(&g), apsp_seq(&g));
    }

    #[test]
    fn connectivity() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        assert!(!g.is_connected());
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(g.is_connected());
    }
}
