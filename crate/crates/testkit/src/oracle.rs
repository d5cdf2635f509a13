//! Brute-force reference graph.

use std::collections::{BTreeSet, VecDeque};

use dyncon_core::Vertex;

/// Adjacency sets with BFS connectivity. Exact for any sequential history.
#[derive(Debug, Clone)]
pub struct OracleGraph {
    adj: Vec<BTreeSet<Vertex>>,
    edges: usize,
}

impl OracleGraph {
    pub fn new(n: usize) -> OracleGraph {
        OracleGraph { adj: vec![BTreeSet::new(); n], edges: 0 }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adj[u as usize].contains(&v)
    }

    /// True iff the edge was absent. Self-loops are ignored.
    pub fn add(&mut self, u: Vertex, v: Vertex) -> bool {
        if u == v || !self.adj[u as usize].insert(v) {
            return false;
        }
        self.adj[v as usize].insert(u);
        self.edges += 1;
        true
    }

    /// True iff the edge was present.
    pub fn remove(&mut self, u: Vertex, v: Vertex) -> bool {
        if !self.adj[u as usize].remove(&v) {
            return false;
        }
        self.adj[v as usize].remove(&u);
        self.edges -= 1;
        true
    }

    pub fn connected(&self, u: Vertex, v: Vertex) -> bool {
        if u == v {
            return true;
        }
        let mut seen = vec![false; self.adj.len()];
        let mut queue = VecDeque::from([u]);
        seen[u as usize] = true;
        while let Some(x) = queue.pop_front() {
            for &y in &self.adj[x as usize] {
                if y == v {
                    return true;
                }
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    queue.push_back(y);
                }
            }
        }
        false
    }

    /// Component label per vertex: the smallest vertex of its component.
    pub fn components(&self) -> Vec<Vertex> {
        let n = self.adj.len();
        let mut label = vec![Vertex::MAX; n];
        for s in 0..n {
            if label[s] != Vertex::MAX {
                continue;
            }
            label[s] = s as Vertex;
            let mut queue = VecDeque::from([s as Vertex]);
            while let Some(x) = queue.pop_front() {
                for &y in &self.adj[x as usize] {
                    if label[y as usize] == Vertex::MAX {
                        label[y as usize] = s as Vertex;
                        queue.push_back(y);
                    }
                }
            }
        }
        label
    }

    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::with_capacity(self.edges);
        for (u, set) in self.adj.iter().enumerate() {
            for &v in set.range(u as Vertex + 1..) {
                out.push((u as Vertex, v));
            }
        }
        out
    }
}
