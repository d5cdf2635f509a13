//! Random operation streams over a fixed pool of candidate edges.

use std::collections::BTreeSet;

use dyncon_core::{AddOutcome, DynamicConnectivity, RemoveOutcome, Vertex};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add(Vertex, Vertex),
    Remove(Vertex, Vertex),
    Connected(Vertex, Vertex),
}

/// What an engine call returned, reduced to what the oracle can predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    /// Whether the edge set changed.
    Changed(bool),
    Connected(bool),
}

impl Op {
    pub fn apply(self, d: &DynamicConnectivity) -> Answer {
        match self {
            Op::Add(u, v) => Answer::Changed(d.add_edge(u, v).expect("valid edge") != AddOutcome::Present),
            Op::Remove(u, v) => {
                Answer::Changed(d.remove_edge(u, v).expect("valid edge") != RemoveOutcome::Absent)
            }
            Op::Connected(u, v) => Answer::Connected(d.connected(u, v).expect("valid vertices")),
        }
    }

    pub fn endpoints(self) -> (Vertex, Vertex) {
        match self {
            Op::Add(u, v) | Op::Remove(u, v) | Op::Connected(u, v) => (u, v),
        }
    }
}

/// `count` distinct random pairs (all pairs when fewer exist).
pub fn edge_pool(n: usize, count: usize, seed: u64) -> Vec<(Vertex, Vertex)> {
    let total = n * n.saturating_sub(1) / 2;
    if count >= total {
        let mut all = Vec::with_capacity(total);
        for u in 0..n as Vertex {
            for v in u + 1..n as Vertex {
                all.push((u, v));
            }
        }
        return all;
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut set = BTreeSet::new();
    while set.len() < count {
        let (a, b) = (rng.random_range(0..n as Vertex), rng.random_range(0..n as Vertex));
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    set.into_iter().collect()
}

/// Mixed stream: reads pick random vertex pairs, updates pick pool edges.
/// Additions and removals are equally likely.
pub struct OpGen {
    n: Vertex,
    pool: Vec<(Vertex, Vertex)>,
    read_ratio: f64,
    rng: StdRng,
}

impl OpGen {
    /// Pool of `2n` edges; one third of the operations are reads.
    pub fn new(n: usize, seed: u64) -> OpGen {
        OpGen::with_pool(n, edge_pool(n, 2 * n, seed ^ 0x9e37), 1.0 / 3.0, seed)
    }

    pub fn with_pool(n: usize, pool: Vec<(Vertex, Vertex)>, read_ratio: f64, seed: u64) -> OpGen {
        OpGen { n: n as Vertex, pool, read_ratio, rng: StdRng::seed_from_u64(seed) }
    }

    pub fn next_op(&mut self) -> Op {
        if self.pool.is_empty() || self.rng.random_bool(self.read_ratio) {
            let u = self.rng.random_range(0..self.n);
            let v = self.rng.random_range(0..self.n);
            return Op::Connected(u, v);
        }
        let (u, v) = self.pool[self.rng.random_range(0..self.pool.len())];
        if self.rng.random_bool(0.5) {
            Op::Add(u, v)
        } else {
            Op::Remove(u, v)
        }
    }

    pub fn take(&mut self, count: usize) -> Vec<Op> {
        (0..count).map(|_| self.next_op()).collect()
    }
}
