//! Level structure: nested forests F_0 ⊇ F_1 ⊇ … ⊇ F_lmax.
//!
//! Invariants at quiescence:
//! - an edge of level l is a tree edge of exactly F_0..F_l, or a
//!   non-spanning edge whose endpoints are connected in F_l;
//! - every tree of F_i has at most n / 2^i vertices;
//! - a tree edge's canonical arc carries the level mark only in F_level.

use crossbeam_epoch::{Guard, Owned, Shared};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::edge::{Edge, Error};
use crate::ett::{splitmix64, EulerTour, LockSet, NodeId, NIL};
use crate::hooks::HookPoint;
use crate::removal::RemovalOp;
use crate::state::{EdgeState, StateMap, Status};
use crate::stats::{Counters, Stats};

pub const DEFAULT_SAMPLE_BUDGET: usize = 16;

pub struct LevelForest {
    n: usize,
    forests: Vec<EulerTour>,
    states: StateMap,
    sample_budget: usize,
    seed: u64,
    removals: AtomicU64,
    counters: Counters,
}

impl LevelForest {
    pub fn new(n: usize, sample_budget: usize, seed: u64) -> Result<LevelForest, Error> {
        if n == 0 {
            return Err(Error::NoVertices);
        }
        let lmax = usize::BITS as usize - 1 - n.leading_zeros() as usize;
        let forests = (0..=lmax)
            .map(|i| EulerTour::new(n, splitmix64(seed ^ (i as u64).wrapping_mul(0xa076_1d64_78bd_642f))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LevelForest {
            n,
            forests,
            states: StateMap::default(),
            sample_budget,
            seed,
            removals: AtomicU64::new(0),
            counters: Counters::default(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// ⌊log2 n⌋.
    pub fn max_level(&self) -> usize {
        self.forests.len() - 1
    }

    pub fn forest(&self, level: usize) -> &EulerTour {
        &self.forests[level]
    }

    pub fn states(&self) -> &StateMap {
        &self.states
    }

    pub fn stats(&self) -> Stats {
        self.counters.snapshot()
    }

    /// Links a new level-0 tree edge into F_0. Caller holds both locks.
    pub fn insert_spanning(&self, e: Edge, locks: &mut LockSet<'_>) {
        self.forests[0].link(e, true, Some(locks));
    }

    /// Removes spanning edge `e` of level `l` and restores a spanning forest,
    /// returning the replacement if one exists. Caller holds the component
    /// lock and is pinned by `guard`; `states` still maps `e` to SPANNING.
    pub fn remove_spanning(&self, e: Edge, l: usize, locks: &mut LockSet<'_>, guard: &Guard) -> Option<Edge> {
        Counters::bump(&self.counters.spanning_removals, 1);
        let f0 = &self.forests[0];
        let bridge = f0.begin_cut(e, Some(locks));
        let op = Owned::new(RemovalOp::new(e, bridge.hi, bridge.lo)).into_shared(guard);
        f0.removal_slot(bridge.hi).store(op, Ordering::SeqCst);
        f0.hooks.fire(HookPoint::RemovalPublished);
        for i in 1..=l {
            self.forests[i].cut(e);
        }
        let k = self.removals.fetch_add(1, Ordering::Relaxed);
        let mut rng = SmallRng::seed_from_u64(splitmix64(self.seed ^ splitmix64(k)));

        let mut found = None;
        for i in (1..=l).rev() {
            let f = &self.forests[i];
            let a = smaller_side(f, f.tree_root_of(e.u()), f.tree_root_of(e.v()));
            self.promote_tree_edges(i, a);
            let hit = self.sample(i, a, &mut rng).or_else(|| self.scan(i, a));
            if let Some(r) = hit {
                found = Some((r, i));
                break;
            }
        }
        let op_ref = unsafe { op.deref() };
        if found.is_none() {
            op_ref.open();
            f0.hooks.fire(HookPoint::RemovalSlotOpened);
            let a0 = smaller_side(f0, f0.tree_root_of(e.u()), f0.tree_root_of(e.v()));
            self.promote_tree_edges(0, a0);
            if !self.sample_level0(a0, op_ref, &mut rng) {
                self.scan_level0(a0, op_ref);
            }
        }
        f0.hooks.fire(HookPoint::RemovalBeforeFinalize);
        let proposed = op_ref.finalize(&self.states);
        f0.hooks.fire(HookPoint::RemovalFinalized);

        let result = match (found, proposed) {
            (Some((r, i)), _) => {
                for j in 1..=i {
                    self.forests[j].link(r, j == i, None);
                }
                f0.relink(&bridge, r, false, Some(locks));
                Some(r)
            }
            (None, Some(r)) => {
                f0.relink(&bridge, r, true, Some(locks));
                Some(r)
            }
            (None, None) => {
                f0.finish_split(&bridge);
                None
            }
        };
        f0.removal_slot(bridge.hi).store(Shared::null(), Ordering::SeqCst);
        unsafe { guard.defer_destroy(op) };
        f0.retire(&bridge, guard);
        if result.is_some() {
            Counters::bump(&self.counters.replacements, 1);
        }
        result
    }

    /// Moves every level-`i` tree edge under `a` up to level i+1.
    fn promote_tree_edges(&self, i: usize, a: NodeId) {
        let f = &self.forests[i];
        let edges = f.marked_edges(a);
        if edges.is_empty() {
            return;
        }
        debug_assert!(i < self.max_level(), "tree edges at the top level");
        let up = &self.forests[i + 1];
        let promoted = edges.len() as u64;
        for t in edges {
            f.set_tree_mark(t, false);
            up.link(t, true, None);
            let ok = self.states.cas(t, EdgeState::spanning(i), EdgeState::spanning(i + 1));
            debug_assert!(ok, "tree edge {t:?} not SPANNING({i})");
        }
        Counters::bump(&self.counters.promotions, promoted);
    }

    /// Optimistic two-phase promotion of a non-spanning edge.
    fn promote_non_spanning(&self, i: usize, e: Edge, s: EdgeState) {
        debug_assert!(i < self.max_level());
        self.forests[i + 1].add_info(e);
        if self.states.cas(e, s, EdgeState::non_spanning(i + 1)) {
            self.forests[i].remove_info(e);
            Counters::bump(&self.counters.promotions, 1);
        } else {
            self.forests[i + 1].remove_info(e);
        }
    }

    /// Whether `e` joins the two trees left by the cut at level `i` ≥ 1.
    fn crosses(&self, i: usize, e: Edge) -> bool {
        let f = &self.forests[i];
        f.tree_root_of(e.u()) != f.tree_root_of(e.v())
    }

    /// Samples up to the budget of non-spanning edges adjacent to `a`.
    /// Nothing is promoted on this path.
    fn sample(&self, i: usize, a: NodeId, rng: &mut SmallRng) -> Option<Edge> {
        let f = &self.forests[i];
        for _ in 0..self.sample_budget {
            let e = sample_edge(f, a, rng)?;
            Counters::bump(&self.counters.examined, 1);
            if self.states.get(e) != Some(EdgeState::non_spanning(i)) || !self.crosses(i, e) {
                continue;
            }
            if self.states.cas(e, EdgeState::non_spanning(i), EdgeState::spanning(i)) {
                f.remove_info(e);
                Counters::bump(&self.counters.sampled_replacements, 1);
                return Some(e);
            }
        }
        None
    }

    /// Flag-guided depth-first scan over level-`i` non-spanning edges
    /// adjacent to the subtree of `x`, promoting every non-candidate.
    fn scan(&self, i: usize, x: NodeId) -> Option<Edge> {
        let f = &self.forests[i];
        if x == NIL || !f.has_nontree(x) {
            return None;
        }
        let mut found = None;
        if f.is_vertex_node(x) {
            for e in f.multiset(x).snapshot() {
                Counters::bump(&self.counters.examined, 1);
                let Some(s) = self.states.get(e) else { continue };
                if s != EdgeState::non_spanning(i) {
                    continue;
                }
                if self.crosses(i, e) {
                    if self.states.cas(e, s, EdgeState::spanning(i)) {
                        f.remove_info(e);
                        found = Some(e);
                        break;
                    }
                } else {
                    self.promote_non_spanning(i, e, s);
                }
            }
        }
        if found.is_none() {
            found = self.scan(i, f.left(x));
        }
        if found.is_none() {
            found = self.scan(i, f.right(x));
        }
        f.recalculate_flags(x);
        found
    }

    fn sample_level0(&self, a: NodeId, op: &RemovalOp, rng: &mut SmallRng) -> bool {
        let f0 = &self.forests[0];
        let ns0 = EdgeState::non_spanning(0);
        for _ in 0..self.sample_budget {
            let Some(e) = sample_edge(f0, a, rng) else { return false };
            Counters::bump(&self.counters.examined, 1);
            if self.states.get(e) != Some(ns0) || !op.can_be_replacement(f0, e) {
                continue;
            }
            if self.states.cas(e, ns0, EdgeState::spanning(0)) {
                if op.propose(&self.states, e, EdgeState::spanning(0)) {
                    f0.remove_info(e);
                } else {
                    self.states.revert(e, EdgeState::spanning(0), ns0);
                }
                Counters::bump(&self.counters.sampled_replacements, 1);
                return true;
            }
        }
        false
    }

    /// Level-0 scan: also helps concurrent INITIAL additions and routes
    /// every candidate through the descriptor's slot.
    fn scan_level0(&self, x: NodeId, op: &RemovalOp) -> bool {
        let f0 = &self.forests[0];
        if x == NIL || !f0.has_nontree(x) {
            return false;
        }
        let mut found = false;
        if f0.is_vertex_node(x) {
            for e in f0.multiset(x).snapshot() {
                Counters::bump(&self.counters.examined, 1);
                let Some(mut s) = self.states.get(e) else { continue };
                if s.level() != 0 {
                    continue;
                }
                if s.is(Status::Initial) {
                    if op.can_be_replacement(f0, e)
                        && op.propose(&self.states, e, s)
                        && self.states.cas(e, s, EdgeState::spanning(0))
                    {
                        found = true;
                        break;
                    }
                    if f0.find_root(e.u()).0 == f0.find_root(e.v()).0 {
                        f0.add_info(e);
                        let next = EdgeState::non_spanning(0);
                        if self.states.cas(e, s, next) {
                            s = next;
                        } else {
                            f0.remove_info(e);
                        }
                    }
                    if s.is(Status::Initial) {
                        match self.states.get(e) {
                            Some(now) if now.level() == 0 => s = now,
                            _ => continue,
                        }
                    }
                }
                if !s.is(Status::NonSpanning) {
                    continue;
                }
                if op.can_be_replacement(f0, e) {
                    if self.states.cas(e, s, EdgeState::spanning(0)) {
                        if op.propose(&self.states, e, EdgeState::spanning(0)) {
                            f0.remove_info(e);
                        } else {
                            self.states.revert(e, EdgeState::spanning(0), s);
                        }
                        found = true;
                        break;
                    }
                } else {
                    self.promote_non_spanning(0, e, s);
                }
            }
        }
        if !found {
            found = self.scan_level0(f0.left(x), op);
        }
        if !found {
            found = self.scan_level0(f0.right(x), op);
        }
        f0.recalculate_flags(x);
        found
    }
}

/// The side to search: fewer vertices, ties to the side of the smaller
/// endpoint (`ra` is the tree of `e.u()`).
fn smaller_side(f: &EulerTour, ra: NodeId, rb: NodeId) -> NodeId {
    if f.subtree_size(rb) < f.subtree_size(ra) {
        rb
    } else {
        ra
    }
}

/// Picks a vertex under `root` with a non-empty multiset by a descent
/// weighted with subtree sizes, then a uniform entry of its multiset.
fn sample_edge(f: &EulerTour, root: NodeId, rng: &mut SmallRng) -> Option<Edge> {
    let mut x = root;
    loop {
        if x == NIL {
            return None;
        }
        let own = u64::from(f.is_vertex_node(x) && !f.multiset(x).is_empty());
        let weight = |c: NodeId| {
            if f.has_nontree(c) {
                u64::from(f.subtree_size(c).max(1))
            } else {
                0
            }
        };
        let (l, r) = (f.left(x), f.right(x));
        let (wl, wr) = (weight(l), weight(r));
        let total = own + wl + wr;
        if total == 0 {
            return None;
        }
        let pick = rng.random_range(0..total);
        if pick < own {
            let edges = f.multiset(x).snapshot();
            if edges.is_empty() {
                return None;
            }
            return Some(edges[rng.random_range(0..edges.len())]);
        }
        x = if pick < own + wl { l } else { r };
    }
}
