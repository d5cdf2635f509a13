//! Single-writer, multi-reader Euler tour trees over treaps.
//!
//! Each vertex owns one designated node; each tree edge owns two arc nodes,
//! one per direction. The in-order sequence of a treap is a cyclic rotation
//! of the Euler tour of its tree.
//!
//! Readers only follow `parent` links and read `version` words. The writer
//! of a component keeps every parent link pointing at a node with a larger
//! `(priority, id)` key, and never clears a parent link except at the single
//! logical split, so a reader walking up always reaches the one current
//! sink of its component. Links that no longer match a child pointer are
//! "stale" but still lead to the sink.

mod arena;
mod check;

use std::sync::atomic::Ordering::{Acquire, Relaxed, Release, SeqCst};
use std::time::Instant;

use crossbeam_epoch::{self as epoch, Guard};
use dashmap::DashMap;
use parking_lot::lock_api::RawMutex as _;

pub use arena::{NodeId, NIL};
pub(crate) use arena::{splitmix64, Node};
pub use check::TourItem;

use crate::edge::{Edge, Error, Vertex};
use crate::hooks::{HookPoint, Hooks};
use crate::multiset::EdgeMultiset;
use arena::Arena;

/// Outcome of a lock-free connectivity query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadTrace {
    pub connected: bool,
    /// Passes through the retry loop; 1 means first-try success.
    pub attempts: u32,
}

/// Which re-verification the query performs when the roots differ.
#[cfg(feature = "hooks")]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadCheck {
    Full,
    /// Omits the final re-verification of `u`. Not linearizable.
    Truncated,
}

/// Result of preparing a split: `lo` hangs under `hi` through a single
/// parent link that is not a child link. `hi` is the component's sink.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bridge {
    pub hi: NodeId,
    pub lo: NodeId,
    pub removed: [NodeId; 2],
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

pub struct EulerTour {
    n: u32,
    arena: Arena,
    sets: Box<[EdgeMultiset]>,
    arcs: DashMap<Edge, (NodeId, NodeId)>,
    pub(crate) hooks: Hooks,
    #[cfg(feature = "hooks")]
    skip_bumps: std::sync::atomic::AtomicBool,
}

impl EulerTour {
    /// `n` singleton trees; priorities derive from `seed`.
    pub fn new(n: usize, seed: u64) -> Result<EulerTour, Error> {
        if n == 0 {
            return Err(Error::NoVertices);
        }
        if n >= (NIL / 2) as usize {
            return Err(Error::TooManyVertices(n));
        }
        let n32 = n as u32;
        Ok(EulerTour {
            n: n32,
            arena: Arena::new(n32, seed),
            sets: (0..n).map(|_| EdgeMultiset::new()).collect(),
            arcs: DashMap::with_shard_amount(64),
            hooks: Hooks::default(),
            #[cfg(feature = "hooks")]
            skip_bumps: std::sync::atomic::AtomicBool::new(false),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub(crate) fn nd(&self, id: NodeId) -> &Node {
        self.arena.get(id)
    }

    /// The designated node of `v`.
    pub fn vertex_node(&self, v: Vertex) -> NodeId {
        assert!(v < self.n, "vertex {v} out of range");
        v
    }

    pub fn is_vertex_node(&self, x: NodeId) -> bool {
        x < self.n
    }

    pub fn multiset(&self, v: Vertex) -> &EdgeMultiset {
        &self.sets[v as usize]
    }

    pub fn version(&self, x: NodeId) -> u64 {
        self.nd(x).version.load(Acquire)
    }

    pub fn priority(&self, x: NodeId) -> u64 {
        self.nd(x).priority
    }

    pub fn has_tree_edge(&self, e: Edge) -> bool {
        self.arcs.contains_key(&e)
    }

    pub fn tree_edge_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn tree_edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self.arcs.iter().map(|r| *r.key()).collect();
        out.sort_unstable();
        out
    }

    // ---- readers ----

    /// The current sink of `v`'s component and its version.
    pub fn find_root(&self, v: Vertex) -> (NodeId, u64) {
        let _guard = epoch::pin();
        self.find_root_node(self.vertex_node(v))
    }

    /// Caller must be pinned.
    pub(crate) fn find_root_node(&self, x: NodeId) -> (NodeId, u64) {
        self.hooks.fire(HookPoint::FindRootStart);
        let mut cur = x;
        loop {
            let p = self.nd(cur).parent.load(Acquire);
            if p == NIL {
                break;
            }
            cur = p;
        }
        self.hooks.fire(HookPoint::FindRootBeforeVersion);
        (cur, self.nd(cur).version.load(Acquire))
    }

    pub fn connected(&self, u: Vertex, v: Vertex) -> bool {
        self.connected_traced(u, v).connected
    }

    pub fn connected_traced(&self, u: Vertex, v: Vertex) -> ReadTrace {
        self.connected_impl(u, v, true)
    }

    #[cfg(feature = "hooks")]
    pub fn connected_with(&self, u: Vertex, v: Vertex, check: ReadCheck) -> ReadTrace {
        self.connected_impl(u, v, check == ReadCheck::Full)
    }

    fn connected_impl(&self, u: Vertex, v: Vertex, last_recheck: bool) -> ReadTrace {
        let (u, v) = (self.vertex_node(u), self.vertex_node(v));
        if u == v {
            return ReadTrace { connected: true, attempts: 1 };
        }
        let _guard = epoch::pin();
        let mut attempts = 0;
        loop {
            attempts += 1;
            let ru = self.find_root_node(u);
            let rv = self.find_root_node(v);
            if ru != self.find_root_node(u) {
                continue;
            }
            if ru.0 != rv.0 {
                if rv != self.find_root_node(v) {
                    continue;
                }
                if last_recheck && ru != self.find_root_node(u) {
                    continue;
                }
            }
            return ReadTrace { connected: ru.0 == rv.0, attempts };
        }
    }

    // ---- edge info ----

    /// Publishes `e` in both endpoint multisets and raises flags towards
    /// the sinks. Lock-free.
    pub fn add_info(&self, e: Edge) {
        let _guard = epoch::pin();
        self.sets[e.u() as usize].add(e);
        self.sets[e.v() as usize].add(e);
        self.set_flags_up(e.u());
        self.set_flags_up(e.v());
    }

    /// Removes one copy from each endpoint multiset. Flags stay raised.
    pub fn remove_info(&self, e: Edge) -> bool {
        let a = self.sets[e.u() as usize].remove_one(e);
        let b = self.sets[e.v() as usize].remove_one(e);
        debug_assert_eq!(a, b, "unpaired info copy for {e:?}");
        a && b
    }

    /// Raises `has_nontree` from `v` towards the sink; stops at the first
    /// node already raised.
    pub fn set_flags_up(&self, v: Vertex) {
        let _guard = epoch::pin();
        let mut cur = self.vertex_node(v);
        loop {
            let node = self.nd(cur);
            if node.has_nontree.load(SeqCst) {
                return;
            }
            node.has_nontree.store(true, SeqCst);
            let p = node.parent.load(SeqCst);
            if p == NIL {
                return;
            }
            cur = p;
        }
    }

    /// Recomputes `has_nontree` of `x` from its own multiset and children.
    /// A written `false` is re-checked so a concurrent raise is not lost.
    /// Writer only.
    pub fn recalculate_flags(&self, x: NodeId) {
        let node = self.nd(x);
        let compute = || {
            self.owns_edges(x)
                || self.flag_nontree(node.left.load(Relaxed))
                || self.flag_nontree(node.right.load(Relaxed))
        };
        let f = compute();
        node.has_nontree.store(f, SeqCst);
        if !f && compute() {
            node.has_nontree.store(true, SeqCst);
        }
    }

    fn owns_edges(&self, x: NodeId) -> bool {
        x < self.n && !self.sets[x as usize].is_empty()
    }

    fn flag_nontree(&self, x: NodeId) -> bool {
        x != NIL && self.nd(x).has_nontree.load(SeqCst)
    }

    // ---- writer-side navigation ----

    pub(crate) fn left(&self, x: NodeId) -> NodeId {
        self.nd(x).left.load(Relaxed)
    }

    pub(crate) fn right(&self, x: NodeId) -> NodeId {
        self.nd(x).right.load(Relaxed)
    }

    pub(crate) fn parent(&self, x: NodeId) -> NodeId {
        self.nd(x).parent.load(Acquire)
    }

    pub(crate) fn has_nontree(&self, x: NodeId) -> bool {
        self.flag_nontree(x)
    }

    pub(crate) fn has_tree(&self, x: NodeId) -> bool {
        x != NIL && self.nd(x).has_tree.load(Relaxed)
    }

    pub(crate) fn tree_mark(&self, x: NodeId) -> bool {
        self.nd(x).tree_mark.load(Relaxed)
    }

    /// Vertex nodes in the subtree of `x`.
    pub fn subtree_size(&self, x: NodeId) -> u32 {
        if x == NIL {
            0
        } else {
            self.nd(x).size.load(Relaxed)
        }
    }

    fn subtree_count(&self, x: NodeId) -> u32 {
        if x == NIL {
            0
        } else {
            self.nd(x).count.load(Relaxed)
        }
    }

    /// (from, to) of an arc node.
    pub(crate) fn arc_of(&self, x: NodeId) -> (Vertex, Vertex) {
        let w = self.nd(x).arc.load(Relaxed);
        ((w >> 32) as Vertex, w as Vertex)
    }

    pub(crate) fn arc_edge(&self, x: NodeId) -> Edge {
        let (a, b) = self.arc_of(x);
        Edge::new(a, b).expect("arc endpoints differ")
    }

    fn key(&self, x: NodeId) -> (u64, NodeId) {
        (self.nd(x).priority, x)
    }

    /// Parent only if it also holds `x` as a child.
    pub(crate) fn real_parent(&self, x: NodeId) -> Option<NodeId> {
        let p = self.parent(x);
        (p != NIL && (self.left(p) == x || self.right(p) == x)).then_some(p)
    }

    /// Root of the treap holding `x`, following child-confirmed links only.
    pub(crate) fn tree_root(&self, x: NodeId) -> NodeId {
        let mut cur = x;
        while let Some(p) = self.real_parent(cur) {
            cur = p;
        }
        cur
    }

    pub fn tree_root_of(&self, v: Vertex) -> NodeId {
        self.tree_root(self.vertex_node(v))
    }

    // ---- writer-side mutation ----

    pub fn bump_root_version(&self, x: NodeId) {
        debug_assert_eq!(self.nd(x).parent.load(Relaxed), NIL, "bump on a non-root");
        #[cfg(feature = "hooks")]
        if self.skip_bumps.load(Relaxed) {
            return;
        }
        self.nd(x).version.fetch_add(1, Release);
    }

    /// Bumps `x` even while it still has a parent; used right before `x`
    /// becomes a sink.
    fn bump_future_root(&self, x: NodeId) {
        #[cfg(feature = "hooks")]
        if self.skip_bumps.load(Relaxed) {
            return;
        }
        self.nd(x).version.fetch_add(1, Release);
    }

    fn set_parent(&self, x: NodeId, p: NodeId) {
        debug_assert!(p == NIL || self.key(p) > self.key(x), "parent key must dominate");
        self.nd(x).parent.store(p, SeqCst);
    }

    fn set_child(&self, x: NodeId, side: Side, c: NodeId) {
        let node = self.nd(x);
        match side {
            Side::Left => node.left.store(c, SeqCst),
            Side::Right => node.right.store(c, SeqCst),
        }
        if c != NIL {
            self.set_parent(c, x);
        }
    }

    fn update(&self, x: NodeId) {
        let node = self.nd(x);
        let (l, r) = (node.left.load(Relaxed), node.right.load(Relaxed));
        let size = u32::from(x < self.n) + self.subtree_size(l) + self.subtree_size(r);
        let count = 1 + self.subtree_count(l) + self.subtree_count(r);
        let has_tree =
            node.tree_mark.load(Relaxed) || self.has_tree(l) || self.has_tree(r);
        node.size.store(size, Relaxed);
        node.count.store(count, Relaxed);
        node.has_tree.store(has_tree, Relaxed);
        self.recalculate_flags(x);
    }

    fn update_to_root(&self, x: NodeId) {
        let mut cur = x;
        loop {
            self.update(cur);
            match self.real_parent(cur) {
                Some(p) => cur = p,
                None => return,
            }
        }
    }

    /// Splits the treap holding `x` into (before, after). `x` goes to the
    /// left part iff `x_left`. Detached subtrees keep their old parent link.
    fn split(&self, x: NodeId, x_left: bool) -> (NodeId, NodeId) {
        let mut up = self.real_parent(x);
        let (mut l, mut r);
        if x_left {
            r = self.right(x);
            self.nd(x).right.store(NIL, SeqCst);
            l = x;
        } else {
            l = self.left(x);
            self.nd(x).left.store(NIL, SeqCst);
            r = x;
        }
        self.update(x);
        let mut cur = x;
        while let Some(p) = up {
            up = self.real_parent(p);
            if self.left(p) == cur {
                self.set_child(p, Side::Left, r);
                r = p;
            } else {
                self.set_child(p, Side::Right, l);
                l = p;
            }
            self.update(p);
            cur = p;
        }
        (l, r)
    }

    /// Concatenates two treaps. Nodes are attached top-down, so every node
    /// gains its new parent only after that parent is itself in place.
    fn join(&self, a: NodeId, b: NodeId) -> NodeId {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        let root = if self.key(a) > self.key(b) { a } else { b };
        let (mut a, mut b) = (a, b);
        let mut hook: Option<(NodeId, Side)> = None;
        let mut path = Vec::with_capacity(64);
        loop {
            if a == NIL || b == NIL {
                let rest = if a == NIL { b } else { a };
                if let Some((h, side)) = hook {
                    self.set_child(h, side, rest);
                }
                break;
            }
            if self.key(a) > self.key(b) {
                if let Some((h, side)) = hook {
                    self.set_child(h, side, a);
                }
                path.push(a);
                hook = Some((a, Side::Right));
                a = self.right(a);
            } else {
                if let Some((h, side)) = hook {
                    self.set_child(h, side, b);
                }
                path.push(b);
                hook = Some((b, Side::Left));
                b = self.left(b);
            }
        }
        for &x in path.iter().rev() {
            self.update(x);
        }
        root
    }

    /// In-order index of `x` within its treap.
    fn position(&self, x: NodeId) -> u64 {
        let mut pos = u64::from(self.subtree_count(self.left(x)));
        let mut cur = x;
        while let Some(p) = self.real_parent(cur) {
            if self.right(p) == cur {
                pos += u64::from(self.subtree_count(self.left(p))) + 1;
            }
            cur = p;
        }
        pos
    }

    /// Rotates the treap holding `x` so that `x` comes first.
    fn reroot(&self, x: NodeId) -> NodeId {
        let (l, r) = self.split(x, false);
        self.join(r, l)
    }

    fn alloc_arc(&self, from: Vertex, to: Vertex) -> NodeId {
        let id = self.arena.alloc();
        self.nd(id).arc.store(((from as u64) << 32) | to as u64, Relaxed);
        id
    }

    /// Links the trees of `e`'s endpoints. `mark` tags the edge as a tree
    /// edge of this forest's own level. With `locks`, any node that becomes
    /// a sink during the call is locked first.
    pub(crate) fn link(&self, e: Edge, mark: bool, locks: Option<&mut LockSet<'_>>) {
        let ru = self.tree_root(e.u());
        let rv = self.tree_root(e.v());
        assert_ne!(ru, rv, "link inside one tree: {e:?}");
        self.bump_root_version(ru);
        self.bump_root_version(rv);
        let (hi, lo) = if self.key(ru) > self.key(rv) { (ru, rv) } else { (rv, ru) };
        self.splice(e, mark, hi, Some(lo), locks);
    }

    /// Reconnects a bridged split through the replacement `e`, whose
    /// endpoints lie on opposite sides. The bridge keeps the component
    /// whole for readers, so no logical step happens here.
    pub(crate) fn relink(&self, bridge: &Bridge, e: Edge, mark: bool, locks: Option<&mut LockSet<'_>>) {
        debug_assert_eq!(self.parent(bridge.lo), bridge.hi);
        self.splice(e, mark, bridge.hi, None, locks);
    }

    fn splice(
        &self,
        e: Edge,
        mark: bool,
        hi: NodeId,
        logical: Option<NodeId>,
        locks: Option<&mut LockSet<'_>>,
    ) {
        let a = self.alloc_arc(e.u(), e.v());
        let b = self.alloc_arc(e.v(), e.u());
        self.nd(a).tree_mark.store(mark, Relaxed);
        self.nd(a).has_tree.store(mark, Relaxed);
        // The overall maximum becomes the final root. A fresh arc winning
        // that race adopts the old sink before anything else moves.
        let top = [hi, a, b].into_iter().max_by_key(|&x| self.key(x)).unwrap();
        if top == hi {
            self.set_parent(a, hi);
            self.set_parent(b, hi);
        } else {
            let other = if top == a { b } else { a };
            self.bump_future_root(top);
            if let Some(locks) = locks {
                locks.adopt(top);
            }
            self.set_parent(other, top);
            self.set_parent(hi, top);
        }
        if let Some(lo) = logical {
            self.set_parent(lo, hi);
        }
        let tu = self.reroot(e.u());
        let tv = self.reroot(e.v());
        let t = self.join(tu, a);
        let t = self.join(t, tv);
        let root = self.join(t, b);
        debug_assert_eq!(root, top);
        debug_assert_eq!(self.parent(root), NIL);
        self.arcs.insert(e, (a, b));
    }

    /// Removes the arcs of tree edge `e` and leaves the two resulting tours
    /// bridged: one root hangs under the other through its parent link only.
    pub(crate) fn begin_cut(&self, e: Edge, locks: Option<&mut LockSet<'_>>) -> Bridge {
        let (_, (a, b)) = self.arcs.remove(&e).unwrap_or_else(|| panic!("{e:?} is not a tree edge"));
        let r0 = self.tree_root(a);
        self.bump_root_version(r0);
        let (first, second) = if self.position(a) < self.position(b) { (a, b) } else { (b, a) };
        let (x, _) = self.split(first, false);
        self.split(first, true);
        let (inner, _) = self.split(second, false);
        let (_, z) = self.split(second, true);
        let outer = self.join(x, z);
        debug_assert!(outer != NIL && inner != NIL);
        let (hi, lo) =
            if self.key(outer) > self.key(inner) { (outer, inner) } else { (inner, outer) };
        self.set_parent(lo, hi);
        if r0 != hi {
            // The old sink was one of the removed arcs.
            debug_assert!(r0 == first || r0 == second);
            if let Some(locks) = locks {
                locks.adopt(hi);
            }
            self.bump_future_root(hi);
            self.set_parent(hi, NIL);
        }
        for x in [first, second] {
            let node = self.nd(x);
            node.tree_mark.store(false, Relaxed);
            node.has_tree.store(false, Relaxed);
        }
        Bridge { hi, lo, removed: [a, b] }
    }

    /// The logical split: clears the bridge link.
    pub(crate) fn finish_split(&self, bridge: &Bridge) {
        self.bump_future_root(bridge.lo);
        self.set_parent(bridge.lo, NIL);
    }

    pub(crate) fn retire(&self, bridge: &Bridge, guard: &Guard) {
        for x in bridge.removed {
            self.arena.retire(x, guard);
        }
    }

    /// Cuts tree edge `e` outright. For forests without concurrent readers
    /// or when no replacement search is needed.
    pub(crate) fn cut(&self, e: Edge) {
        let guard = epoch::pin();
        let bridge = self.begin_cut(e, None);
        self.finish_split(&bridge);
        self.retire(&bridge, &guard);
    }

    /// Sets or clears the level tag of tree edge `e`.
    pub(crate) fn set_tree_mark(&self, e: Edge, mark: bool) {
        let a = self.arcs.get(&e).map(|r| r.0).unwrap_or_else(|| panic!("{e:?} not in forest"));
        self.nd(a).tree_mark.store(mark, Relaxed);
        self.update_to_root(a);
    }

    /// Whether tree edge `e` carries this forest's level tag.
    pub(crate) fn tree_edge_marked(&self, e: Edge) -> Option<bool> {
        self.arcs.get(&e).map(|r| self.tree_mark(r.0) || self.tree_mark(r.1))
    }

    /// Tree edges tagged with this forest's level under `root`.
    pub(crate) fn marked_edges(&self, root: NodeId) -> Vec<Edge> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            if !self.has_tree(x) {
                continue;
            }
            if self.tree_mark(x) {
                out.push(self.arc_edge(x));
            }
            stack.push(self.left(x));
            stack.push(self.right(x));
        }
        out
    }

    /// Descriptor slot of `x`; meaningful at F_0 sinks only.
    pub(crate) fn removal_slot(&self, x: NodeId) -> &crossbeam_epoch::Atomic<crate::removal::RemovalOp> {
        &self.nd(x).removal_op
    }

    // ---- locks ----

    pub(crate) fn lock_node(&self, x: NodeId) {
        let lock = &self.nd(x).lock;
        if !lock.try_lock() {
            let start = Instant::now();
            lock.lock();
            crate::stats::record_lock_wait(start.elapsed());
        }
    }

    pub(crate) fn try_lock_node(&self, x: NodeId) -> bool {
        self.nd(x).lock.try_lock()
    }

    /// # Safety
    /// The current thread holds the lock of `x`.
    pub(crate) unsafe fn unlock_node(&self, x: NodeId) {
        self.nd(x).lock.unlock();
    }

    // ---- test support ----

    #[cfg(feature = "hooks")]
    pub fn set_hook(&self, f: Option<crate::hooks::HookFn>) {
        self.hooks.set(f);
    }

    /// Makes every version bump a no-op (fault injection).
    #[cfg(feature = "hooks")]
    pub fn inject_skip_version_bumps(&self, on: bool) {
        self.skip_bumps.store(on, Relaxed);
    }

    /// Raw parent store for scripted schedules on an edgeless tour.
    #[cfg(feature = "hooks")]
    pub fn raw_set_parent(&self, x: NodeId, parent: NodeId) {
        self.nd(x).parent.store(parent, SeqCst);
    }

    /// Raw version increment for scripted schedules.
    #[cfg(feature = "hooks")]
    pub fn raw_bump(&self, x: NodeId) {
        self.nd(x).version.fetch_add(1, Release);
    }
}

/// Component locks held by one operation; released on drop.
pub struct LockSet<'a> {
    tour: &'a EulerTour,
    held: Vec<NodeId>,
}

impl<'a> LockSet<'a> {
    pub(crate) fn new(tour: &'a EulerTour) -> Self {
        LockSet { tour, held: Vec::with_capacity(4) }
    }

    /// Locks a node about to become a sink of a component this thread
    /// already owns. Only transient lockers that will fail verification
    /// can hold it, and they never wait while holding a lock.
    pub(crate) fn adopt(&mut self, x: NodeId) {
        if !self.held.contains(&x) {
            self.tour.lock_node(x);
            self.held.push(x);
        }
    }

    pub(crate) fn push_locked(&mut self, x: NodeId) {
        self.held.push(x);
    }

    pub fn held(&self) -> &[NodeId] {
        &self.held
    }
}

impl Drop for LockSet<'_> {
    fn drop(&mut self) {
        for &x in self.held.iter().rev() {
            unsafe { self.tour.unlock_node(x) };
        }
    }
}

#[cfg(test)]
mod tests;
