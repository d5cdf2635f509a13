//! Node storage with stable addresses.
//!
//! Vertex nodes occupy ids `0..n` in a dedicated block. Arc nodes live in
//! geometrically growing segments published through `OnceLock`, so a node
//! reference stays valid for the arena's lifetime. Removed arc ids return to
//! a free list only after an epoch grace period.

use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use crossbeam_epoch::{Atomic, Guard};
use parking_lot::lock_api::RawMutex as _;
use parking_lot::{Mutex, RawMutex};

use crate::removal::RemovalOp;

pub type NodeId = u32;

/// Absent link.
pub const NIL: NodeId = u32::MAX;

const BASE: u64 = 1024;

pub(crate) struct Node {
    pub parent: AtomicU32,
    pub left: AtomicU32,
    pub right: AtomicU32,
    pub version: AtomicU64,
    pub priority: u64,
    /// Vertex nodes in the subtree.
    pub size: AtomicU32,
    /// All nodes in the subtree; gives implicit positions.
    pub count: AtomicU32,
    /// Packed (from, to) of an arc node.
    pub arc: AtomicU64,
    /// Arc of a tree edge whose level equals this forest's level.
    pub tree_mark: AtomicBool,
    pub has_tree: AtomicBool,
    pub has_nontree: AtomicBool,
    pub removal_op: Atomic<RemovalOp>,
    pub lock: RawMutex,
}

impl Node {
    fn new(priority: u64, vertex: bool) -> Node {
        let v = u32::from(vertex);
        Node {
            parent: AtomicU32::new(NIL),
            left: AtomicU32::new(NIL),
            right: AtomicU32::new(NIL),
            version: AtomicU64::new(0),
            priority,
            size: AtomicU32::new(v),
            count: AtomicU32::new(1),
            arc: AtomicU64::new(0),
            tree_mark: AtomicBool::new(false),
            has_tree: AtomicBool::new(false),
            has_nontree: AtomicBool::new(false),
            removal_op: Atomic::null(),
            lock: RawMutex::INIT,
        }
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub(crate) struct Arena {
    n: u32,
    seed: u64,
    vertices: Box<[Node]>,
    segments: Box<[OnceLock<Box<[Node]>>]>,
    next: AtomicU32,
    free: Arc<Mutex<Vec<NodeId>>>,
}

impl Arena {
    pub fn new(n: u32, seed: u64) -> Arena {
        let vertices = (0..n).map(|id| Node::new(priority(seed, id), true)).collect();
        let span = u64::from(NIL) - u64::from(n);
        let mut segs = 0;
        while BASE * ((1u64 << segs) - 1) < span {
            segs += 1;
        }
        Arena {
            n,
            seed,
            vertices,
            segments: (0..segs).map(|_| OnceLock::new()).collect(),
            next: AtomicU32::new(n),
            free: Arc::new(Mutex::new(Vec::new())),
        }
    }

    #[inline]
    pub fn get(&self, id: NodeId) -> &Node {
        if id < self.n {
            return &self.vertices[id as usize];
        }
        let (s, off) = locate(id - self.n);
        let seg = self.segments[s].get().expect("node id beyond allocated segments");
        &seg[off]
    }

    /// Fresh arc node with null links, cleared flags and an unchanged
    /// (monotone) version.
    pub fn alloc(&self) -> NodeId {
        let reused = self.free.lock().pop();
        let id = match reused {
            Some(id) => id,
            None => {
                let id = self.next.fetch_add(1, Ordering::Relaxed);
                assert!(id < NIL, "arena exhausted");
                let (s, _) = locate(id - self.n);
                self.segments[s].get_or_init(|| {
                    let start = self.n as u64 + BASE * ((1u64 << s) - 1);
                    let len = BASE << s;
                    (0..len)
                        .map(|k| Node::new(priority(self.seed, (start + k) as u32), false))
                        .collect()
                });
                id
            }
        };
        let node = self.get(id);
        node.parent.store(NIL, Ordering::Relaxed);
        node.left.store(NIL, Ordering::Relaxed);
        node.right.store(NIL, Ordering::Relaxed);
        node.size.store(0, Ordering::Relaxed);
        node.count.store(1, Ordering::Relaxed);
        node.tree_mark.store(false, Ordering::Relaxed);
        node.has_tree.store(false, Ordering::Relaxed);
        node.has_nontree.store(false, Ordering::Relaxed);
        id
    }

    /// Returns `id` to the free list once no pinned thread can hold it.
    pub fn retire(&self, id: NodeId, guard: &Guard) {
        debug_assert!(id >= self.n);
        let free = Arc::clone(&self.free);
        guard.defer(move || free.lock().push(id));
    }

    /// Upper bound (exclusive) on ids handed out so far.
    #[cfg(test)]
    pub fn high_water(&self) -> NodeId {
        self.next.load(Ordering::Relaxed)
    }
}

fn priority(seed: u64, id: NodeId) -> u64 {
    splitmix64(seed ^ splitmix64(u64::from(id)))
}

fn locate(j: u32) -> (usize, usize) {
    let q = u64::from(j) / BASE + 1;
    let s = 63 - q.leading_zeros() as usize;
    let off = u64::from(j) - BASE * ((1u64 << s) - 1);
    (s, off as usize)
}
