//! Removal descriptors published by spanning-edge removals.
//!
//! Slot word: null = empty, tag 1 = CLOSED, otherwise an owned proposal.
//! Once CLOSED the slot never changes again.

use std::sync::atomic::{AtomicBool, Ordering};

use crossbeam_epoch::{self as epoch, Atomic, Owned, Shared};

use crate::edge::Edge;
use crate::ett::{EulerTour, NodeId, NIL};
use crate::state::{EdgeState, StateMap, Status};

struct Proposal {
    edge: Edge,
    state: EdgeState,
}

/// Observed content of a replacement slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Empty,
    Proposed(Edge, EdgeState),
    Closed,
}

pub struct RemovalOp {
    edge: Edge,
    /// Sink of the bridged component in F_0.
    hi: NodeId,
    /// Root hanging under `hi` by the bridge link.
    lo: NodeId,
    open: AtomicBool,
    slot: Atomic<Proposal>,
}

impl RemovalOp {
    pub(crate) fn new(edge: Edge, hi: NodeId, lo: NodeId) -> RemovalOp {
        RemovalOp { edge, hi, lo, open: AtomicBool::new(false), slot: Atomic::null() }
    }

    /// The spanning edge being removed.
    pub fn edge(&self) -> Edge {
        self.edge
    }

    /// Whether the level-0 search has started; a pending descriptor is
    /// invisible to adders.
    pub fn is_open(&self) -> bool {
        self.open.load(Ordering::SeqCst)
    }

    pub(crate) fn open(&self) {
        self.open.store(true, Ordering::SeqCst);
    }

    pub fn slot(&self) -> Slot {
        let guard = &epoch::pin();
        let cur = self.slot.load(Ordering::SeqCst, guard);
        if cur.tag() == 1 {
            Slot::Closed
        } else {
            match unsafe { cur.as_ref() } {
                None => Slot::Empty,
                Some(p) => Slot::Proposed(p.edge, p.state),
            }
        }
    }

    /// True iff exactly one endpoint of `e` lies on the `lo` side of the
    /// bridged component. Accurate while the slot is open and unfinalized,
    /// when the writer keeps F_0 frozen. Caller must be pinned.
    pub fn can_be_replacement(&self, f0: &EulerTour, e: Edge) -> bool {
        match (self.side(f0, e.u()), self.side(f0, e.v())) {
            (Some(a), Some(b)) => a != b,
            _ => false,
        }
    }

    /// `Some(true)` on the `lo` side, `Some(false)` on the `hi` side,
    /// `None` outside the component.
    fn side(&self, f0: &EulerTour, v: u32) -> Option<bool> {
        let mut cur = f0.vertex_node(v);
        let mut via_lo = false;
        loop {
            via_lo |= cur == self.lo;
            let p = f0.parent(cur);
            if p == NIL {
                break;
            }
            cur = p;
        }
        (cur == self.hi).then_some(via_lo)
    }

    /// Tries to make `(e, s)` the replacement. True iff `e` occupies the
    /// slot. An occupant is helped to SPANNING; if that fails and it is not
    /// SPANNING, the slot is cleared and the attempt repeats.
    pub fn propose(&self, states: &StateMap, e: Edge, s: EdgeState) -> bool {
        self.propose_inner(states, Some((e, s)))
    }

    /// Closes the slot. Returns the edge that beat the close, if any.
    /// Idempotent.
    pub fn finalize(&self, states: &StateMap) -> Option<Edge> {
        if self.propose_inner(states, None) {
            return None;
        }
        match self.slot() {
            Slot::Proposed(e, _) => Some(e),
            _ => None,
        }
    }

    fn propose_inner(&self, states: &StateMap, want: Option<(Edge, EdgeState)>) -> bool {
        let guard = &epoch::pin();
        let backoff = crossbeam_utils::Backoff::new();
        let mut failures = 0u32;
        loop {
            let cur = self.slot.load(Ordering::SeqCst, guard);
            if cur.tag() == 1 {
                return false;
            }
            let Some(p) = (unsafe { cur.as_ref() }) else {
                let new = match want {
                    Some((edge, state)) => Owned::new(Proposal { edge, state }).into_shared(guard),
                    None => Shared::null().with_tag(1),
                };
                match self.slot.compare_exchange(cur, new, Ordering::SeqCst, Ordering::SeqCst, guard) {
                    Ok(_) => return true,
                    Err(_) => {
                        if !new.is_null() {
                            drop(unsafe { new.into_owned() });
                        }
                        failures += 1;
                        if failures > 64 {
                            backoff.snooze();
                        }
                        continue;
                    }
                }
            };
            if want.is_some_and(|(edge, _)| edge == p.edge) {
                return true;
            }
            let helped = states.cas(p.edge, p.state, EdgeState::spanning(0))
                || states.get(p.edge).is_some_and(|s| s.is(Status::Spanning));
            if helped {
                return false;
            }
            if self
                .slot
                .compare_exchange(cur, Shared::null(), Ordering::SeqCst, Ordering::SeqCst, guard)
                .is_ok()
            {
                unsafe { guard.defer_destroy(cur) };
            }
        }
    }
}

impl Drop for RemovalOp {
    fn drop(&mut self) {
        unsafe {
            let cur = self.slot.load(Ordering::Relaxed, epoch::unprotected());
            if cur.tag() == 0 && !cur.is_null() {
                drop(cur.into_owned());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(a: u32, b: u32) -> Edge {
        Edge::new(a, b).unwrap()
    }

    #[test]
    fn empty_slot_accepts() {
        let states = StateMap::default();
        let s = EdgeState::initial(1);
        states.put_if_absent(e(0, 1), s);
        let op = RemovalOp::new(e(5, 6), 0, 1);
        assert!(op.propose(&states, e(0, 1), s));
        assert!(op.propose(&states, e(0, 1), s), "re-proposal of the occupant");
        assert_eq!(op.slot(), Slot::Proposed(e(0, 1), s));
    }

    #[test]
    fn closed_slot_rejects() {
        let states = StateMap::default();
        let op = RemovalOp::new(e(5, 6), 0, 1);
        assert_eq!(op.finalize(&states), None);
        assert_eq!(op.finalize(&states), None, "second finalize is a no-op");
        assert!(!op.propose(&states, e(0, 1), EdgeState::initial(1)));
        assert_eq!(op.slot(), Slot::Closed);
    }

    #[test]
    fn proposal_beats_close() {
        let states = StateMap::default();
        let s = EdgeState::initial(1);
        states.put_if_absent(e(0, 1), s);
        let op = RemovalOp::new(e(5, 6), 0, 1);
        assert!(op.propose(&states, e(0, 1), s));
        assert_eq!(op.finalize(&states), Some(e(0, 1)));
        assert_eq!(states.get(e(0, 1)), Some(EdgeState::spanning(0)), "finalize helps");
        assert_eq!(op.finalize(&states), Some(e(0, 1)));
    }

    #[test]
    fn removed_occupant_is_evicted() {
        let states = StateMap::default();
        let (s1, s2) = (EdgeState::initial(1), EdgeState::initial(2));
        states.put_if_absent(e(0, 1), s1);
        states.put_if_absent(e(2, 3), s2);
        let op = RemovalOp::new(e(5, 6), 0, 1);
        assert!(op.propose(&states, e(0, 1), s1));
        assert!(states.remove_if(e(0, 1), s1));
        assert!(op.propose(&states, e(2, 3), s2));
        assert_eq!(op.slot(), Slot::Proposed(e(2, 3), s2));
    }

    #[test]
    fn spanning_occupant_wins() {
        let states = StateMap::default();
        let (s1, s2) = (EdgeState::initial(1), EdgeState::initial(2));
        states.put_if_absent(e(0, 1), s1);
        states.put_if_absent(e(2, 3), s2);
        let op = RemovalOp::new(e(5, 6), 0, 1);
        assert!(op.propose(&states, e(0, 1), s1));
        assert!(!op.propose(&states, e(2, 3), s2));
        assert_eq!(states.get(e(0, 1)), Some(EdgeState::spanning(0)));
    }
}
