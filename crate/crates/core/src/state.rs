//! Edge states and the concurrent state map.
//!
//! A state packs (status, level, nonce) into one word; absence from the map
//! means REMOVED. Every transition is a single conditional update on the
//! map entry.

use std::fmt;

use dashmap::DashMap;

use crate::edge::Edge;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Initial,
    InProgress,
    Spanning,
    NonSpanning,
}

/// `status:2 | level:6 | nonce:56`. The nonce is non-zero only for
/// `Initial`, so two installs never produce equal states.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeState(u64);

const NONCE_MASK: u64 = (1 << 56) - 1;

impl EdgeState {
    pub fn initial(nonce: u64) -> EdgeState {
        EdgeState::pack(Status::Initial, 0, nonce & NONCE_MASK)
    }

    /// INITIAL with a fresh random nonce.
    pub fn fresh_initial() -> EdgeState {
        EdgeState::initial(rand::random::<u64>())
    }

    pub fn in_progress() -> EdgeState {
        EdgeState::pack(Status::InProgress, 0, 0)
    }

    pub fn spanning(level: usize) -> EdgeState {
        EdgeState::pack(Status::Spanning, level, 0)
    }

    pub fn non_spanning(level: usize) -> EdgeState {
        EdgeState::pack(Status::NonSpanning, level, 0)
    }

    fn pack(status: Status, level: usize, nonce: u64) -> EdgeState {
        debug_assert!(level < 64);
        let s = match status {
            Status::Initial => 0,
            Status::InProgress => 1,
            Status::Spanning => 2,
            Status::NonSpanning => 3,
        };
        EdgeState((s << 62) | ((level as u64) << 56) | nonce)
    }

    pub fn status(self) -> Status {
        match self.0 >> 62 {
            0 => Status::Initial,
            1 => Status::InProgress,
            2 => Status::Spanning,
            _ => Status::NonSpanning,
        }
    }

    pub fn level(self) -> usize {
        ((self.0 >> 56) & 63) as usize
    }

    pub fn nonce(self) -> u64 {
        self.0 & NONCE_MASK
    }

    pub fn is(self, status: Status) -> bool {
        self.status() == status
    }
}

impl fmt::Debug for EdgeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.status() {
            Status::Initial => write!(f, "INITIAL#{:x}", self.nonce()),
            Status::InProgress => write!(f, "IN_PROGRESS"),
            Status::Spanning => write!(f, "SPANNING({})", self.level()),
            Status::NonSpanning => write!(f, "NON_SPANNING({})", self.level()),
        }
    }
}

/// How a recorded transition was performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    /// Conditional install into an absent entry.
    Install,
    /// Conditional update or conditional removal.
    Cas,
    /// Unconditional removal of a spanning edge under its lock.
    Remove,
    /// The scan's write-back after a failed proposal.
    Revert,
    /// Test-only forced removal.
    Forced,
}

/// One observed state change; `None` is REMOVED.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub edge: Edge,
    pub from: Option<EdgeState>,
    pub to: Option<EdgeState>,
    pub kind: TransitionKind,
}

/// Whether a transition is an arc of the edge-status diagram (full
/// variant). Reverts are accepted only as SPANNING(0) → NON_SPANNING(0).
pub fn transition_allowed(t: &Transition) -> bool {
    use Status::*;
    match (t.from, t.to) {
        (None, Some(s)) => s.is(Initial),
        (Some(a), None) => matches!(a.status(), NonSpanning | Spanning | Initial),
        (Some(a), Some(b)) => match (a.status(), b.status()) {
            _ if t.kind == TransitionKind::Revert => {
                a == EdgeState::spanning(0) && b == EdgeState::non_spanning(0)
            }
            (Initial, NonSpanning) | (Initial, InProgress) => b.level() == 0,
            (Initial, Spanning) => b.level() == 0,
            (InProgress, Spanning) => b.level() == 0,
            (NonSpanning, NonSpanning) => b.level() == a.level() + 1,
            (NonSpanning, Spanning) => b.level() == a.level(),
            // A helper re-applying the writer's own SPANNING(0) proposal.
            (Spanning, Spanning) => b.level() == a.level() + 1 || a == b,
            _ => false,
        },
        (None, None) => false,
    }
}

pub struct StateMap {
    map: DashMap<Edge, EdgeState>,
    #[cfg(feature = "hooks")]
    recorder: parking_lot::Mutex<Option<Vec<Transition>>>,
}

impl Default for StateMap {
    fn default() -> Self {
        StateMap {
            map: DashMap::with_shard_amount(64),
            #[cfg(feature = "hooks")]
            recorder: parking_lot::Mutex::new(None),
        }
    }
}

impl StateMap {
    pub fn get(&self, e: Edge) -> Option<EdgeState> {
        self.map.get(&e).map(|r| *r)
    }

    /// Installs `s` if absent. Returns the existing state otherwise.
    pub fn put_if_absent(&self, e: Edge, s: EdgeState) -> Option<EdgeState> {
        use dashmap::mapref::entry::Entry;
        match self.map.entry(e) {
            Entry::Occupied(o) => Some(*o.get()),
            Entry::Vacant(v) => {
                v.insert(s);
                self.record(e, None, Some(s), TransitionKind::Install);
                None
            }
        }
    }

    pub fn cas(&self, e: Edge, expected: EdgeState, new: EdgeState) -> bool {
        let ok = match self.map.get_mut(&e) {
            Some(mut r) if *r == expected => {
                *r = new;
                true
            }
            _ => false,
        };
        if ok {
            self.record(e, Some(expected), Some(new), TransitionKind::Cas);
        }
        ok
    }

    /// Removes the entry only if it still equals `expected`.
    pub fn remove_if(&self, e: Edge, expected: EdgeState) -> bool {
        let ok = self.map.remove_if(&e, |_, s| *s == expected).is_some();
        if ok {
            self.record(e, Some(expected), None, TransitionKind::Cas);
        }
        ok
    }

    /// Unconditional removal; lock holders only.
    pub fn remove(&self, e: Edge) -> Option<EdgeState> {
        let old = self.map.remove(&e).map(|(_, s)| s);
        if old.is_some() {
            self.record(e, old, None, TransitionKind::Remove);
        }
        old
    }

    /// The scan's write-back of a state it moved to SPANNING itself.
    pub(crate) fn revert(&self, e: Edge, from: EdgeState, to: EdgeState) {
        let ok = match self.map.get_mut(&e) {
            Some(mut r) if *r == from => {
                *r = to;
                true
            }
            _ => false,
        };
        debug_assert!(ok, "revert lost its own SPANNING state for {e:?}");
        if ok {
            self.record(e, Some(from), Some(to), TransitionKind::Revert);
        }
    }

    /// Direct write used by the lock-based variants, which bypass the
    /// INITIAL protocol.
    pub(crate) fn insert_locked(&self, e: Edge, s: EdgeState) {
        let old = self.map.insert(e, s);
        self.record(e, old, Some(s), TransitionKind::Install);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Sorted snapshot; exact only at quiescence.
    pub fn snapshot(&self) -> Vec<(Edge, EdgeState)> {
        let mut out: Vec<_> = self.map.iter().map(|r| (*r.key(), *r.value())).collect();
        out.sort_unstable_by_key(|p| p.0);
        out
    }

    #[inline]
    fn record(&self, _e: Edge, _from: Option<EdgeState>, _to: Option<EdgeState>, _kind: TransitionKind) {
        #[cfg(feature = "hooks")]
        if let Some(log) = self.recorder.lock().as_mut() {
            log.push(Transition { edge: _e, from: _from, to: _to, kind: _kind });
        }
    }

    #[cfg(feature = "hooks")]
    pub fn start_recording(&self) {
        *self.recorder.lock() = Some(Vec::new());
    }

    #[cfg(feature = "hooks")]
    pub fn take_transitions(&self) -> Vec<Transition> {
        self.recorder.lock().take().unwrap_or_default()
    }

    /// Deletes an entry regardless of its state (fault injection).
    #[cfg(feature = "hooks")]
    pub fn force_remove(&self, e: Edge) -> Option<EdgeState> {
        let old = self.map.remove(&e).map(|(_, s)| s);
        self.record(e, old, None, TransitionKind::Forced);
        old
    }
}
