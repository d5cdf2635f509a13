//! Thread-safe dynamic connectivity facade.
//!
//! Every change to a spanning forest happens under the locks of the
//! affected F_0 sinks. Queries never lock except in the `Fine` variant. In
//! the `Full` variant non-spanning edges are added and removed without
//! locks through the edge-state protocol.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::Ordering;

use crossbeam_epoch as epoch;
use parking_lot::Mutex;

use crate::edge::{Edge, Error, Vertex};
use crate::ett::{EulerTour, LockSet, ReadTrace, NIL};
use crate::hooks::HookPoint;
use crate::level::{LevelForest, DEFAULT_SAMPLE_BUDGET};
use crate::removal::Slot;
use crate::state::{EdgeState, StateMap, Status};
use crate::stats::Stats;

/// Synchronization strategy, chosen at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// One global lock serializes updates; queries are lock-free.
    Coarse,
    /// Per-component locks for updates and queries.
    Fine,
    /// Per-component locks for updates; lock-free queries.
    NbReads,
    /// `NbReads` plus lock-free non-spanning additions and removals.
    Full,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Coarse, Variant::Fine, Variant::NbReads, Variant::Full];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Coarse => "coarse",
            Variant::Fine => "fine",
            Variant::NbReads => "nb-reads",
            Variant::Full => "full",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant, Error> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub variant: Variant,
    /// Replacement candidates drawn before a full scan; 0 disables sampling.
    pub sample_budget: usize,
    /// Seeds treap priorities and sampling.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config { variant: Variant::Full, sample_budget: DEFAULT_SAMPLE_BUDGET, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    /// The edge was already in the graph.
    Present,
    /// Added with both endpoints already connected.
    NonSpanning,
    /// Added as a spanning-forest edge, merging two components.
    Spanning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemoveOutcome {
    /// The edge was not in the graph.
    Absent,
    NonSpanning,
    /// Removed a spanning-forest edge; `replaced` is false iff the
    /// component split.
    Spanning { replaced: bool },
}

pub struct DynamicConnectivity {
    config: Config,
    lf: LevelForest,
    global: Mutex<()>,
}

impl DynamicConnectivity {
    /// `n` isolated vertices with the default configuration.
    pub fn new(n: usize) -> Result<DynamicConnectivity, Error> {
        DynamicConnectivity::with_config(n, Config::default())
    }

    pub fn with_config(n: usize, config: Config) -> Result<DynamicConnectivity, Error> {
        Ok(DynamicConnectivity {
            config,
            lf: LevelForest::new(n, config.sample_budget, config.seed)?,
            global: Mutex::new(()),
        })
    }

    pub fn config(&self) -> Config {
        self.config
    }

    pub fn vertex_count(&self) -> usize {
        self.lf.vertex_count()
    }

    pub fn levels(&self) -> &LevelForest {
        &self.lf
    }

    pub fn forest(&self, level: usize) -> &EulerTour {
        self.lf.forest(level)
    }

    pub fn states(&self) -> &StateMap {
        self.lf.states()
    }

    pub fn stats(&self) -> Stats {
        self.lf.stats()
    }

    fn f0(&self) -> &EulerTour {
        self.lf.forest(0)
    }

    fn edge(&self, u: Vertex, v: Vertex) -> Result<Edge, Error> {
        let n = self.vertex_count();
        for x in [u, v] {
            if x as usize >= n {
                return Err(Error::VertexOutOfRange { vertex: x, n });
            }
        }
        Edge::new(u, v)
    }

    // ---- queries ----

    pub fn connected(&self, u: Vertex, v: Vertex) -> Result<bool, Error> {
        Ok(self.connected_traced(u, v)?.connected)
    }

    pub fn connected_traced(&self, u: Vertex, v: Vertex) -> Result<ReadTrace, Error> {
        let n = self.vertex_count();
        for x in [u, v] {
            if x as usize >= n {
                return Err(Error::VertexOutOfRange { vertex: x, n });
            }
        }
        if self.config.variant == Variant::Fine && u != v {
            let locks = self.lock_components(u, v);
            let connected = locks.held().len() == 1;
            return Ok(ReadTrace { connected, attempts: 1 });
        }
        Ok(self.f0().connected_traced(u, v))
    }

    // ---- updates ----

    pub fn add_edge(&self, u: Vertex, v: Vertex) -> Result<AddOutcome, Error> {
        let e = self.edge(u, v)?;
        Ok(match self.config.variant {
            Variant::Full => self.add_full(e),
            Variant::Coarse => {
                let _g = self.global_lock();
                self.add_locked(e)
            }
            _ => self.add_locked(e),
        })
    }

    pub fn remove_edge(&self, u: Vertex, v: Vertex) -> Result<RemoveOutcome, Error> {
        let e = self.edge(u, v)?;
        Ok(match self.config.variant {
            Variant::Full => self.remove_full(e),
            Variant::Coarse => {
                let _g = self.global_lock();
                self.remove_locked(e)
            }
            _ => self.remove_locked(e),
        })
    }

    fn global_lock(&self) -> parking_lot::MutexGuard<'_, ()> {
        if let Some(g) = self.global.try_lock() {
            return g;
        }
        let start = std::time::Instant::now();
        let g = self.global.lock();
        crate::stats::record_lock_wait(start.elapsed());
        g
    }

    /// Locks the F_0 sinks of `u` and `v` in id order. One lock when they
    /// share a component. The returned set releases on drop.
    pub fn lock_components(&self, u: Vertex, v: Vertex) -> LockSet<'_> {
        let f0 = self.f0();
        let backoff = crossbeam_utils::Backoff::new();
        loop {
            let ru = f0.find_root(u).0;
            let rv = f0.find_root(v).0;
            let (a, b) = if ru <= rv { (ru, rv) } else { (rv, ru) };
            f0.lock_node(a);
            if b != a && !f0.try_lock_node(b) {
                // Never wait while holding a lock.
                unsafe { f0.unlock_node(a) };
                f0.lock_node(b);
                unsafe { f0.unlock_node(b) };
                backoff.snooze();
                continue;
            }
            let mut locks = LockSet::new(f0);
            locks.push_locked(a);
            if b != a {
                locks.push_locked(b);
            }
            let still_roots = f0.parent(a) == NIL && f0.parent(b) == NIL;
            if still_roots && f0.find_root(u).0 == ru && f0.find_root(v).0 == rv {
                return locks;
            }
            drop(locks);
            backoff.spin();
        }
    }

    // ---- lock-based variants ----

    fn add_locked(&self, e: Edge) -> AddOutcome {
        let mut locks = self.lock_components(e.u(), e.v());
        if self.states().get(e).is_some() {
            return AddOutcome::Present;
        }
        if locks.held().len() == 2 {
            self.lf.insert_spanning(e, &mut locks);
            self.states().insert_locked(e, EdgeState::spanning(0));
            AddOutcome::Spanning
        } else {
            self.states().insert_locked(e, EdgeState::non_spanning(0));
            self.f0().add_info(e);
            AddOutcome::NonSpanning
        }
    }

    fn remove_locked(&self, e: Edge) -> RemoveOutcome {
        let mut locks = self.lock_components(e.u(), e.v());
        match self.states().get(e) {
            None => RemoveOutcome::Absent,
            Some(s) if s.is(Status::NonSpanning) => {
                self.states().remove(e);
                self.lf.forest(s.level()).remove_info(e);
                RemoveOutcome::NonSpanning
            }
            Some(s) => {
                debug_assert!(s.is(Status::Spanning), "unexpected {s:?} under lock");
                let guard = epoch::pin();
                let r = self.lf.remove_spanning(e, s.level(), &mut locks, &guard);
                self.states().remove(e);
                RemoveOutcome::Spanning { replaced: r.is_some() }
            }
        }
    }

    // ---- full protocol ----

    fn add_full(&self, e: Edge) -> AddOutcome {
        let states = self.states();
        let initial = loop {
            let fresh = EdgeState::fresh_initial();
            match states.put_if_absent(e, fresh) {
                None => break fresh,
                Some(p) if p.is(Status::Initial) => break p,
                Some(p) if p.is(Status::NonSpanning) => return AddOutcome::Present,
                Some(_) => {
                    // A spanning edge may sit between its removal's final
                    // unlink and its state removal; wait for the lock holder.
                    drop(self.lock_components(e.u(), e.v()));
                    if states.get(e).is_some() {
                        return AddOutcome::Present;
                    }
                }
            }
        };
        loop {
            let s = states.get(e);
            if s != Some(initial) {
                if s.is_some_and(|s| s.is(Status::InProgress)) {
                    drop(self.lock_components(e.u(), e.v()));
                }
                return self.outcome_of(e);
            }
            if self.f0().connected(e.u(), e.v()) {
                if let Some(out) = self.try_add_non_spanning(e, initial) {
                    return out;
                }
            } else {
                return self.blocking_add(e, initial);
            }
        }
    }

    /// How an edge completed by some other thread ended up.
    fn outcome_of(&self, e: Edge) -> AddOutcome {
        match self.states().get(e) {
            Some(s) if s.is(Status::NonSpanning) => AddOutcome::NonSpanning,
            Some(s) if s.is(Status::Spanning) => AddOutcome::Spanning,
            _ => AddOutcome::Present,
        }
    }

    /// Lock-free attempt; `None` means the caller must retry.
    fn try_add_non_spanning(&self, e: Edge, s: EdgeState) -> Option<AddOutcome> {
        let f0 = self.f0();
        let states = self.states();
        f0.add_info(e);
        f0.hooks.fire(HookPoint::AddInfoPublished);
        {
            let guard = &epoch::pin();
            let root = f0.find_root_node(f0.vertex_node(e.u())).0;
            let op = f0.removal_slot(root).load(Ordering::SeqCst, guard);
            f0.hooks.fire(HookPoint::AddRemovalRead);
            // A pending descriptor is treated as absent.
            if let Some(op) = unsafe { op.as_ref() }.filter(|op| op.is_open()) {
                if op.can_be_replacement(f0, e) {
                    if op.propose(states, e, s) {
                        f0.hooks.fire(HookPoint::AddProposed);
                        f0.remove_info(e);
                        states.cas(e, s, EdgeState::spanning(0));
                        return Some(AddOutcome::Spanning);
                    } else if op.slot() == Slot::Closed {
                        f0.remove_info(e);
                        return Some(self.blocking_add(e, s));
                    }
                }
            }
        }
        if f0.connected(e.u(), e.v()) && states.cas(e, s, EdgeState::non_spanning(0)) {
            return Some(AddOutcome::NonSpanning);
        }
        f0.remove_info(e);
        None
    }

    fn blocking_add(&self, e: Edge, s: EdgeState) -> AddOutcome {
        let f0 = self.f0();
        let states = self.states();
        f0.hooks.fire(HookPoint::BlockingAddStart);
        let mut locks = self.lock_components(e.u(), e.v());
        if states.get(e) != Some(s) {
            return self.outcome_of(e);
        }
        if locks.held().len() == 2 {
            if !states.cas(e, s, EdgeState::in_progress()) {
                return self.outcome_of(e);
            }
            self.lf.insert_spanning(e, &mut locks);
            states.cas(e, EdgeState::in_progress(), EdgeState::spanning(0));
            AddOutcome::Spanning
        } else {
            f0.add_info(e);
            if !states.cas(e, s, EdgeState::non_spanning(0)) {
                f0.remove_info(e);
                return self.outcome_of(e);
            }
            AddOutcome::NonSpanning
        }
    }

    fn remove_full(&self, e: Edge) -> RemoveOutcome {
        loop {
            let Some(s) = self.states().get(e) else { return RemoveOutcome::Absent };
            match s.status() {
                // Linearized before the concurrent addition.
                Status::Initial => return RemoveOutcome::Absent,
                Status::NonSpanning => {
                    if self.try_remove_non_spanning(e, s) {
                        return RemoveOutcome::NonSpanning;
                    }
                }
                Status::Spanning | Status::InProgress => {
                    if let Some(out) = self.blocking_remove(e) {
                        return out;
                    }
                }
            }
        }
    }

    fn try_remove_non_spanning(&self, e: Edge, s: EdgeState) -> bool {
        if self.states().remove_if(e, s) {
            self.lf.forest(s.level()).remove_info(e);
            true
        } else {
            false
        }
    }

    /// `None` when the edge turned non-spanning and removal must retry.
    fn blocking_remove(&self, e: Edge) -> Option<RemoveOutcome> {
        let mut locks = self.lock_components(e.u(), e.v());
        let s = self.states().get(e)?;
        match s.status() {
            Status::Initial => Some(RemoveOutcome::Absent),
            Status::NonSpanning => {
                self.try_remove_non_spanning(e, s).then_some(RemoveOutcome::NonSpanning)
            }
            Status::Spanning => {
                let guard = epoch::pin();
                let r = self.lf.remove_spanning(e, s.level(), &mut locks, &guard);
                self.states().remove(e);
                Some(RemoveOutcome::Spanning { replaced: r.is_some() })
            }
            Status::InProgress => unreachable!("IN_PROGRESS observed under the component lock"),
        }
    }

    // ---- test support ----

    /// Installs a pause-point callback on the F_0 paths.
    #[cfg(feature = "hooks")]
    pub fn set_hook(&self, f: Option<crate::hooks::HookFn>) {
        self.f0().set_hook(f);
    }
}
