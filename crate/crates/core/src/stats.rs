//! Engine counters and per-thread lock-wait accounting.

use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering::Relaxed};
use std::time::Duration;

thread_local! {
    static LOCK_WAIT_NS: Cell<u64> = const { Cell::new(0) };
}

pub(crate) fn record_lock_wait(d: Duration) {
    LOCK_WAIT_NS.with(|c| c.set(c.get() + d.as_nanos() as u64));
}

/// Time the calling thread spent blocked on component locks since the
/// previous call.
pub fn take_thread_lock_wait() -> Duration {
    Duration::from_nanos(LOCK_WAIT_NS.with(|c| c.replace(0)))
}

#[derive(Default)]
pub(crate) struct Counters {
    pub spanning_removals: AtomicU64,
    pub replacements: AtomicU64,
    pub sampled_replacements: AtomicU64,
    pub promotions: AtomicU64,
    pub examined: AtomicU64,
}

impl Counters {
    pub fn bump(c: &AtomicU64, by: u64) {
        c.fetch_add(by, Relaxed);
    }

    pub fn snapshot(&self) -> Stats {
        Stats {
            spanning_removals: self.spanning_removals.load(Relaxed),
            replacements: self.replacements.load(Relaxed),
            sampled_replacements: self.sampled_replacements.load(Relaxed),
            promotions: self.promotions.load(Relaxed),
            examined: self.examined.load(Relaxed),
        }
    }
}

/// Replacement-search counters accumulated since construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub spanning_removals: u64,
    /// Removals that found a replacement edge.
    pub replacements: u64,
    /// Replacements found on the sampling path.
    pub sampled_replacements: u64,
    /// Single-level increments of edge levels, spanning and non-spanning.
    pub promotions: u64,
    /// Edges inspected by sampling and scans.
    pub examined: u64,
}
