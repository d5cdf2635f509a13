//! Recorded concurrent histories and an exhaustive linearizability check
//! for short ones.
//!
//! Updates are checked as idempotent void operations: a concurrent helper
//! may complete another thread's addition, so only query results constrain
//! the linearization.

use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;
use std::time::Instant;

use dyncon_core::Vertex;

use crate::oracle::OracleGraph;
use crate::ops::Op;

/// Exhaustive search is exponential; longer histories are rejected.
pub const MAX_CHECKED_OPS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistoryRecord {
    pub thread: usize,
    pub op: Op,
    /// Query result; `None` for updates.
    pub result: Option<bool>,
    /// Monotone timestamps, `invoke <= response`.
    pub invoke: u64,
    pub response: u64,
}

/// Nanoseconds since the first call in this process.
pub fn now() -> u64 {
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_nanos() as u64
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("history has {0} operations; at most {MAX_CHECKED_OPS} can be checked")]
    TooLong(usize),
    #[error("no linearization exists")]
    NotLinearizable,
}

/// Searches for a sequential order consistent with real time and the
/// graph specification. Returns the order as indices into `history`.
pub fn check_linearizable(
    n: usize,
    initial: &[(Vertex, Vertex)],
    history: &[HistoryRecord],
) -> Result<Vec<usize>, CheckError> {
    if history.len() > MAX_CHECKED_OPS {
        return Err(CheckError::TooLong(history.len()));
    }
    let start: BTreeSet<(Vertex, Vertex)> = initial.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    let mut order = Vec::with_capacity(history.len());
    let mut seen = HashSet::new();
    if search(n, history, 0, &start, &mut order, &mut seen) {
        Ok(order)
    } else {
        Err(CheckError::NotLinearizable)
    }
}

fn search(
    n: usize,
    h: &[HistoryRecord],
    done: u32,
    edges: &BTreeSet<(Vertex, Vertex)>,
    order: &mut Vec<usize>,
    seen: &mut HashSet<(u32, Vec<(Vertex, Vertex)>)>,
) -> bool {
    if done.count_ones() as usize == h.len() {
        return true;
    }
    if !seen.insert((done, edges.iter().copied().collect())) {
        return false;
    }
    // Only operations invoked before every pending response may go next.
    let horizon = (0..h.len()).filter(|&i| done & (1 << i) == 0).map(|i| h[i].response).min().unwrap();
    for i in 0..h.len() {
        if done & (1 << i) != 0 || h[i].invoke > horizon {
            continue;
        }
        let mut next = edges.clone();
        let ok = match h[i].op {
            Op::Add(u, v) => {
                next.insert((u.min(v), u.max(v)));
                true
            }
            Op::Remove(u, v) => {
                next.remove(&(u.min(v), u.max(v)));
                true
            }
            Op::Connected(u, v) => {
                let mut g = OracleGraph::new(n);
                for &(a, b) in edges {
                    g.add(a, b);
                }
                h[i].result == Some(g.connected(u, v))
            }
        };
        if ok {
            order.push(i);
            if search(n, h, done | (1 << i), &next, order, seen) {
                return true;
            }
            order.pop();
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(thread: usize, op: Op, result: Option<bool>, invoke: u64, response: u64) -> HistoryRecord {
        HistoryRecord { thread, op, result, invoke, response }
    }

    #[test]
    fn overlapping_read_may_see_either_state() {
        let h = [rec(0, Op::Add(0, 1), None, 0, 10), rec(1, Op::Connected(0, 1), Some(true), 5, 6)];
        assert!(check_linearizable(2, &[], &h).is_ok());
        let h = [rec(0, Op::Add(0, 1), None, 0, 10), rec(1, Op::Connected(0, 1), Some(false), 5, 6)];
        assert!(check_linearizable(2, &[], &h).is_ok());
    }

    #[test]
    fn stale_read_after_completion_is_rejected() {
        let h = [rec(0, Op::Add(0, 1), None, 0, 1), rec(1, Op::Connected(0, 1), Some(false), 2, 3)];
        assert_eq!(check_linearizable(2, &[], &h), Err(CheckError::NotLinearizable));
    }

    #[test]
    fn reads_cannot_go_back_in_time() {
        // Two sequential reads by one thread observe remove then re-add in
        // the wrong order.
        let h = [
            rec(0, Op::Remove(0, 1), None, 0, 100),
            rec(1, Op::Connected(0, 1), Some(false), 1, 2),
            rec(1, Op::Connected(0, 1), Some(true), 3, 4),
        ];
        assert_eq!(check_linearizable(2, &[(0, 1)], &h), Err(CheckError::NotLinearizable));
    }

    #[test]
    fn rejects_long_histories() {
        let h = vec![rec(0, Op::Connected(0, 0), Some(true), 0, 1); MAX_CHECKED_OPS + 1];
        assert_eq!(check_linearizable(1, &[], &h), Err(CheckError::TooLong(MAX_CHECKED_OPS + 1)));
    }
}
