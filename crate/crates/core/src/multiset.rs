//! Lock-free bag of edges.
//!
//! A singly linked list with insertion at the head. Removal first marks the
//! victim's `next` pointer (tag 1), then unlinks it; traversals unlink marked
//! entries they pass. Inserts never happen behind the head, so a traversal
//! that follows a frozen `next` of a deleted entry still reaches every older
//! entry that has not been deleted.

use std::sync::atomic::{AtomicUsize, Ordering};

use crossbeam_epoch::{self as epoch, Atomic, Guard, Owned, Shared};

use crate::edge::Edge;

struct Entry {
    edge: Edge,
    next: Atomic<Entry>,
}

#[derive(Default)]
pub struct EdgeMultiset {
    head: Atomic<Entry>,
    len: AtomicUsize,
}

impl EdgeMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, edge: Edge) {
        let guard = &epoch::pin();
        let mut entry = Owned::new(Entry { edge, next: Atomic::null() });
        let mut head = self.head.load(Ordering::Acquire, guard);
        loop {
            entry.next.store(head, Ordering::Relaxed);
            match self.head.compare_exchange(
                head,
                entry,
                Ordering::SeqCst,
                Ordering::Acquire,
                guard,
            ) {
                Ok(_) => break,
                Err(err) => {
                    head = err.current;
                    entry = err.new;
                }
            }
        }
        self.len.fetch_add(1, Ordering::SeqCst);
    }

    /// Removes one copy of `edge`; false if none was present.
    pub fn remove_one(&self, edge: Edge) -> bool {
        let guard = &epoch::pin();
        'restart: loop {
            let mut prev = &self.head;
            let mut cur = prev.load(Ordering::Acquire, guard);
            while let Some(node) = unsafe { cur.as_ref() } {
                let next = node.next.load(Ordering::Acquire, guard);
                if next.tag() == 1 {
                    if !unlink(prev, cur, next, guard) {
                        continue 'restart;
                    }
                    cur = next.with_tag(0);
                    continue;
                }
                if node.edge == edge {
                    if node
                        .next
                        .compare_exchange(
                            next,
                            next.with_tag(1),
                            Ordering::SeqCst,
                            Ordering::Acquire,
                            guard,
                        )
                        .is_err()
                    {
                        continue;
                    }
                    self.len.fetch_sub(1, Ordering::SeqCst);
                    unlink(prev, cur, next, guard);
                    return true;
                }
                prev = &node.next;
                cur = next;
            }
            return false;
        }
    }

    /// Calls `visit` for each live entry. Entries present for the whole
    /// call are visited at least once.
    pub fn for_each(&self, mut visit: impl FnMut(Edge)) {
        let guard = &epoch::pin();
        let mut cur = self.head.load(Ordering::Acquire, guard);
        while let Some(node) = unsafe { cur.as_ref() } {
            let next = node.next.load(Ordering::Acquire, guard);
            if next.tag() == 0 {
                visit(node.edge);
            }
            cur = next.with_tag(0);
        }
    }

    pub fn snapshot(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        self.for_each(|e| out.push(e));
        out
    }

    /// Number of live copies; exact at quiescence.
    pub fn len(&self) -> usize {
        self.len.load(Ordering::SeqCst)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count(&self, edge: Edge) -> usize {
        let mut n = 0;
        self.for_each(|e| n += usize::from(e == edge));
        n
    }
}

/// Swings `prev` past the marked `cur`. Retires `cur` on success.
fn unlink<'g>(
    prev: &Atomic<Entry>,
    cur: Shared<'g, Entry>,
    next: Shared<'g, Entry>,
    guard: &'g Guard,
) -> bool {
    let ok = prev
        .compare_exchange(cur, next.with_tag(0), Ordering::SeqCst, Ordering::Acquire, guard)
        .is_ok();
    if ok {
        unsafe { guard.defer_destroy(cur) };
    }
    ok
}

impl Drop for EdgeMultiset {
    fn drop(&mut self) {
        unsafe {
            let guard = epoch::unprotected();
            let mut cur = self.head.load(Ordering::Relaxed, guard);
            while !cur.is_null() {
                let next = cur.deref().next.load(Ordering::Relaxed, guard);
                drop(cur.into_owned());
                cur = next.with_tag(0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn e(a: u32, b: u32) -> Edge {
        Edge::new(a, b).unwrap()
    }

    #[test]
    fn multiplicity() {
        let m = EdgeMultiset::new();
        m.add(e(0, 1));
        m.add(e(0, 1));
        assert!(m.remove_one(e(0, 1)));
        assert_eq!(m.count(e(0, 1)), 1);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn remove_on_empty() {
        let m = EdgeMultiset::new();
        assert!(!m.remove_one(e(0, 1)));
        assert!(m.is_empty());
    }

    #[test]
    fn remove_middle_keeps_order_of_rest() {
        let m = EdgeMultiset::new();
        for i in 1..6 {
            m.add(e(0, i));
        }
        assert!(m.remove_one(e(0, 3)));
        assert_eq!(m.snapshot(), vec![e(0, 5), e(0, 4), e(0, 2), e(0, 1)]);
    }

    #[test]
    fn sentinel_survives_concurrent_churn() {
        let m = Arc::new(EdgeMultiset::new());
        m.add(e(100, 101));
        for i in 0..200 {
            m.add(e(0, i + 1));
        }
        let churn = {
            let m = Arc::clone(&m);
            std::thread::spawn(move || {
                for round in 0..50u32 {
                    for i in 0..200 {
                        m.remove_one(e(0, i + 1));
                        m.add(e(1, 2 + (i + round) % 97));
                    }
                }
            })
        };
        for _ in 0..200 {
            let mut seen = false;
            m.for_each(|x| seen |= x == e(100, 101));
            assert!(seen);
        }
        churn.join().unwrap();
    }
}
