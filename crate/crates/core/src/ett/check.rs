//! Quiescent structural audits and tour inspection.

use std::collections::HashSet;

use super::{EulerTour, NodeId, NIL};
use crate::edge::{Edge, Vertex};

/// One element of an Euler tour sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TourItem {
    Vertex(Vertex),
    Arc(Vertex, Vertex),
}

impl EulerTour {
    fn inorder(&self, root: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        let mut cur = root;
        while cur != NIL || !stack.is_empty() {
            while cur != NIL {
                stack.push(cur);
                cur = self.left(cur);
            }
            let x = stack.pop().unwrap();
            out.push(x);
            cur = self.right(x);
        }
        out
    }

    fn item(&self, x: NodeId) -> TourItem {
        if self.is_vertex_node(x) {
            TourItem::Vertex(x)
        } else {
            let (a, b) = self.arc_of(x);
            TourItem::Arc(a, b)
        }
    }

    /// The tour sequence of `v`'s tree. Writer must be quiescent.
    pub fn tour_of(&self, v: Vertex) -> Vec<TourItem> {
        self.inorder(self.tree_root_of(v)).into_iter().map(|x| self.item(x)).collect()
    }

    /// Sorted vertices of `v`'s tree. Writer must be quiescent.
    pub fn component_of(&self, v: Vertex) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self
            .inorder(self.tree_root_of(v))
            .into_iter()
            .filter(|&x| self.is_vertex_node(x))
            .collect();
        out.sort_unstable();
        out
    }

    /// Mean depth over all live nodes (root depth 0).
    pub fn mean_depth(&self) -> f64 {
        let mut roots = HashSet::new();
        for v in 0..self.n {
            roots.insert(self.tree_root(v));
        }
        let (mut total, mut nodes) = (0u64, 0u64);
        for r in roots {
            let mut stack = vec![(r, 0u64)];
            while let Some((x, d)) = stack.pop() {
                total += d;
                nodes += 1;
                for c in [self.left(x), self.right(x)] {
                    if c != NIL {
                        stack.push((c, d + 1));
                    }
                }
            }
        }
        total as f64 / nodes as f64
    }

    /// Full audit of a quiescent forest: heap order, link symmetry,
    /// aggregates, flag soundness, acyclicity, and tour validity.
    pub fn check_structure(&self) -> Result<(), String> {
        let live_arcs: HashSet<NodeId> =
            self.arcs.iter().flat_map(|r| [r.value().0, r.value().1]).collect();
        let live = self.n as usize + live_arcs.len();
        let mut seen: HashSet<NodeId> = HashSet::with_capacity(live);
        let mut roots = Vec::new();
        for v in 0..self.n {
            let r = self.tree_root(v);
            if !roots.contains(&r) && !seen.contains(&r) {
                roots.push(r);
                let nodes = self.inorder(r);
                for &x in &nodes {
                    if !seen.insert(x) {
                        return Err(format!("node {x} reachable from two roots"));
                    }
                }
            }
        }
        if seen.len() != live {
            return Err(format!("{} nodes in trees, {} live", seen.len(), live));
        }
        for &x in &live_arcs {
            if !seen.contains(&x) {
                return Err(format!("live arc {x} not in any tree"));
            }
        }
        for &r in &roots {
            if self.parent(r) != NIL {
                return Err(format!("root {r} has parent {}", self.parent(r)));
            }
            self.check_subtree(r)?;
            self.check_tour(r)?;
        }
        for &x in &seen {
            let mut cur = x;
            let mut steps = 0;
            while cur != NIL {
                steps += 1;
                if steps > live + 1 {
                    return Err(format!("parent chain from {x} does not terminate"));
                }
                cur = self.parent(cur);
            }
        }
        Ok(())
    }

    /// Returns whether any multiset in the subtree is non-empty.
    fn check_subtree(&self, root: NodeId) -> Result<bool, String> {
        // Post-order over an explicit stack.
        let mut stack = vec![(root, false)];
        let mut nonempty: std::collections::HashMap<NodeId, bool> = Default::default();
        while let Some((x, done)) = stack.pop() {
            let (l, r) = (self.left(x), self.right(x));
            if !done {
                stack.push((x, true));
                for c in [l, r] {
                    if c != NIL {
                        if self.parent(c) != x {
                            return Err(format!("child {c} of {x} has parent {}", self.parent(c)));
                        }
                        if self.key(c) >= self.key(x) {
                            return Err(format!("heap order violated at {x} -> {c}"));
                        }
                        stack.push((c, false));
                    }
                }
                continue;
            }
            let size = u32::from(self.is_vertex_node(x)) + self.subtree_size(l) + self.subtree_size(r);
            let count = 1 + self.subtree_count(l) + self.subtree_count(r);
            let tree = self.tree_mark(x) || self.has_tree(l) || self.has_tree(r);
            if self.subtree_size(x) != size || self.subtree_count(x) != count {
                return Err(format!("stale size/count at {x}"));
            }
            if self.has_tree(x) != tree {
                return Err(format!("has_tree at {x} is {}, expected {tree}", self.has_tree(x)));
            }
            let any = self.owns_edges(x)
                || [l, r].iter().any(|&c| c != NIL && nonempty[&c]);
            if any && !self.has_nontree(x) {
                return Err(format!("has_nontree false at {x} over a non-empty multiset"));
            }
            nonempty.insert(x, any);
        }
        Ok(nonempty[&root])
    }

    fn check_tour(&self, root: NodeId) -> Result<(), String> {
        let items: Vec<TourItem> = self.inorder(root).into_iter().map(|x| self.item(x)).collect();
        let arcs: Vec<(Vertex, Vertex)> = items
            .iter()
            .filter_map(|it| match *it {
                TourItem::Arc(a, b) => Some((a, b)),
                TourItem::Vertex(_) => None,
            })
            .collect();
        let vertices: Vec<Vertex> = items
            .iter()
            .filter_map(|it| match *it {
                TourItem::Vertex(v) => Some(v),
                TourItem::Arc(..) => None,
            })
            .collect();
        if vertices.len() != arcs.len() / 2 + 1 || arcs.len() % 2 != 0 {
            return Err(format!("{} vertices with {} arcs", vertices.len(), arcs.len()));
        }
        let k = arcs.len();
        for i in 0..k {
            let (_, head) = arcs[i];
            let (tail, _) = arcs[(i + 1) % k];
            if head != tail {
                return Err(format!("tour breaks between {:?} and {:?}", arcs[i], arcs[(i + 1) % k]));
            }
        }
        let mut dirs = HashSet::new();
        for &(a, b) in &arcs {
            if !dirs.insert((a, b)) {
                return Err(format!("arc {a}->{b} repeated"));
            }
            let e = Edge::new(a, b).map_err(|e| e.to_string())?;
            if !self.arcs.contains_key(&e) {
                return Err(format!("arc {a}->{b} without an edge record"));
            }
        }
        for &(a, b) in &arcs {
            if !dirs.contains(&(b, a)) {
                return Err(format!("arc {a}->{b} has no reverse"));
            }
        }
        if k > 0 {
            // Each vertex node sits right after an arc entering it.
            let mut last_head = arcs[k - 1].1;
            for it in &items {
                match *it {
                    TourItem::Arc(_, b) => last_head = b,
                    TourItem::Vertex(v) if v != last_head => {
                        return Err(format!("vertex {v} placed while the walk is at {last_head}"));
                    }
                    TourItem::Vertex(_) => {}
                }
            }
        }
        let distinct: HashSet<Vertex> = vertices.iter().copied().collect();
        if distinct.len() != vertices.len() {
            return Err("vertex node repeated".into());
        }
        Ok(())
    }
}
