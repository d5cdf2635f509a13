//! Quiescent audit of the whole level structure.

use crate::connectivity::DynamicConnectivity;
use crate::edge::Edge;
use crate::level::LevelForest;
use crate::state::Status;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invariant violated: {0}")]
pub struct InvariantViolation(pub String);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(InvariantViolation(format!($($fmt)+)));
        }
    };
}

impl LevelForest {
    /// Checks every structural and level invariant. Only meaningful while
    /// no operation is in flight.
    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        let n = self.vertex_count();
        let lmax = self.max_level();
        for i in 0..=lmax {
            self.forest(i)
                .check_structure()
                .map_err(|m| InvariantViolation(format!("F_{i}: {m}")))?;
        }
        let states = self.states().snapshot();
        for &(e, s) in &states {
            let l = s.level();
            ensure!(l <= lmax, "{e:?} has level {l} above {lmax}");
            match s.status() {
                Status::Initial | Status::InProgress => {
                    return Err(InvariantViolation(format!("{e:?} left in {s:?}")));
                }
                Status::Spanning => {
                    for i in 0..=lmax {
                        let f = self.forest(i);
                        ensure!(f.has_tree_edge(e) == (i <= l), "{e:?} {s:?} membership in F_{i}");
                        if i <= l {
                            let marked = f.tree_edge_marked(e) == Some(true);
                            ensure!(marked == (i == l), "{e:?} {s:?} level tag in F_{i}");
                        }
                    }
                }
                Status::NonSpanning => {
                    let f = self.forest(l);
                    ensure!(f.tree_root_of(e.u()) == f.tree_root_of(e.v()), "{e:?} {s:?} spans F_{l} trees");
                    for i in 0..=lmax {
                        let f = self.forest(i);
                        let (cu, cv) = (f.multiset(e.u()).count(e), f.multiset(e.v()).count(e));
                        if i == l {
                            ensure!(cu >= 1 && cv >= 1, "{e:?} {s:?} info missing in F_{i}");
                        } else {
                            ensure!(cu == 0 && cv == 0, "{e:?} {s:?} stray info in F_{i}");
                        }
                    }
                }
            }
        }
        let state_of = |e: Edge| states.binary_search_by_key(&e, |p| p.0).ok().map(|k| states[k].1);
        for i in 0..=lmax {
            let f = self.forest(i);
            for e in f.tree_edges() {
                let ok = state_of(e).is_some_and(|s| s.is(Status::Spanning) && s.level() >= i);
                ensure!(ok, "tree edge {e:?} of F_{i} has state {:?}", state_of(e));
            }
            for x in 0..n as u32 {
                let mut stray = None;
                f.multiset(x).for_each(|e| {
                    let ok = (e.u() == x || e.v() == x)
                        && state_of(e).is_some_and(|s| s.is(Status::NonSpanning) && s.level() == i);
                    if !ok && stray.is_none() {
                        stray = Some(e);
                    }
                });
                ensure!(stray.is_none(), "stray info {:?} at vertex {x} of F_{i}", stray.unwrap());
                let size = f.subtree_size(f.tree_root_of(x)) as usize;
                ensure!(size <= n >> i, "tree of {x} in F_{i} has {size} > {} vertices", n >> i);
            }
        }
        Ok(())
    }
}

impl DynamicConnectivity {
    /// See [`LevelForest::check_invariants`].
    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        self.levels().check_invariants()
    }
}
