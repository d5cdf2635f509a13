//! Concurrent dynamic connectivity.
//!
//! A level structure of Euler tour trees answers `connected` without locks.
//! Spanning-forest changes lock only the affected components, and
//! non-spanning edges move through an atomic per-edge state machine.

mod connectivity;
mod edge;
pub mod ett;
mod hooks;
mod invariants;
mod level;
mod multiset;
mod removal;
mod state;
mod stats;

pub use connectivity::{AddOutcome, Config, DynamicConnectivity, RemoveOutcome, Variant};
pub use edge::{Edge, Error, Vertex};
#[cfg(feature = "hooks")]
pub use ett::ReadCheck;
pub use ett::{EulerTour, LockSet, NodeId, ReadTrace, TourItem, NIL};
#[cfg(feature = "hooks")]
pub use hooks::HookFn;
pub use hooks::HookPoint;
pub use invariants::InvariantViolation;
pub use level::{LevelForest, DEFAULT_SAMPLE_BUDGET};
pub use multiset::EdgeMultiset;
pub use removal::{RemovalOp, Slot};
pub use state::{transition_allowed, EdgeState, StateMap, Status, Transition, TransitionKind};
pub use stats::{take_thread_lock_wait, Stats};
