//! Test-only pause points. Without the `hooks` feature every call compiles
//! to nothing.

/// Named points inside the algorithms where a test harness may block the
/// current thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HookPoint {
    /// `find_root`, before the first parent read.
    FindRootStart,
    /// `find_root`, after observing a null parent and before reading the version.
    FindRootBeforeVersion,
    /// Lock-free add, after the edge info is published.
    AddInfoPublished,
    /// Lock-free add, after reading the root's removal descriptor.
    AddRemovalRead,
    /// Lock-free add, after a successful replacement proposal.
    AddProposed,
    /// Blocking add, before acquiring component locks.
    BlockingAddStart,
    /// Spanning removal, right after the descriptor is published.
    RemovalPublished,
    /// Spanning removal, right after the level-0 slot opens.
    RemovalSlotOpened,
    /// Spanning removal, after the level-0 scan and before finalizing.
    RemovalBeforeFinalize,
    /// Spanning removal, after the slot is finalized.
    RemovalFinalized,
}

#[cfg(feature = "hooks")]
pub type HookFn = std::sync::Arc<dyn Fn(HookPoint) + Send + Sync>;

#[derive(Default)]
pub(crate) struct Hooks {
    #[cfg(feature = "hooks")]
    installed: std::sync::atomic::AtomicBool,
    #[cfg(feature = "hooks")]
    f: parking_lot::RwLock<Option<HookFn>>,
}

impl Hooks {
    #[inline(always)]
    pub(crate) fn fire(&self, _point: HookPoint) {
        #[cfg(feature = "hooks")]
        {
            if !self.installed.load(std::sync::atomic::Ordering::Acquire) {
                return;
            }
            let f = self.f.read().clone();
            if let Some(f) = f {
                f(_point);
            }
        }
    }

    #[cfg(feature = "hooks")]
    pub(crate) fn set(&self, f: Option<HookFn>) {
        let on = f.is_some();
        *self.f.write() = f;
        self.installed.store(on, std::sync::atomic::Ordering::Release);
    }
}
