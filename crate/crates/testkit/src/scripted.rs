//! Deterministic interleavings driven through the engine's pause points.

use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use dyncon_core::{
    transition_allowed, Config, DynamicConnectivity, Edge, EulerTour, HookPoint, ReadCheck, Status,
    TransitionKind,
};

use crate::history::{check_linearizable, HistoryRecord};
use crate::ops::Op;

pub const SCHEDULES: [&str; 6] = [
    "reader-full-recheck",
    "reader-truncated-recheck",
    "replacement-publish-first",
    "replacement-read-first",
    "replacement-closed-slot",
    "replacement-occupied-removed",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub schedule: &'static str,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScriptError {
    #[error("unknown schedule `{0}`")]
    Unknown(String),
    #[error("{0} never reached {1:?}")]
    Stuck(String, HookPoint),
}

pub fn run_scripted(name: &str) -> Result<Verdict, ScriptError> {
    match name {
        "reader-full-recheck" => Ok(reader_schedule(ReadCheck::Full)),
        "reader-truncated-recheck" => Ok(reader_schedule(ReadCheck::Truncated)),
        "replacement-publish-first" => replacement_race(Case::PublishFirst),
        "replacement-read-first" => replacement_race(Case::ReadFirst),
        "replacement-closed-slot" => replacement_race(Case::ClosedSlot),
        "replacement-occupied-removed" => replacement_race(Case::OccupiedRemoved),
        other => Err(ScriptError::Unknown(other.to_string())),
    }
}

// ---- reader counterexample ----

/// Result of the reader schedule plus the history it induces.
pub struct ReaderRun {
    pub connected: bool,
    pub history: Vec<HistoryRecord>,
}

/// Replays the 11-step reader/writer schedule on raw parent links
/// u→w, v→w, w→r. Writer steps run inside the reader's pause points.
pub fn reader_schedule_run(check: ReadCheck) -> ReaderRun {
    const U: u32 = 0;
    const V: u32 = 1;
    const W: u32 = 2;
    const R: u32 = 3;
    let t = Arc::new(EulerTour::new(4, 0).expect("four vertices"));
    t.raw_set_parent(U, W);
    t.raw_set_parent(V, W);
    t.raw_set_parent(W, R);
    let counts = Arc::new(Mutex::new((0u32, 0u32)));
    let (tc, cc) = (t.clone(), counts.clone());
    t.set_hook(Some(Arc::new(move |p: HookPoint| {
        let mut c = cc.lock().unwrap();
        match p {
            HookPoint::FindRootStart => {
                c.0 += 1;
                if c.0 == 4 {
                    // Step 10: the writer finishes the second removal.
                    tc.raw_bump(R);
                    tc.raw_set_parent(W, u32::MAX);
                }
            }
            HookPoint::FindRootBeforeVersion => {
                c.1 += 1;
                match c.1 {
                    1 => {
                        // Steps 2-3: remove (w, r), then announce re-adding it.
                        tc.raw_set_parent(W, u32::MAX);
                        tc.raw_bump(R);
                        tc.raw_bump(W);
                        tc.raw_bump(R);
                        tc.raw_bump(W);
                    }
                    2 => {
                        // Steps 6-7: finish the addition, announce a removal.
                        tc.raw_set_parent(W, R);
                        tc.raw_bump(W);
                    }
                    _ => {}
                }
            }
            _ => {}
        }
    })));
    let connected = t.connected_with(U, V, check).connected;
    t.set_hook(None);
    // Timestamps are step numbers; the reader spans the whole schedule.
    let rec = |op, result, invoke, response| HistoryRecord { thread: 0, op, result, invoke, response };
    let history = vec![
        rec(Op::Connected(U, V), Some(connected), 1, 11),
        rec(Op::Remove(W, R), None, 2, 2),
        rec(Op::Add(W, R), None, 3, 6),
        rec(Op::Remove(W, R), None, 7, 10),
    ];
    ReaderRun { connected, history }
}

fn reader_schedule(check: ReadCheck) -> Verdict {
    let run = reader_schedule_run(check);
    let linearizable = check_linearizable(4, &[(0, 2), (1, 2), (2, 3)], &run.history).is_ok();
    let (schedule, want) = match check {
        ReadCheck::Full => ("reader-full-recheck", true),
        ReadCheck::Truncated => ("reader-truncated-recheck", false),
    };
    Verdict {
        schedule,
        expected: format!("connected={want}, linearizable={want}"),
        observed: format!("connected={}, linearizable={linearizable}", run.connected),
        pass: run.connected == want && linearizable == want,
    }
}

// ---- gates ----

#[derive(Default)]
struct GateState {
    arrived: HashMap<(String, HookPoint), u32>,
    armed: HashMap<(String, HookPoint), bool>,
}

/// Per-thread pause points keyed by thread name.
#[derive(Default)]
struct Gates {
    state: Mutex<GateState>,
    cv: Condvar,
}

const WAIT: Duration = Duration::from_secs(10);

impl Gates {
    fn arm(&self, thread: &str, p: HookPoint) {
        self.state.lock().unwrap().armed.insert((thread.to_string(), p), true);
    }

    fn release(&self, thread: &str, p: HookPoint) {
        self.state.lock().unwrap().armed.insert((thread.to_string(), p), false);
        self.cv.notify_all();
    }

    fn fire(&self, p: HookPoint) {
        let Some(name) = std::thread::current().name().map(str::to_string) else { return };
        let key = (name, p);
        let mut st = self.state.lock().unwrap();
        *st.arrived.entry(key.clone()).or_default() += 1;
        self.cv.notify_all();
        while st.armed.get(&key) == Some(&true) {
            st = self.cv.wait(st).unwrap();
        }
    }

    fn wait_arrived(&self, thread: &str, p: HookPoint) -> Result<(), ScriptError> {
        let key = (thread.to_string(), p);
        let st = self.state.lock().unwrap();
        let (st, res) = self
            .cv
            .wait_timeout_while(st, WAIT, |st| st.arrived.get(&key).copied().unwrap_or(0) == 0)
            .unwrap();
        drop(st);
        if res.timed_out() {
            Err(ScriptError::Stuck(thread.to_string(), p))
        } else {
            Ok(())
        }
    }
}

// ---- replacement races ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Case {
    /// The descriptor is open before the adder reads it.
    PublishFirst,
    /// The adder reads the root's descriptor before it is published.
    ReadFirst,
    /// The adder arrives after the slot was closed without a replacement.
    ClosedSlot,
    /// The slot holds an edge whose state disappeared; a second adder evicts it.
    OccupiedRemoved,
}

fn e(a: u32, b: u32) -> Edge {
    Edge::new(a, b).expect("distinct endpoints")
}

fn spawn<'s, T: Send + 's>(
    s: &'s std::thread::Scope<'s, '_>,
    name: &str,
    f: impl FnOnce() -> T + Send + 's,
) -> std::thread::ScopedJoinHandle<'s, T> {
    std::thread::Builder::new().name(name.to_string()).spawn_scoped(s, f).expect("spawn")
}

/// Path 0-1-2(-3). The remover deletes (0, 1); the adders offer (0, 2)
/// and (0, 3), the only edges that could reconnect vertex 0.
fn replacement_race(case: Case) -> Result<Verdict, ScriptError> {
    use HookPoint::*;
    let d = DynamicConnectivity::with_config(4, Config { sample_budget: 0, ..Config::default() })
        .expect("four vertices");
    for (a, b) in [(0, 1), (1, 2), (2, 3)] {
        d.add_edge(a, b).expect("path edge");
    }
    let gates = Arc::new(Gates::default());
    let g = gates.clone();
    d.set_hook(Some(Arc::new(move |p| g.fire(p))));
    d.states().start_recording();
    let d = &d;
    let remove = move || d.remove_edge(0, 1).expect("edge");
    let add = move |a, b| move || d.add_edge(a, b).expect("edge");

    let script: Result<(), ScriptError> = std::thread::scope(|s| {
        match case {
            Case::PublishFirst => {
                gates.arm("remover", RemovalSlotOpened);
                let r = spawn(s, "remover", remove);
                gates.wait_arrived("remover", RemovalSlotOpened)?;
                spawn(s, "adder", add(0, 2)).join().expect("adder");
                gates.release("remover", RemovalSlotOpened);
                r.join().expect("remover");
            }
            Case::ReadFirst => {
                gates.arm("adder", AddRemovalRead);
                let a = spawn(s, "adder", add(0, 2));
                gates.wait_arrived("adder", AddRemovalRead)?;
                spawn(s, "remover", remove).join().expect("remover");
                gates.release("adder", AddRemovalRead);
                a.join().expect("adder");
            }
            Case::ClosedSlot => {
                gates.arm("remover", RemovalFinalized);
                let r = spawn(s, "remover", remove);
                gates.wait_arrived("remover", RemovalFinalized)?;
                let a = spawn(s, "adder", add(0, 2));
                // The adder sees the closed slot and blocks on the lock.
                gates.wait_arrived("adder", BlockingAddStart)?;
                gates.release("remover", RemovalFinalized);
                r.join().expect("remover");
                a.join().expect("adder");
            }
            Case::OccupiedRemoved => {
                gates.arm("remover", RemovalSlotOpened);
                gates.arm("adder", AddProposed);
                let r = spawn(s, "remover", remove);
                gates.wait_arrived("remover", RemovalSlotOpened)?;
                let a = spawn(s, "adder", add(0, 2));
                gates.wait_arrived("adder", AddProposed)?;
                d.states().force_remove(e(0, 2));
                spawn(s, "adder-2", add(0, 3)).join().expect("second adder");
                gates.release("adder", AddProposed);
                a.join().expect("adder");
                gates.release("remover", RemovalSlotOpened);
                r.join().expect("remover");
            }
        }
        Ok(())
    });
    d.set_hook(None);
    script?;

    let transitions = d.states().take_transitions();
    let bad_arcs: Vec<_> = transitions
        .iter()
        .filter(|t| t.kind != TransitionKind::Forced && !transition_allowed(t))
        .collect();
    let bridging: Vec<_> = d
        .states()
        .snapshot()
        .into_iter()
        .filter(|(x, s)| s.is(Status::NonSpanning) && !d.connected(x.u(), x.v()).unwrap())
        .map(|(x, _)| x)
        .collect();
    let invariants = d.check_invariants();
    let replacement = if case == Case::OccupiedRemoved { e(0, 3) } else { e(0, 2) };
    let status = d.states().get(replacement).map(|s| s.status());
    let reconnected = d.connected(0, 1).unwrap();
    let evicted = case != Case::OccupiedRemoved || d.states().get(e(0, 2)).is_none();
    let schedule = SCHEDULES[2 + case as usize];
    Ok(Verdict {
        schedule,
        expected: format!(
            "{replacement:?} SPANNING, 0 and 1 connected, no bridging NON_SPANNING edge, only diagram arcs"
        ),
        observed: format!(
            "{replacement:?} {status:?}, connected={reconnected}, bridging={bridging:?}, bad arcs={bad_arcs:?}, invariants={invariants:?}"
        ),
        pass: status == Some(Status::Spanning)
            && reconnected
            && evicted
            && bridging.is_empty()
            && bad_arcs.is_empty()
            && invariants.is_ok(),
    })
}
