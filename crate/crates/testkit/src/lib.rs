//! Test harnesses for the connectivity engine: a brute-force oracle,
//! sequential equivalence with reproducer minimization, phase-based
//! concurrent stress, exhaustive linearizability checks of short histories
//! and scripted interleavings.

pub mod history;
pub mod oracle;
pub mod ops;
pub mod scripted;
pub mod sequential;
pub mod stress;

pub use history::{check_linearizable, CheckError, HistoryRecord};
pub use oracle::OracleGraph;
pub use ops::{edge_pool, Answer, Op, OpGen};
pub use scripted::{run_scripted, ScriptError, Verdict, SCHEDULES};
pub use sequential::{run_sequential_equivalence, Divergence, SeqConfig, SeqReport};
pub use stress::{
    run_history_stress, run_phase_stress, run_read_stress, PhaseConfig, PhaseReport, ReadStressConfig,
    StressError,
};
