//! Concurrent stress with barrier-phase reconciliation.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use dyncon_core::{Config, DynamicConnectivity, Edge, Vertex};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::history::{check_linearizable, now, CheckError, HistoryRecord};
use crate::oracle::OracleGraph;
use crate::ops::{edge_pool, Op, OpGen};

#[derive(Debug, Clone, Copy)]
pub struct PhaseConfig {
    pub threads: usize,
    pub n: usize,
    pub phases: usize,
    pub ops_per_thread: usize,
    pub read_ratio: f64,
    pub engine: Config,
    pub seed: u64,
    /// A phase with no completed operation for this long is a deadlock.
    pub watchdog: Duration,
}

impl PhaseConfig {
    pub fn new(threads: usize, n: usize, phases: usize, ops_per_thread: usize, seed: u64) -> PhaseConfig {
        PhaseConfig {
            threads,
            n,
            phases,
            ops_per_thread,
            read_ratio: 1.0 / 3.0,
            engine: Config { seed, ..Config::default() },
            seed,
            watchdog: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseReport {
    pub phases: usize,
    pub ops: u64,
    pub reads: u64,
    pub first_try_reads: u64,
    pub invariant_sweeps: usize,
    pub elapsed: Duration,
}

impl PhaseReport {
    pub fn first_try_rate(&self) -> f64 {
        if self.reads == 0 {
            1.0
        } else {
            self.first_try_reads as f64 / self.reads as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StressError {
    #[error("seed {seed}, phase {phase}: edge {edge:?} final presence {present} fits no linearization")]
    Irreconcilable { seed: u64, phase: usize, edge: (Vertex, Vertex), present: bool },
    #[error("seed {seed}, phase {phase}: connectivity of {u} and {v} differs from the oracle")]
    Partition { seed: u64, phase: usize, u: Vertex, v: Vertex },
    #[error("seed {seed}, phase {phase}: {message}")]
    Invariant { seed: u64, phase: usize, message: String },
    #[error("seed {seed}, round {round}: {error} in {history:?}")]
    History { seed: u64, round: usize, error: CheckError, history: Vec<HistoryRecord> },
}

/// Aborts the process if `progress` stalls while `active`. A deadlocked
/// thread cannot be reclaimed, so abort is the only honest outcome.
struct Watchdog {
    stop: Arc<AtomicBool>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl Watchdog {
    fn start(progress: Arc<AtomicU64>, limit: Duration) -> Watchdog {
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let handle = std::thread::spawn(move || {
            let mut last = progress.load(Ordering::Relaxed);
            let mut since = Instant::now();
            while !flag.load(Ordering::Relaxed) {
                std::thread::sleep(Duration::from_millis(20));
                let cur = progress.load(Ordering::Relaxed);
                if cur != last {
                    last = cur;
                    since = Instant::now();
                } else if since.elapsed() > limit {
                    eprintln!("watchdog: no progress for {limit:?}; aborting");
                    std::process::abort();
                }
            }
        });
        Watchdog { stop, handle: Some(handle) }
    }
}

impl Drop for Watchdog {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

struct UpdateRecord {
    edge: (Vertex, Vertex),
    add: bool,
    invoke: u64,
    response: u64,
}

/// Runs concurrent random phases; after each barrier the engine's edge set
/// must be explainable per edge and its partition must match the oracle.
pub fn run_phase_stress(cfg: &PhaseConfig) -> Result<PhaseReport, StressError> {
    let start = Instant::now();
    let d = DynamicConnectivity::with_config(cfg.n, cfg.engine).expect("valid config");
    let pool = edge_pool(cfg.n, 2 * cfg.n, cfg.seed);
    let progress = Arc::new(AtomicU64::new(0));
    let _dog = Watchdog::start(progress.clone(), cfg.watchdog);
    let mut oracle = OracleGraph::new(cfg.n);
    let mut report = PhaseReport::default();
    for phase in 0..cfg.phases {
        let per_thread: Vec<(Vec<UpdateRecord>, u64, u64)> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..cfg.threads)
                .map(|t| {
                    let (d, pool, progress) = (&d, pool.clone(), &progress);
                    let seed = cfg.seed ^ ((phase as u64) << 20) ^ t as u64;
                    s.spawn(move || {
                        let mut gen = OpGen::with_pool(cfg.n, pool, cfg.read_ratio, seed);
                        let mut log = Vec::new();
                        let (mut reads, mut first) = (0u64, 0u64);
                        for _ in 0..cfg.ops_per_thread {
                            let op = gen.next_op();
                            let invoke = now();
                            match op {
                                Op::Connected(u, v) => {
                                    let tr = d.connected_traced(u, v).expect("valid vertices");
                                    reads += 1;
                                    first += u64::from(tr.attempts == 1);
                                }
                                Op::Add(u, v) | Op::Remove(u, v) => {
                                    op.apply(d);
                                    let add = matches!(op, Op::Add(..));
                                    log.push(UpdateRecord { edge: (u, v), add, invoke, response: now() });
                                }
                            }
                            progress.fetch_add(1, Ordering::Relaxed);
                        }
                        (log, reads, first)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut by_edge: HashMap<(Vertex, Vertex), Vec<UpdateRecord>> = HashMap::new();
        for (log, reads, first) in per_thread {
            report.reads += reads;
            report.first_try_reads += first;
            report.ops += reads + log.len() as u64;
            for r in log {
                by_edge.entry(r.edge).or_default().push(r);
            }
        }
        reconcile(cfg.seed, phase, &d, &mut oracle, &by_edge)?;
        compare_partition(cfg.seed, phase, &d, &oracle)?;
        d.check_invariants()
            .map_err(|e| StressError::Invariant { seed: cfg.seed, phase, message: e.to_string() })?;
        report.invariant_sweeps += 1;
        report.phases += 1;
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// The last update of each edge in some linearization must be one no other
/// update on that edge strictly follows in real time.
fn reconcile(
    seed: u64,
    phase: usize,
    d: &DynamicConnectivity,
    oracle: &mut OracleGraph,
    by_edge: &HashMap<(Vertex, Vertex), Vec<UpdateRecord>>,
) -> Result<(), StressError> {
    for (&edge, recs) in by_edge {
        let present = d.states().get(Edge::new(edge.0, edge.1).expect("pool edge")).is_some();
        let latest_invoke = recs.iter().map(|r| r.invoke).max().unwrap();
        let possible = recs.iter().filter(|r| r.response >= latest_invoke).any(|r| r.add == present);
        if !possible {
            return Err(StressError::Irreconcilable { seed, phase, edge, present });
        }
        if present {
            oracle.add(edge.0, edge.1);
        } else {
            oracle.remove(edge.0, edge.1);
        }
    }
    let engine_edges = d.states().len();
    if engine_edges != oracle.edge_count() {
        return Err(StressError::Invariant {
            seed,
            phase,
            message: format!("engine holds {engine_edges} edges, oracle {}", oracle.edge_count()),
        });
    }
    Ok(())
}

/// Engine and oracle partitions must coincide: a bijection between F_0
/// trees and oracle components, checked through `connected`.
fn compare_partition(
    seed: u64,
    phase: usize,
    d: &DynamicConnectivity,
    oracle: &OracleGraph,
) -> Result<(), StressError> {
    let labels = oracle.components();
    let mut first_of_root: HashMap<u32, Vertex> = HashMap::new();
    let mut root_of_label: HashMap<Vertex, u32> = HashMap::new();
    for (v, &label) in labels.iter().enumerate() {
        let v = v as Vertex;
        let root = d.forest(0).find_root(v).0;
        let rep = *first_of_root.entry(root).or_insert(v);
        let same = *root_of_label.entry(label).or_insert(root) == root;
        if !same || labels[rep as usize] != label {
            return Err(StressError::Partition { seed, phase, u: v, v: rep });
        }
        if !d.connected(v, label).expect("valid vertices") {
            return Err(StressError::Partition { seed, phase, u: v, v: label });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct ReadStressConfig {
    pub threads: usize,
    pub n: usize,
    pub ops_per_thread: usize,
    pub read_ratio: f64,
    pub engine: Config,
    pub seed: u64,
}

/// Read-heavy load on a dense random graph pre-filled with half its edges.
pub fn run_read_stress(cfg: &ReadStressConfig) -> PhaseReport {
    let start = Instant::now();
    let d = DynamicConnectivity::with_config(cfg.n, cfg.engine).expect("valid config");
    let m = cfg.n * (usize::BITS - cfg.n.leading_zeros()) as usize;
    let pool = edge_pool(cfg.n, m, cfg.seed);
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    for &(u, v) in &pool {
        if rng.random_bool(0.5) {
            d.add_edge(u, v).expect("pool edge");
        }
    }
    let counts: Vec<(u64, u64, u64)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.threads)
            .map(|t| {
                let (d, pool) = (&d, pool.clone());
                s.spawn(move || {
                    let mut gen = OpGen::with_pool(cfg.n, pool, cfg.read_ratio, cfg.seed ^ (t as u64 + 1));
                    let (mut reads, mut first, mut ops) = (0, 0, 0);
                    for _ in 0..cfg.ops_per_thread {
                        match gen.next_op() {
                            Op::Connected(u, v) => {
                                let tr = d.connected_traced(u, v).expect("valid vertices");
                                reads += 1;
                                first += u64::from(tr.attempts == 1);
                            }
                            op => drop(op.apply(d)),
                        }
                        ops += 1;
                    }
                    (reads, first, ops)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut report = PhaseReport { phases: 1, elapsed: start.elapsed(), ..PhaseReport::default() };
    for (reads, first, ops) in counts {
        report.reads += reads;
        report.first_try_reads += first;
        report.ops += ops;
    }
    report
}

/// Many tiny concurrent rounds on a 4-vertex graph, each checked
/// exhaustively for a linearization. Returns the number of rounds checked.
pub fn run_history_stress(
    engine: Config,
    rounds: usize,
    threads: usize,
    ops_per_thread: usize,
    seed: u64,
) -> Result<usize, StressError> {
    const N: usize = 4;
    let d = DynamicConnectivity::with_config(N, engine).expect("valid config");
    let pool = edge_pool(N, 6, 0);
    let mut rng = StdRng::seed_from_u64(seed);
    for round in 0..rounds {
        let initial: Vec<(Vertex, Vertex)> =
            d.states().snapshot().into_iter().map(|(e, _)| (e.u(), e.v())).collect();
        let round_seed = rng.random::<u64>();
        let logs: Vec<Vec<HistoryRecord>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let (d, pool) = (&d, pool.clone());
                    s.spawn(move || {
                        let mut gen = OpGen::with_pool(N, pool, 0.5, round_seed ^ t as u64);
                        (0..ops_per_thread)
                            .map(|_| {
                                let op = gen.next_op();
                                let invoke = now();
                                let result = match op {
                                    Op::Connected(u, v) => Some(d.connected(u, v).expect("valid")),
                                    _ => {
                                        op.apply(d);
                                        None
                                    }
                                };
                                HistoryRecord { thread: t, op, result, invoke, response: now() }
                            })
                            .collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let history: Vec<HistoryRecord> = logs.into_iter().flatten().collect();
        check_linearizable(N, &initial, &history).map_err(|error| StressError::History {
            seed,
            round,
            error,
            history: history.clone(),
        })?;
    }
    d.check_invariants().map_err(|e| StressError::Invariant { seed, phase: rounds, message: e.to_string() })?;
    Ok(rounds)
}
