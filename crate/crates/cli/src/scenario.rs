//! Benchmark scenarios over a loaded graph.
//!
//! Each iteration builds a fresh engine, performs the untimed setup, then
//! releases all workers through a barrier. Warmup iterations are discarded;
//! the timed iteration with the median throughput is reported.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Barrier;
use std::time::{Duration, Instant};

use dyncon_core::{
    take_thread_lock_wait, AddOutcome, Config, DynamicConnectivity, RemoveOutcome, Variant, Vertex,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Half the edges pre-filled, then a read/add/remove mix on random edges.
    Random,
    /// All edges inserted into an empty structure.
    Incremental,
    /// All edges removed from the full structure.
    Decremental,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Random => "random",
            Scenario::Incremental => "incremental",
            Scenario::Decremental => "decremental",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Scenario, ScenarioError> {
        match s {
            "random" => Ok(Scenario::Random),
            "incremental" => Ok(Scenario::Incremental),
            "decremental" => Ok(Scenario::Decremental),
            other => Err(ScenarioError::UnknownScenario(other.to_string())),
        }
    }
}

/// Work per iteration of the random scenario. The other scenarios always
/// process every edge once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    /// Total operations, split evenly across threads.
    Ops(u64),
    /// Wall-clock duration per iteration.
    Seconds(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Share of connectivity queries; additions and removals split the rest
    /// evenly.
    pub read_ratio: f64,
    pub threads: usize,
    pub budget: Budget,
    pub variant: Variant,
    /// Sampled candidates per replacement search; 0 disables sampling.
    pub sample_budget: usize,
    pub seed: u64,
    pub warmup: usize,
    pub repeats: usize,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, variant: Variant, threads: usize, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            scenario,
            read_ratio: 0.0,
            threads,
            budget: Budget::Ops(100_000),
            variant,
            sample_budget: dyncon_core::DEFAULT_SAMPLE_BUDGET,
            seed,
            warmup: 0,
            repeats: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(0.0..=1.0).contains(&self.read_ratio) {
            return Err(ScenarioError::ReadRatio(self.read_ratio));
        }
        if self.threads == 0 {
            return Err(ScenarioError::NoThreads);
        }
        if self.repeats == 0 {
            return Err(ScenarioError::NoRepeats);
        }
        if let Budget::Seconds(s) = self.budget {
            if !(s.is_finite() && s > 0.0) {
                return Err(ScenarioError::Duration(s));
            }
        }
        Ok(())
    }
}

/// Rates are fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunMetrics {
    /// Operations per second of wall time.
    pub throughput: f64,
    /// Share of worker time not spent blocked on locks.
    pub active_time_rate: f64,
    /// Share of effective additions that joined an existing component.
    pub pct_non_spanning_additions: f64,
    /// Share of effective removals that removed a non-tree edge.
    pub pct_non_spanning_removals: f64,
    /// Largest component over `n`, maximum of the post-setup and final
    /// partitions.
    pub largest_component_fraction: f64,
    /// Share of queries answered without a retry.
    pub read_first_try_rate: f64,
    pub ops: u64,
    pub reads: u64,
    /// Additions and removals that changed the edge set.
    pub additions: u64,
    pub removals: u64,
    pub elapsed: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}` (expected random, incremental or decremental)")]
    UnknownScenario(String),
    #[error("read ratio {0} is outside [0, 1]")]
    ReadRatio(f64),
    #[error("at least one thread is required")]
    NoThreads,
    #[error("at least one timed iteration is required")]
    NoRepeats,
    #[error("duration {0} s must be positive")]
    Duration(f64),
    #[error("the random scenario needs at least one edge when updates are enabled")]
    NoEdges,
    #[error("cannot allocate {0} edges")]
    Resource(usize),
    #[error(transparent)]
    Engine(#[from] dyncon_core::Error),
}

/// Runs `cfg.warmup + cfg.repeats` iterations and reports the median one.
pub fn run_scenario(cfg: &ScenarioConfig, graph: &Graph) -> Result<RunMetrics, ScenarioError> {
    cfg.validate()?;
    if cfg.scenario == Scenario::Random && cfg.read_ratio < 1.0 && graph.edges.is_empty() {
        return Err(ScenarioError::NoEdges);
    }
    for _ in 0..cfg.warmup {
        run_once(cfg, graph)?;
    }
    let mut runs = (0..cfg.repeats).map(|_| run_once(cfg, graph)).collect::<Result<Vec<_>, _>>()?;
    runs.sort_by(|a, b| a.throughput.total_cmp(&b.throughput));
    Ok(runs[runs.len() / 2])
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    ops: u64,
    reads: u64,
    first_try: u64,
    adds: u64,
    ns_adds: u64,
    removes: u64,
    ns_removes: u64,
    busy: Duration,
    waited: Duration,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.ops += o.ops;
        self.reads += o.reads;
        self.first_try += o.first_try;
        self.adds += o.adds;
        self.ns_adds += o.ns_adds;
        self.removes += o.removes;
        self.ns_removes += o.ns_removes;
        self.busy = self.busy.max(o.busy);
        self.waited += o.waited;
        self
    }

    fn add(&mut self, d: &DynamicConnectivity, (u, v): (Vertex, Vertex)) {
        self.ops += 1;
        match d.add_edge(u, v).expect("graph vertices are in range") {
            AddOutcome::Present => {}
            AddOutcome::NonSpanning => {
                self.adds += 1;
                self.ns_adds += 1;
            }
            AddOutcome::Spanning => self.adds += 1,
        }
    }

    fn remove(&mut self, d: &DynamicConnectivity, (u, v): (Vertex, Vertex)) {
        self.ops += 1;
        match d.remove_edge(u, v).expect("graph vertices are in range") {
            RemoveOutcome::Absent => {}
            RemoveOutcome::NonSpanning => {
                self.removes += 1;
                self.ns_removes += 1;
            }
            RemoveOutcome::Spanning { .. } => self.removes += 1,
        }
    }

    fn read(&mut self, d: &DynamicConnectivity, u: Vertex, v: Vertex) {
        self.ops += 1;
        self.reads += 1;
        if d.connected_traced(u, v).expect("vertices are in range").attempts == 1 {
            self.first_try += 1;
        }
    }
}

fn ratio(num: u64, den: u64, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

/// Deterministic per-thread stream.
fn thread_rng(seed: u64, t: usize) -> StdRng {
    StdRng::seed_from_u64(seed ^ (t as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn largest_component(d: &DynamicConnectivity) -> usize {
    let mut sizes: HashMap<u32, usize> = HashMap::new();
    for v in 0..d.vertex_count() as Vertex {
        *sizes.entry(d.forest(0).find_root(v).0).or_default() += 1;
    }
    sizes.into_values().max().unwrap_or(0)
}

fn run_once(cfg: &ScenarioConfig, graph: &Graph) -> Result<RunMetrics, ScenarioError> {
    let engine = Config { variant: cfg.variant, sample_budget: cfg.sample_budget, seed: cfg.seed };
    let d = DynamicConnectivity::with_config(graph.n.max(1), engine)?;
    let mut order = Vec::new();
    order.try_reserve_exact(graph.m()).map_err(|_| ScenarioError::Resource(graph.m()))?;
    order.extend_from_slice(&graph.edges);
    order.shuffle(&mut StdRng::seed_from_u64(cfg.seed));
    let prefill = match cfg.scenario {
        Scenario::Random => &order[..order.len() / 2],
        Scenario::Incremental => &[][..],
        Scenario::Decremental => &order[..],
    };
    for &(u, v) in prefill {
        d.add_edge(u, v)?;
    }
    let largest_before = largest_component(&d);

    let k = cfg.threads;
    let barrier = Barrier::new(k);
    let tally = std::thread::scope(|s| {
        let handles: Vec<_> = (0..k)
            .map(|t| {
                let (d, barrier, order) = (&d, &barrier, &order);
                s.spawn(move || {
                    let mut rng = thread_rng(cfg.seed, t);
                    let mut tally = Tally::default();
                    barrier.wait();
                    take_thread_lock_wait();
                    let start = Instant::now();
                    match cfg.scenario {
                        Scenario::Random => random_worker(cfg, graph, d, t, &mut rng, &mut tally, start),
                        Scenario::Incremental => {
                            for &e in order.iter().skip(t).step_by(k) {
                                tally.add(d, e);
                            }
                        }
                        Scenario::Decremental => {
                            for &e in order.iter().skip(t).step_by(k) {
                                tally.remove(d, e);
                            }
                        }
                    }
                    tally.busy = start.elapsed();
                    tally.waited = take_thread_lock_wait();
                    (tally, tally.busy)
                })
            })
            .collect();
        let mut total = Tally::default();
        let mut busy_sum = Duration::ZERO;
        for h in handles {
            let (t, busy) = h.join().expect("worker panicked");
            busy_sum += busy;
            total = total.merge(t);
        }
        (total, busy_sum)
    });
    let (t, busy_sum) = tally;
    let largest = largest_before.max(largest_component(&d));
    let wall = t.busy.as_secs_f64();
    let active = if busy_sum.is_zero() {
        1.0
    } else {
        (1.0 - t.waited.as_secs_f64() / busy_sum.as_secs_f64()).clamp(0.0, 1.0)
    };
    Ok(RunMetrics {
        throughput: if wall > 0.0 { t.ops as f64 / wall } else { 0.0 },
        active_time_rate: active,
        pct_non_spanning_additions: ratio(t.ns_adds, t.adds, 0.0),
        pct_non_spanning_removals: ratio(t.ns_removes, t.removes, 0.0),
        largest_component_fraction: ratio(largest as u64, graph.n.max(1) as u64, 0.0),
        read_first_try_rate: ratio(t.first_try, t.reads, 1.0),
        ops: t.ops,
        reads: t.reads,
        additions: t.adds,
        removals: t.removes,
        elapsed: t.busy,
    })
}

fn random_worker(
    cfg: &ScenarioConfig,
    graph: &Graph,
    d: &DynamicConnectivity,
    t: usize,
    rng: &mut StdRng,
    tally: &mut Tally,
    start: Instant,
) {
    let n = graph.n.max(1) as Vertex;
    let add_cut = cfg.read_ratio + (1.0 - cfg.read_ratio) / 2.0;
    let quota = match cfg.budget {
        Budget::Ops(total) => {
            let k = cfg.threads as u64;
            total / k + u64::from((t as u64) < total % k)
        }
        Budget::Seconds(_) => u64::MAX,
    };
    let deadline = match cfg.budget {
        Budget::Seconds(s) => Some(start + Duration::from_secs_f64(s)),
        Budget::Ops(_) => None,
    };
    let mut done = 0u64;
    while done < quota {
        if done % 64 == 0 && deadline.is_some_and(|dl| Instant::now() >= dl) {
            break;
        }
        done += 1;
        let x: f64 = rng.random();
        if x < cfg.read_ratio {
            tally.read(d, rng.random_range(0..n), rng.random_range(0..n));
        } else {
            let e = graph.edges[rng.random_range(0..graph.m())];
            if x < add_cut {
                tally.add(d, e);
            } else {
                tally.remove(d, e);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_graph;

    #[test]
    fn config_validation() {
        let base = ScenarioConfig::new(Scenario::Random, Variant::Full, 1, 1);
        assert!(base.validate().is_ok());
        for bad in [
            ScenarioConfig { read_ratio: 1.5, ..base },
            ScenarioConfig { read_ratio: -0.1, ..base },
            ScenarioConfig { threads: 0, ..base },
            ScenarioConfig { repeats: 0, ..base },
            ScenarioConfig { budget: Budget::Seconds(0.0), ..base },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert_eq!("decremental".parse::<Scenario>().unwrap(), Scenario::Decremental);
        assert!("sideways".parse::<Scenario>().is_err());
    }

    #[test]
    fn reads_only_run_is_fully_active() {
        let g = load_graph("gen:erdos:n=64:m=128:seed=2").unwrap();
        let cfg = ScenarioConfig { read_ratio: 1.0, budget: Budget::Ops(2000), ..ScenarioConfig::new(Scenario::Random, Variant::Full, 1, 5) };
        let m = run_scenario(&cfg, &g).unwrap();
        assert!(m.throughput > 0.0);
        assert_eq!(m.active_time_rate, 1.0);
        assert_eq!((m.reads, m.additions, m.removals), (2000, 0, 0));
        assert_eq!(m.read_first_try_rate, 1.0);
    }

    #[test]
    fn incremental_then_decremental_touch_every_edge() {
        let g = load_graph("gen:erdos:n=100:m=300:seed=4").unwrap();
        for threads in [1, 3] {
            let inc = run_scenario(&ScenarioConfig::new(Scenario::Incremental, Variant::Full, threads, 1), &g).unwrap();
            assert_eq!((inc.ops, inc.additions, inc.removals), (300, 300, 0));
            let dec = run_scenario(&ScenarioConfig::new(Scenario::Decremental, Variant::Fine, threads, 1), &g).unwrap();
            assert_eq!((dec.ops, dec.additions, dec.removals), (300, 0, 300));
        }
    }

    #[test]
    fn random_run_needs_edges() {
        let g = Graph { n: 4, edges: vec![] };
        let cfg = ScenarioConfig::new(Scenario::Random, Variant::Full, 1, 1);
        assert!(matches!(run_scenario(&cfg, &g), Err(ScenarioError::NoEdges)));
    }
}
