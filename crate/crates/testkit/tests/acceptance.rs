//! Acceptance gate: one PASS/FAIL/SKIP line per criterion. Exits non-zero
//! if any hard criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use dyncon_bench::{load_graph, run_scenario, Budget, Scenario, ScenarioConfig};
use dyncon_core::{Config, Variant};
use dyncon_testkit::sequential::replay;
use dyncon_testkit::{
    edge_pool, run_phase_stress, run_read_stress, run_scripted, run_sequential_equivalence, OpGen, PhaseConfig,
    ReadStressConfig, SeqConfig, SeqReport, SCHEDULES,
};

// ---- pinned tolerances ----

const SEQ_SEEDS: u64 = 20;
const SEQ_OPS: usize = 100_000;
const SEQ_N: usize = 512;
const SEQ_TIME_LIMIT: Duration = Duration::from_secs(60);

const SWEEP_N: usize = 256;
const SWEEP_OPS: usize = 10_000;

const STRESS_THREADS: usize = 8;
const STRESS_N: usize = 256;
const STRESS_PHASES: usize = 200;
const STRESS_OPS_PER_THREAD: usize = 500;
const STRESS_TIME_LIMIT: Duration = Duration::from_secs(300);

const READ_THREADS: usize = 8;
const READ_N: usize = 1024;
const READ_OPS_PER_THREAD: usize = 50_000;
const READ_RATIO: f64 = 0.99;
const READ_FIRST_TRY_MIN: f64 = 0.9999;

const STATS_N: usize = 10_000;
const STATS_OPS: u64 = 200_000;
const DENSE_ADD_MIN: f64 = 0.98;
const DENSE_REMOVE_TARGET: f64 = 0.875;
const DENSE_REMOVE_TOL: f64 = 0.05;
const DENSE_LARGEST_MIN: f64 = 0.99;
const SPARSE_MAX: f64 = 0.02;

const SCALE_MIN_CORES: usize = 8;
const SCALE_SPEEDUP_MIN: f64 = 2.0;

const WORK_SIZES: [usize; 3] = [1 << 8, 1 << 10, 1 << 12];
const WORK_OPS: usize = 100_000;
const WORK_EXPONENT_MAX: f64 = 2.5;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::*;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

/// Sequential runs collected by criteria 1 and 9 for the promotion bound.
type Runs = Vec<(usize, SeqReport)>;

fn sequential_equivalence(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    for seed in 0..SEQ_SEEDS {
        let cfg = SeqConfig { audit_versions: true, ..SeqConfig::new(SEQ_N, SEQ_OPS, seed) };
        match run_sequential_equivalence(&cfg) {
            Ok(r) => runs.push((SEQ_N, r)),
            Err(d) => return Fail(format!("{d}: {:?}", d.minimized)),
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < SEQ_TIME_LIMIT,
        format!("{SEQ_SEEDS} seeds x {SEQ_OPS} ops on n = {SEQ_N}, 0 divergences, {elapsed:.1?}"),
    )
}

fn invariant_sweep(runs: &mut Runs) -> Outcome {
    let cfg = SeqConfig { sweep_every: Some(1), ..SeqConfig::new(SWEEP_N, SWEEP_OPS, 42) };
    match run_sequential_equivalence(&cfg) {
        Ok(r) => {
            runs.push((SWEEP_N, r));
            Pass(format!("{SWEEP_OPS} sweeps on n = {SWEEP_N}, 0 violations, top level used {}", r.max_level))
        }
        Err(d) => Fail(d.to_string()),
    }
}

fn scripted(prefix: &str) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in SCHEDULES.iter().filter(|s| s.starts_with(prefix)) {
        match run_scripted(name) {
            Ok(v) => {
                ok &= v.pass;
                lines.push(format!("{name}: {}", v.observed));
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{name}: {e}"));
            }
        }
    }
    check(ok, lines.join("; "))
}

fn phase_stress() -> Outcome {
    let cfg = PhaseConfig::new(STRESS_THREADS, STRESS_N, STRESS_PHASES, STRESS_OPS_PER_THREAD, 7);
    match run_phase_stress(&cfg) {
        Ok(r) => check(
            r.elapsed < STRESS_TIME_LIMIT,
            format!(
                "{} phases x {STRESS_THREADS} threads x {STRESS_OPS_PER_THREAD} ops reconciled, {} sweeps, {:.1?}",
                r.phases, r.invariant_sweeps, r.elapsed
            ),
        ),
        Err(e) => Fail(e.to_string()),
    }
}

fn read_retry() -> Outcome {
    let cfg = ReadStressConfig {
        threads: READ_THREADS,
        n: READ_N,
        ops_per_thread: READ_OPS_PER_THREAD,
        read_ratio: READ_RATIO,
        engine: Config::default(),
        seed: 11,
    };
    let r = run_read_stress(&cfg);
    let rate = r.first_try_rate();
    check(
        rate > READ_FIRST_TRY_MIN,
        format!("{} of {} reads first try ({:.4}%)", r.first_try_reads, r.reads, rate * 100.0),
    )
}

fn table_statistics() -> Outcome {
    let run = |m: usize| {
        let g = load_graph(&format!("gen:erdos:n={STATS_N}:m={m}:seed=1")).expect("generator");
        let cfg = ScenarioConfig {
            read_ratio: 0.0,
            budget: Budget::Ops(STATS_OPS),
            ..ScenarioConfig::new(Scenario::Random, Variant::Full, 1, 1)
        };
        run_scenario(&cfg, &g).expect("scenario")
    };
    let dense_m = (STATS_N as f64 * (STATS_N as f64).log2()).round() as usize;
    let dense = run(dense_m);
    let sparse = run(STATS_N);
    let ok = dense.pct_non_spanning_additions >= DENSE_ADD_MIN
        && (dense.pct_non_spanning_removals - DENSE_REMOVE_TARGET).abs() <= DENSE_REMOVE_TOL
        && dense.largest_component_fraction >= DENSE_LARGEST_MIN
        && sparse.pct_non_spanning_additions <= SPARSE_MAX
        && sparse.pct_non_spanning_removals <= SPARSE_MAX;
    check(
        ok,
        format!(
            "dense m = {dense_m}: additions {:.1}%, removals {:.1}%, largest {:.1}%; sparse m = {STATS_N}: additions {:.2}%, removals {:.2}%",
            dense.pct_non_spanning_additions * 100.0,
            dense.pct_non_spanning_removals * 100.0,
            dense.largest_component_fraction * 100.0,
            sparse.pct_non_spanning_additions * 100.0,
            sparse.pct_non_spanning_removals * 100.0,
        ),
    )
}

fn scalability() -> Outcome {
    let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
    if cores < SCALE_MIN_CORES {
        return Skip(format!("host has {cores} core(s); needs {SCALE_MIN_CORES}"));
    }
    let dense_m = (STATS_N as f64 * (STATS_N as f64).log2()).round() as usize;
    let g = load_graph(&format!("gen:erdos:n={STATS_N}:m={dense_m}:seed=1")).expect("generator");
    let tput = |variant, threads| {
        let cfg = ScenarioConfig {
            read_ratio: 0.99,
            budget: Budget::Seconds(1.0),
            warmup: 1,
            repeats: 3,
            ..ScenarioConfig::new(Scenario::Random, variant, threads, 3)
        };
        run_scenario(&cfg, &g).expect("scenario").throughput
    };
    let full: Vec<f64> = [1, 2, 4, 8].iter().map(|&t| tput(Variant::Full, t)).collect();
    let coarse8 = tput(Variant::Coarse, 8);
    let speedup = full[3] / coarse8;
    let monotone = full[..3].windows(2).all(|w| w[1] >= w[0]);
    check(
        speedup >= SCALE_SPEEDUP_MIN && monotone,
        format!("full 1/2/4/8 threads {full:.0?} ops/s, coarse at 8 {coarse8:.0}, ratio {speedup:.2}"),
    )
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn amortized_work(runs: &mut Runs) -> Outcome {
    let mut points = Vec::new();
    for &n in &WORK_SIZES {
        // Dense pool, m ~ N log2 N, so that spanning removals usually
        // need a replacement search. Sampling is off so every search scans.
        let pool = edge_pool(n, n * n.ilog2() as usize, 5);
        let ops = OpGen::with_pool(n, pool, 1.0 / 3.0, 5).take(WORK_OPS);
        let mut cfg = SeqConfig { audit_versions: false, ..SeqConfig::new(n, WORK_OPS, 5) };
        cfg.engine.sample_budget = 0;
        let r = match replay(&cfg, &ops) {
            Ok(r) => r,
            Err(f) => return Fail(f.to_string()),
        };
        runs.push((n, r));
        points.push(((n as f64).log2(), r.examined as f64 / r.ops as f64));
    }
    if points.iter().any(|p| p.1 <= 0.0) {
        return Fail(format!("no replacement work recorded: {points:.3?}"));
    }
    let slope = loglog_slope(&points);
    check(
        slope <= WORK_EXPONENT_MAX,
        format!("examined/op by log2 N: {points:.3?}, fitted exponent {slope:.2} (soft)"),
    )
}

fn promotion_budget(runs: &Runs) -> Outcome {
    let worst = runs
        .iter()
        .map(|&(n, r)| (r.promotions as f64 / (r.insertions * n.ilog2() as u64).max(1) as f64, n, r))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    match worst {
        None => Fail("no sequential runs recorded".into()),
        Some((ratio, n, r)) => check(
            ratio <= 1.0,
            format!(
                "{} runs; tightest: n = {n}, {} promotions vs {} insertions x {}",
                runs.len(),
                r.promotions,
                r.insertions,
                n.ilog2()
            ),
        ),
    }
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Fail(format!("panicked: {msg}"))
    })
}

fn main() {
    // Criterion 9 is advisory: its verdict is printed but does not gate.
    const SOFT: [u32; 1] = [9];
    let mut runs: Runs = Vec::new();
    let mut failed = Vec::new();
    let mut report = |id: u32, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                if !SOFT.contains(&id) {
                    failed.push(id);
                }
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {id:>2} {tag} {name}: {detail}");
    };
    report(1, "sequential equivalence", guarded(|| sequential_equivalence(&mut runs)));
    report(2, "invariant sweep", guarded(|| invariant_sweep(&mut runs)));
    report(3, "reader schedule", guarded(|| scripted("reader-")));
    report(4, "replacement races", guarded(|| scripted("replacement-")));
    report(5, "phase stress", guarded(phase_stress));
    report(6, "read retry rate", guarded(read_retry));
    report(7, "non-spanning statistics", guarded(table_statistics));
    report(8, "scalability", guarded(scalability));
    report(9, "amortized work", guarded(|| amortized_work(&mut runs)));
    report(10, "promotion budget", guarded(|| promotion_budget(&runs)));
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
