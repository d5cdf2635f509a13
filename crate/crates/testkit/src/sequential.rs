//! Single-threaded equivalence against the oracle, with reproducer
//! minimization.

use dyncon_core::{AddOutcome, Config, DynamicConnectivity, RemoveOutcome};

use crate::oracle::OracleGraph;
use crate::ops::{Answer, Op, OpGen};

#[derive(Debug, Clone, Copy)]
pub struct SeqConfig {
    pub n: usize,
    pub ops: usize,
    pub seed: u64,
    pub engine: Config,
    /// Checks that every component change bumped the affected F_0 roots.
    pub audit_versions: bool,
    /// Full invariant sweep after every k-th operation.
    pub sweep_every: Option<usize>,
    /// Fault injection: disable F_0 version bumps.
    pub skip_version_bumps: bool,
}

impl SeqConfig {
    pub fn new(n: usize, ops: usize, seed: u64) -> SeqConfig {
        SeqConfig {
            n,
            ops,
            seed,
            engine: Config { seed, ..Config::default() },
            audit_versions: true,
            sweep_every: None,
            skip_version_bumps: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SeqReport {
    pub ops: usize,
    pub reads: usize,
    /// Additions that changed the edge set.
    pub insertions: u64,
    pub promotions: u64,
    /// Edges inspected by replacement searches.
    pub examined: u64,
    pub max_level: usize,
}

/// First failing step of a replay.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("step {step} ({op:?}): {message}")]
pub struct Failure {
    pub step: usize,
    pub op: Op,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("seed {seed}: {failure}; minimized reproducer has {} ops", minimized.len())]
pub struct Divergence {
    pub seed: u64,
    pub failure: Failure,
    pub minimized: Vec<Op>,
}

/// Runs `cfg.ops` generated operations against engine and oracle.
pub fn run_sequential_equivalence(cfg: &SeqConfig) -> Result<SeqReport, Divergence> {
    let ops = OpGen::new(cfg.n, cfg.seed).take(cfg.ops);
    replay(cfg, &ops).map_err(|failure| Divergence {
        seed: cfg.seed,
        minimized: minimize(cfg, &ops[..=failure.step]),
        failure,
    })
}

/// Replays `ops` on a fresh engine.
pub fn replay(cfg: &SeqConfig, ops: &[Op]) -> Result<SeqReport, Failure> {
    let d = DynamicConnectivity::with_config(cfg.n, cfg.engine).expect("valid config");
    if cfg.skip_version_bumps {
        d.forest(0).inject_skip_version_bumps(true);
    }
    let mut oracle = OracleGraph::new(cfg.n);
    let mut report = SeqReport { max_level: d.levels().max_level(), ..SeqReport::default() };
    for (step, &op) in ops.iter().enumerate() {
        let fail = |message: String| Failure { step, op, message };
        let (u, v) = op.endpoints();
        let before = [d.forest(0).find_root(u), d.forest(0).find_root(v)];
        match op {
            Op::Add(u, v) => {
                let out = d.add_edge(u, v).map_err(|e| fail(e.to_string()))?;
                let was_connected = oracle.connected(u, v);
                let changed = oracle.add(u, v);
                if (out != AddOutcome::Present) != changed {
                    return Err(fail(format!("engine {out:?}, oracle changed={changed}")));
                }
                if changed && (out == AddOutcome::NonSpanning) != was_connected {
                    return Err(fail(format!("engine {out:?} with endpoints connected={was_connected}")));
                }
                if changed {
                    report.insertions += 1;
                }
                if cfg.audit_versions && out == AddOutcome::Spanning {
                    audit(&d, &before, &fail)?;
                }
            }
            Op::Remove(u, v) => {
                let out = d.remove_edge(u, v).map_err(|e| fail(e.to_string()))?;
                let changed = oracle.remove(u, v);
                if (out != RemoveOutcome::Absent) != changed {
                    return Err(fail(format!("engine {out:?}, oracle changed={changed}")));
                }
                if let RemoveOutcome::Spanning { replaced } = out {
                    if replaced != oracle.connected(u, v) {
                        return Err(fail(format!("replaced={replaced} but oracle disagrees")));
                    }
                    if cfg.audit_versions {
                        audit(&d, &before[..1], &fail)?;
                    }
                }
            }
            Op::Connected(..) => {
                report.reads += 1;
                let got = op.apply(&d);
                let want = Answer::Connected(oracle.connected(u, v));
                if got != want {
                    return Err(fail(format!("engine {got:?}, oracle {want:?}")));
                }
            }
        }
        if cfg.sweep_every.is_some_and(|k| (step + 1) % k == 0) {
            d.check_invariants().map_err(|e| fail(e.to_string()))?;
        }
        report.ops += 1;
    }
    d.check_invariants().map_err(|e| Failure {
        step: ops.len().saturating_sub(1),
        op: ops.last().copied().unwrap_or(Op::Connected(0, 0)),
        message: e.to_string(),
    })?;
    let stats = d.stats();
    report.promotions = stats.promotions;
    report.examined = stats.examined;
    Ok(report)
}

/// Every root observed before a component change must have a larger
/// version afterwards.
fn audit(
    d: &DynamicConnectivity,
    before: &[(u32, u64)],
    fail: &dyn Fn(String) -> Failure,
) -> Result<(), Failure> {
    for &(root, version) in before {
        let now = d.forest(0).version(root);
        if now <= version {
            return Err(fail(format!("root {root} version {version} unchanged by a component change")));
        }
    }
    Ok(())
}

/// Smallest failing op list found by prefix bisection followed by greedy
/// chunk deletion. `ops` must fail.
pub fn minimize(cfg: &SeqConfig, ops: &[Op]) -> Vec<Op> {
    let fails = |ops: &[Op]| replay(cfg, ops).is_err();
    let (mut lo, mut hi) = (0, ops.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if fails(&ops[..mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mut cur = ops[..hi].to_vec();
    let mut chunk = (cur.len() / 2).max(1);
    loop {
        let mut i = 0;
        while i < cur.len() {
            let mut cand = cur.clone();
            cand.drain(i..(i + chunk).min(cand.len()));
            if !cand.is_empty() && fails(&cand) {
                cur = cand;
            } else {
                i += chunk;
            }
        }
        if chunk == 1 {
            return cur;
        }
        chunk /= 2;
    }
}
