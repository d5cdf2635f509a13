//! CSV output. One header line, then one row per run, in `COLUMNS` order.

use std::path::Path;

use crate::scenario::{Budget, RunMetrics, ScenarioConfig};

pub const COLUMNS: [&str; 17] = [
    "scenario",
    "variant",
    "graph",
    "n",
    "m",
    "threads",
    "read_ratio",
    "ops",
    "seed",
    "sampling",
    "throughput",
    "active_time_rate",
    "pct_non_spanning_additions",
    "pct_non_spanning_removals",
    "largest_component_fraction",
    "read_first_try_rate",
    "elapsed_secs",
];

/// A finished run with the parameters that identify it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub config: ScenarioConfig,
    pub metrics: RunMetrics,
}

impl RunRecord {
    pub fn fields(&self) -> Vec<String> {
        let c = &self.config;
        let m = &self.metrics;
        vec![
            c.scenario.to_string(),
            c.variant.to_string(),
            self.graph.clone(),
            self.n.to_string(),
            self.m.to_string(),
            c.threads.to_string(),
            c.read_ratio.to_string(),
            m.ops.to_string(),
            c.seed.to_string(),
            c.sample_budget.to_string(),
            format!("{:.3}", m.throughput),
            format!("{:.6}", m.active_time_rate),
            format!("{:.6}", m.pct_non_spanning_additions),
            format!("{:.6}", m.pct_non_spanning_removals),
            format!("{:.6}", m.largest_component_fraction),
            format!("{:.6}", m.read_first_try_rate),
            format!("{:.6}", m.elapsed.as_secs_f64()),
        ]
    }
}

/// Human-readable budget for logs.
pub fn describe_budget(b: Budget) -> String {
    match b {
        Budget::Ops(n) => format!("{n} ops"),
        Budget::Seconds(s) => format!("{s} s"),
    }
}

pub fn write_csv(records: &[RunRecord], path: impl AsRef<Path>) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}
