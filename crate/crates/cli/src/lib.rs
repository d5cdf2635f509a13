//! Benchmark harness for the connectivity engine: graph sources, the
//! random, incremental and decremental scenarios, and CSV reporting.

pub mod graph;
pub mod report;
pub mod scenario;

pub use graph::{load_graph, parse_graph, Graph, GraphError};
pub use report::{write_csv, RunRecord, COLUMNS};
pub use scenario::{
    largest_component, run_scenario, Budget, RunMetrics, Scenario, ScenarioConfig, ScenarioError,
};

/// Parses `on`, `off` or an explicit per-search sample budget.
pub fn parse_sampling(s: &str) -> Result<usize, String> {
    match s {
        "on" => Ok(dyncon_core::DEFAULT_SAMPLE_BUDGET),
        "off" => Ok(0),
        n => n.parse().map_err(|_| format!("expected on, off or a budget, got `{n}`")),
    }
}
