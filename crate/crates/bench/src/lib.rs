//! Fixtures shared by the criterion benchmarks.

use dyncon_bench::{load_graph, Graph};
use dyncon_core::{Config, DynamicConnectivity, Variant};

/// Dense random graph, `m ~ n log2 n`.
pub fn dense(n: usize, seed: u64) -> Graph {
    let m = n * n.ilog2() as usize;
    load_graph(&format!("gen:erdos:n={n}:m={m}:seed={seed}")).expect("valid generator spec")
}

/// Engine holding every other edge of `g`.
pub fn half_filled(g: &Graph, variant: Variant) -> DynamicConnectivity {
    let d = DynamicConnectivity::with_config(g.n, Config { variant, ..Config::default() }).expect("n > 0");
    for &(u, v) in g.edges.iter().step_by(2) {
        d.add_edge(u, v).expect("in range");
    }
    d
}
