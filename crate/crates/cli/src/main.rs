use std::process::ExitCode;

use clap::Parser;
use dyncon_bench::{
    load_graph, parse_sampling, report::describe_budget, run_scenario, write_csv, Budget, RunRecord, Scenario,
    ScenarioConfig,
};
use dyncon_core::Variant;

/// Runs connectivity benchmarks and writes one CSV row per
/// (variant, thread count) pair.
#[derive(Parser, Debug)]
#[command(name = "dyncon-bench", version)]
struct Args {
    /// Edge-list or DIMACS file, or a generator such as
    /// `gen:erdos:n=10000:m=130000:seed=1` or `gen:grid:w=300:h=300:keep=0.6:seed=1`.
    #[arg(long)]
    graph: String,
    #[arg(long, default_value = "random", value_parser = str::parse::<Scenario>)]
    scenario: Scenario,
    /// Share of connectivity queries in the random scenario.
    #[arg(long, default_value_t = 0.8)]
    read_ratio: f64,
    /// Comma-separated thread counts.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    threads: Vec<usize>,
    /// Total operations per iteration of the random scenario.
    #[arg(long, conflicts_with = "seconds", default_value_t = 100_000)]
    ops: u64,
    /// Duration per iteration of the random scenario.
    #[arg(long)]
    seconds: Option<f64>,
    /// Comma-separated variants: coarse, fine, nb-reads, full.
    #[arg(long, value_delimiter = ',', default_value = "full", value_parser = str::parse::<Variant>)]
    variant: Vec<Variant>,
    /// `on`, `off` or a sample budget per replacement search.
    #[arg(long, default_value = "on", value_parser = parse_sampling)]
    sampling: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; rows go to stdout when omitted.
    #[arg(long)]
    csv: Option<std::path::PathBuf>,
    /// Discarded iterations before measuring.
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// Timed iterations; the median by throughput is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let graph = load_graph(&args.graph)?;
    eprintln!("graph {}: n = {}, m = {}", args.graph, graph.n, graph.m());
    let budget = args.seconds.map_or(Budget::Ops(args.ops), Budget::Seconds);
    let mut records = Vec::new();
    for &variant in &args.variant {
        for &threads in &args.threads {
            let config = ScenarioConfig {
                scenario: args.scenario,
                read_ratio: args.read_ratio,
                threads,
                budget,
                variant,
                sample_budget: args.sampling,
                seed: args.seed,
                warmup: args.warmup,
                repeats: args.repeats,
            };
            eprintln!("{} {variant} x{threads} ({})", args.scenario, describe_budget(budget));
            let metrics = run_scenario(&config, &graph)?;
            records.push(RunRecord { graph: args.graph.clone(), n: graph.n, m: graph.m(), config, metrics });
        }
    }
    match &args.csv {
        Some(path) => write_csv(&records, path)?,
        None => {
            println!("{}", dyncon_bench::COLUMNS.join(","));
            for r in &records {
                println!("{}", r.fields().join(","));
            }
        }
    }
    Ok(())
}
