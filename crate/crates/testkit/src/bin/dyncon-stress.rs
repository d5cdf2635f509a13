use std::process::ExitCode;

use clap::Parser;
use dyncon_core::{Config, Variant};
use dyncon_testkit::{run_phase_stress, run_scripted, run_sequential_equivalence, PhaseConfig, SeqConfig, SCHEDULES};

/// Runs the sequential equivalence check, the phase stress or one scripted
/// schedule. Exit status 1 on any failure.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; 0 runs the sequential equivalence check instead.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Total operations (sequential) or operations per thread per phase.
    #[arg(long, default_value_t = 10_000)]
    ops: usize,
    #[arg(long, default_value_t = 20)]
    phases: usize,
    #[arg(long, default_value = "full")]
    variant: Variant,
    /// Run a scripted schedule; `list` prints the names.
    #[arg(long)]
    schedule: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let engine = Config { variant: args.variant, seed: args.seed, ..Config::default() };
    let ok = match args.schedule.as_deref() {
        Some("list") => {
            SCHEDULES.iter().for_each(|s| println!("{s}"));
            true
        }
        Some(name) => match run_scripted(name) {
            Ok(v) => {
                println!("{}: {} (expected {}; observed {})", v.schedule, pass(v.pass), v.expected, v.observed);
                v.pass
            }
            Err(e) => {
                eprintln!("{e}");
                false
            }
        },
        None if args.threads == 0 => {
            let cfg = SeqConfig { engine, ..SeqConfig::new(args.n, args.ops, args.seed) };
            match run_sequential_equivalence(&cfg) {
                Ok(r) => {
                    println!("sequential: PASS {r:?}");
                    true
                }
                Err(d) => {
                    eprintln!("sequential: FAIL {d}\nreproducer: {:?}", d.minimized);
                    false
                }
            }
        }
        None => {
            let cfg = PhaseConfig { engine, ..PhaseConfig::new(args.threads, args.n, args.phases, args.ops, args.seed) };
            match run_phase_stress(&cfg) {
                Ok(r) => {
                    println!("phase stress: PASS {r:?} first-try reads {:.6}", r.first_try_rate());
                    true
                }
                Err(e) => {
                    eprintln!("phase stress: FAIL {e}");
                    false
                }
            }
        }
    };
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
