use std::collections::{BTreeSet, VecDeque};

use dyncon_core::{
    AddOutcome, Config, DynamicConnectivity, Edge, EdgeState, Error, RemoveOutcome, Status, Variant,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Brute-force reference graph.
#[derive(Default)]
struct Oracle {
    n: u32,
    edges: BTreeSet<(u32, u32)>,
}

impl Oracle {
    fn new(n: u32) -> Oracle {
        Oracle { n, edges: BTreeSet::new() }
    }

    fn key(a: u32, b: u32) -> (u32, u32) {
        (a.min(b), a.max(b))
    }

    fn connected(&self, a: u32, b: u32) -> bool {
        let mut adj = vec![Vec::new(); self.n as usize];
        for &(x, y) in &self.edges {
            adj[x as usize].push(y);
            adj[y as usize].push(x);
        }
        let mut seen = vec![false; self.n as usize];
        let mut q = VecDeque::from([a]);
        seen[a as usize] = true;
        while let Some(x) = q.pop_front() {
            for &y in &adj[x as usize] {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    q.push_back(y);
                }
            }
        }
        seen[b as usize]
    }
}

fn dc(n: usize, variant: Variant, sample_budget: usize, seed: u64) -> DynamicConnectivity {
    DynamicConnectivity::with_config(n, Config { variant, sample_budget, seed }).unwrap()
}

/// Replays `steps` random operations against the oracle.
fn replay(n: u32, d: &DynamicConnectivity, steps: usize, seed: u64, audit: bool) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut o = Oracle::new(n);
    for step in 0..steps {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a == b {
            continue;
        }
        match rng.random_range(0..3) {
            0 => {
                let out = d.add_edge(a, b).unwrap();
                let was = !o.edges.insert(Oracle::key(a, b));
                assert_eq!(out == AddOutcome::Present, was, "step {step}: add({a},{b})");
            }
            1 => {
                let out = d.remove_edge(a, b).unwrap();
                let was = o.edges.remove(&Oracle::key(a, b));
                assert_eq!(out != RemoveOutcome::Absent, was, "step {step}: remove({a},{b})");
            }
            _ => assert_eq!(d.connected(a, b).unwrap(), o.connected(a, b), "step {step}: connected({a},{b})"),
        }
        if audit {
            d.check_invariants().unwrap_or_else(|v| panic!("step {step}: {v}"));
        }
    }
    for a in 0..n {
        for b in 0..n {
            assert_eq!(d.connected(a, b).unwrap(), o.connected(a, b));
        }
    }
    d.check_invariants().unwrap();
}

#[test]
fn rejects_bad_arguments() {
    assert!(matches!(DynamicConnectivity::new(0), Err(Error::NoVertices)));
    let d = DynamicConnectivity::new(4).unwrap();
    assert_eq!(d.add_edge(2, 2), Err(Error::SelfLoop(2)));
    assert_eq!(d.remove_edge(1, 1), Err(Error::SelfLoop(1)));
    assert_eq!(d.add_edge(0, 4), Err(Error::VertexOutOfRange { vertex: 4, n: 4 }));
    assert!(d.connected(9, 0).is_err());
    assert!("sharded".parse::<Variant>().is_err());
    for v in Variant::ALL {
        assert_eq!(v.name().parse::<Variant>().unwrap(), v);
    }
}

#[test]
fn reflexive_and_idempotent() {
    for variant in Variant::ALL {
        let d = dc(3, variant, 16, 1);
        assert!(d.connected(1, 1).unwrap());
        assert!(!d.connected(0, 1).unwrap());
        assert_eq!(d.add_edge(0, 1).unwrap(), AddOutcome::Spanning);
        assert_eq!(d.add_edge(1, 0).unwrap(), AddOutcome::Present);
        assert_eq!(d.remove_edge(0, 2).unwrap(), RemoveOutcome::Absent);
        assert_eq!(d.remove_edge(0, 1).unwrap(), RemoveOutcome::Spanning { replaced: false });
        assert_eq!(d.remove_edge(0, 1).unwrap(), RemoveOutcome::Absent);
        assert!(!d.connected(0, 1).unwrap());
    }
}

#[test]
fn triangle_removal_finds_replacement() {
    for variant in Variant::ALL {
        let d = dc(3, variant, 16, 2);
        d.add_edge(0, 1).unwrap();
        d.add_edge(1, 2).unwrap();
        assert_eq!(d.add_edge(0, 2).unwrap(), AddOutcome::NonSpanning);
        assert_eq!(d.remove_edge(0, 1).unwrap(), RemoveOutcome::Spanning { replaced: true });
        assert!(d.connected(0, 1).unwrap() && d.connected(1, 2).unwrap());
        let s = d.states().get(Edge::new(0, 2).unwrap()).unwrap();
        assert!(s.is(Status::Spanning), "{s:?}");
        d.check_invariants().unwrap();
    }
}

#[test]
fn path_removal_splits() {
    let d = DynamicConnectivity::new(4).unwrap();
    for v in 1..4 {
        d.add_edge(v - 1, v).unwrap();
    }
    assert!(d.connected(0, 3).unwrap());
    assert_eq!(d.remove_edge(1, 2).unwrap(), RemoveOutcome::Spanning { replaced: false });
    assert!(!d.connected(0, 3).unwrap());
    assert!(d.connected(0, 1).unwrap() && d.connected(2, 3).unwrap());
    d.check_invariants().unwrap();
}

#[test]
fn star_insertions_stay_level_zero() {
    let k = 9;
    let d = DynamicConnectivity::new(k + 1).unwrap();
    for v in 1..=k as u32 {
        assert_eq!(d.add_edge(0, v).unwrap(), AddOutcome::Spanning);
    }
    assert_eq!(d.forest(0).component_of(0).len(), k + 1);
    for (_, s) in d.states().snapshot() {
        assert_eq!(s, EdgeState::spanning(0));
    }
    for i in 1..=d.levels().max_level() {
        assert_eq!(d.forest(i).tree_edge_count(), 0);
    }
}

#[test]
fn scan_promotes_non_candidates() {
    // Two 4-cliques joined by a bridge: removing the bridge scans the
    // smaller side's non-spanning edges, none of which reconnect.
    let d = dc(8, Variant::Full, 0, 3);
    for side in [0u32, 4] {
        for a in side..side + 4 {
            for b in a + 1..side + 4 {
                d.add_edge(a, b).unwrap();
            }
        }
    }
    d.add_edge(3, 4).unwrap();
    let before = d.stats().promotions;
    assert_eq!(d.remove_edge(3, 4).unwrap(), RemoveOutcome::Spanning { replaced: false });
    assert!(d.stats().promotions > before);
    let raised = d.states().snapshot().into_iter().filter(|(_, s)| s.level() > 0).count();
    assert!(raised > 0);
    d.check_invariants().unwrap();
}

#[test]
fn random_ops_with_invariant_sweep() {
    for variant in Variant::ALL {
        let d = dc(256, variant, 16, 4);
        replay(256, &d, 1000, 40 + variant as u64, true);
    }
}

#[test]
fn dense_small_graph_promotes_deeply() {
    for seed in 0..4 {
        let d = dc(16, Variant::Full, 16, seed);
        replay(16, &d, 3000, seed, true);
    }
}

#[test]
fn sampling_does_not_change_answers() {
    let n = 64;
    let with = dc(n, Variant::Full, 16, 5);
    let without = dc(n, Variant::Full, 0, 5);
    let mut rng = StdRng::seed_from_u64(77);
    for _ in 0..20_000 {
        let (a, b) = (rng.random_range(0..n as u32), rng.random_range(0..n as u32));
        if a == b {
            continue;
        }
        match rng.random_range(0..3) {
            0 => assert_eq!(with.add_edge(a, b).unwrap(), without.add_edge(a, b).unwrap()),
            1 => {
                let (x, y) = (with.remove_edge(a, b).unwrap(), without.remove_edge(a, b).unwrap());
                assert_eq!(x == RemoveOutcome::Absent, y == RemoveOutcome::Absent);
            }
            _ => assert_eq!(with.connected(a, b).unwrap(), without.connected(a, b).unwrap()),
        }
    }
    with.check_invariants().unwrap();
    without.check_invariants().unwrap();
}

#[test]
fn promotions_bounded_by_insertions_times_levels() {
    let n = 128;
    let d = dc(n, Variant::Full, 16, 6);
    let mut rng = StdRng::seed_from_u64(6);
    let mut insertions = 0u64;
    for _ in 0..20_000 {
        let (a, b) = (rng.random_range(0..n as u32), rng.random_range(0..n as u32));
        if a == b {
            continue;
        }
        if rng.random_bool(0.5) {
            if d.add_edge(a, b).unwrap() != AddOutcome::Present {
                insertions += 1;
            }
        } else {
            d.remove_edge(a, b).unwrap();
        }
    }
    let lmax = d.levels().max_level() as u64;
    assert!(d.stats().promotions <= insertions * lmax, "{:?} vs {insertions}·{lmax}", d.stats());
}

#[test]
fn concurrent_smoke_reaches_consistent_quiescence() {
    let n = 48u32;
    for variant in Variant::ALL {
        let d = dc(n as usize, variant, 16, 8);
        std::thread::scope(|s| {
            for t in 0..4u64 {
                let d = &d;
                s.spawn(move || {
                    let mut rng = StdRng::seed_from_u64(100 + t);
                    for _ in 0..3000 {
                        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                        if a == b {
                            continue;
                        }
                        match rng.random_range(0..3) {
                            0 => drop(d.add_edge(a, b).unwrap()),
                            1 => drop(d.remove_edge(a, b).unwrap()),
                            _ => drop(d.connected(a, b).unwrap()),
                        }
                    }
                });
            }
        });
        d.check_invariants().unwrap_or_else(|v| panic!("{variant}: {v}"));
        let mut o = Oracle::new(n);
        for (e, _) in d.states().snapshot() {
            o.edges.insert((e.u(), e.v()));
        }
        for a in 0..n {
            for b in 0..n {
                assert_eq!(d.connected(a, b).unwrap(), o.connected(a, b), "{variant}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sequential_matches_oracle(seed in any::<u64>(), n in 2u32..24) {
        let d = dc(n as usize, Variant::Full, 16, seed);
        replay(n, &d, 300, seed, true);
    }
}
