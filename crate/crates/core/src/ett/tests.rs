use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;

use super::*;

fn e(a: u32, b: u32) -> Edge {
    Edge::new(a, b).unwrap()
}

/// Vertices reachable from `v` over `edges`.
fn reach(n: u32, edges: &BTreeSet<Edge>, v: u32) -> Vec<u32> {
    let mut seen = vec![false; n as usize];
    let mut queue = VecDeque::from([v]);
    seen[v as usize] = true;
    while let Some(x) = queue.pop_front() {
        for ed in edges {
            if ed.u() == x || ed.v() == x {
                let y = ed.other(x);
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    (0..n).filter(|&x| seen[x as usize]).collect()
}

/// Whether `tour` is some cyclic rotation of `expected`.
fn is_rotation(tour: &[TourItem], expected: &[TourItem]) -> bool {
    tour.len() == expected.len()
        && (0..tour.len()).any(|k| tour.iter().cycle().skip(k).take(tour.len()).eq(expected.iter()))
}

#[test]
fn create_rejects_zero() {
    assert!(matches!(EulerTour::new(0, 1), Err(Error::NoVertices)));
}

#[test]
fn create_gives_singletons() {
    let t = EulerTour::new(1, 1).unwrap();
    assert_eq!(t.find_root(0), (0, 0));
    let t = EulerTour::new(4, 1).unwrap();
    let roots: BTreeSet<_> = (0..4).map(|v| t.find_root(v).0).collect();
    assert_eq!(roots.len(), 4);
    assert!(!t.connected(0, 1));
    assert!(t.connected(2, 2));
    t.check_structure().unwrap();
}

#[test]
fn link_two_singletons() {
    let t = EulerTour::new(2, 7).unwrap();
    t.link(e(0, 1), true, None);
    let expect_root = if (t.priority(0), 0) > (t.priority(1), 1) { 0 } else { 1 };
    let tour = t.tour_of(0);
    let expected = [TourItem::Vertex(0), TourItem::Arc(0, 1), TourItem::Vertex(1), TourItem::Arc(1, 0)];
    assert!(is_rotation(&tour, &expected), "{tour:?}");
    assert!(t.connected(0, 1));
    // Arc nodes may outrank vertices; the sink is then an arc node.
    let (root, version) = t.find_root(0);
    assert_eq!(root, t.find_root(1).0);
    if t.is_vertex_node(root) {
        assert_eq!(root, expect_root);
    }
    assert!(version >= 1);
    assert_eq!(t.version(0), 1);
    assert_eq!(t.version(1), 1);
    t.check_structure().unwrap();
}

#[test]
fn cut_only_edge_restores_singletons() {
    let t = EulerTour::new(2, 3).unwrap();
    t.link(e(0, 1), false, None);
    let root = t.find_root(0).0;
    let before = t.version(root);
    t.cut(e(0, 1));
    assert!(!t.connected(0, 1));
    assert_eq!(t.tour_of(0), vec![TourItem::Vertex(0)]);
    assert_eq!(t.tour_of(1), vec![TourItem::Vertex(1)]);
    assert!(t.version(root) > before);
    assert_eq!(t.tree_edge_count(), 0);
    t.check_structure().unwrap();
}

#[test]
fn traversal_example_splits_at_middle_edge() {
    for seed in 0..20 {
        let t = EulerTour::new(7, seed).unwrap();
        for (a, b) in [(1, 2), (2, 3), (2, 4), (4, 5), (4, 6)] {
            t.link(e(a, b), false, None);
        }
        assert_eq!(t.component_of(1), vec![1, 2, 3, 4, 5, 6]);
        let tour = t.tour_of(1);
        assert_eq!(tour.len(), 6 + 2 * 5);
        t.cut(e(2, 4));
        assert_eq!(t.component_of(3), vec![1, 2, 3]);
        assert_eq!(t.component_of(6), vec![4, 5, 6]);
        assert!(!t.connected(1, 5));
        assert!(t.connected(5, 6));
        t.check_structure().unwrap();
    }
}

#[test]
fn path_cut_disconnects_ends() {
    let t = EulerTour::new(4, 9).unwrap();
    t.link(e(1, 2), false, None);
    t.link(e(2, 3), false, None);
    assert!(t.connected(1, 3));
    t.cut(e(2, 3));
    assert!(!t.connected(1, 3));
    assert!(t.connected(1, 2));
}

#[test]
fn each_link_bumps_both_roots_once() {
    let t = EulerTour::new(3, 11).unwrap();
    t.link(e(0, 1), false, None);
    assert_eq!((t.version(0), t.version(1), t.version(2)), (1, 1, 0));
    let r = t.find_root(0).0;
    let before = t.version(r);
    t.link(e(1, 2), false, None);
    assert_eq!(t.version(2), 1);
    assert!(t.version(r) > before);
}

#[test]
fn star_depth_is_logarithmic() {
    const N: u32 = 1024;
    let bound = 4.0 * f64::from(N).log2();
    let mut total = 0.0;
    for seed in 0..100 {
        let t = EulerTour::new(N as usize, seed).unwrap();
        for v in 1..N {
            t.link(e(0, v), false, None);
        }
        total += t.mean_depth();
    }
    let mean = total / 100.0;
    assert!(mean <= bound, "mean depth {mean} > {bound}");
}

#[test]
fn info_round_trip_and_flags() {
    let t = EulerTour::new(3, 5).unwrap();
    t.link(e(0, 1), false, None);
    t.link(e(1, 2), false, None);
    t.add_info(e(0, 2));
    assert_eq!(t.multiset(0).len(), 1);
    assert_eq!(t.multiset(2).len(), 1);
    let root = t.find_root(0).0;
    assert!(t.has_nontree(root));
    assert!(t.remove_info(e(0, 2)));
    assert!(t.multiset(0).is_empty() && t.multiset(2).is_empty());
    // Flags stay raised until a lock holder recalculates them.
    assert!(t.has_nontree(root));
    t.check_structure().unwrap();
}

#[test]
fn set_flags_up_is_idempotent() {
    let t = EulerTour::new(2, 5).unwrap();
    t.link(e(0, 1), false, None);
    t.set_flags_up(0);
    let flags: Vec<bool> = (0..t.arena.high_water()).map(|x| t.has_nontree(x)).collect();
    t.set_flags_up(0);
    let again: Vec<bool> = (0..t.arena.high_water()).map(|x| t.has_nontree(x)).collect();
    assert_eq!(flags, again);
}

#[test]
fn marks_track_tree_edges() {
    let t = EulerTour::new(4, 2).unwrap();
    t.link(e(0, 1), true, None);
    t.link(e(1, 2), false, None);
    t.link(e(2, 3), true, None);
    let root = t.tree_root_of(0);
    let mut marked = t.marked_edges(root);
    marked.sort_unstable();
    assert_eq!(marked, vec![e(0, 1), e(2, 3)]);
    t.set_tree_mark(e(0, 1), false);
    assert_eq!(t.marked_edges(t.tree_root_of(0)), vec![e(2, 3)]);
    t.cut(e(2, 3));
    assert!(t.marked_edges(t.tree_root_of(0)).is_empty());
    t.check_structure().unwrap();
}

#[test]
fn concurrent_reader_sees_one_component_during_link_and_cut() {
    use std::sync::atomic::{AtomicBool, Ordering};
    let t = EulerTour::new(64, 17).unwrap();
    for v in 1..32 {
        t.link(e(v - 1, v), false, None);
    }
    for v in 33..64 {
        t.link(e(v - 1, v), false, None);
    }
    let stop = AtomicBool::new(false);
    std::thread::scope(|s| {
        s.spawn(|| {
            while !stop.load(Ordering::Relaxed) {
                // 0..31 and 32..63 are internally connected throughout.
                assert!(t.connected(0, 31));
                assert!(t.connected(40, 63));
            }
        });
        for _ in 0..300 {
            t.link(e(31, 32), false, None);
            t.cut(e(31, 32));
        }
        stop.store(true, Ordering::Relaxed);
    });
    t.check_structure().unwrap();
}

#[derive(Debug, Clone)]
enum Op {
    Link(u32, u32),
    Cut(usize),
    Info(u32, u32),
}

fn ops(n: u32) -> impl Strategy<Value = Vec<Op>> {
    let op = prop_oneof![
        3 => (0..n, 0..n).prop_map(|(a, b)| Op::Link(a, b)),
        2 => any::<usize>().prop_map(Op::Cut),
        1 => (0..n, 0..n).prop_map(|(a, b)| Op::Info(a, b)),
    ];
    proptest::collection::vec(op, 1..80)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_link_cut_matches_oracle(seed in any::<u64>(), script in ops(12)) {
        let n = 12;
        let t = EulerTour::new(n as usize, seed).unwrap();
        let mut forest = BTreeSet::new();
        let mut last_version = vec![0u64; n as usize];
        for op in script {
            match op {
                Op::Link(a, b) if a != b => {
                    if !reach(n, &forest, a).contains(&b) {
                        let ed = e(a, b);
                        t.link(ed, false, None);
                        forest.insert(ed);
                    }
                }
                Op::Cut(k) if !forest.is_empty() => {
                    let ed = *forest.iter().nth(k % forest.len()).unwrap();
                    t.cut(ed);
                    forest.remove(&ed);
                }
                Op::Info(a, b) if a != b && reach(n, &forest, a).contains(&b) => {
                    t.add_info(e(a, b));
                }
                _ => {}
            }
            prop_assert!(t.check_structure().is_ok(), "{:?}", t.check_structure());
            for v in 0..n {
                let comp = reach(n, &forest, v);
                prop_assert_eq!(t.component_of(v), comp.clone());
                for w in 0..n {
                    prop_assert_eq!(t.connected(v, w), comp.contains(&w));
                }
                let x = v as usize;
                prop_assert!(t.version(v) >= last_version[x]);
                last_version[x] = t.version(v);
            }
            prop_assert_eq!(t.tree_edges(), forest.iter().copied().collect::<Vec<_>>());
        }
    }
}
