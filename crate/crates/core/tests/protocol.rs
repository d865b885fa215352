//! Protocol rounds: limits, polygon rules, schedules and the dense replay.

use ghzgrid::network::{
    build_grid, enumerate_cycles, herald_links, memory_id, Coord, Direction, GridSpec, HeraldedGraph, RegionLevel,
};
use ghzgrid::oracle::replay;
use ghzgrid::protocol::{
    apply_x_rules, execute_round, plan_route, plan_schedule, run_on_graph, AbortReason, Action, KHop, LinkWeights,
    ProtocolConfig, RoundRunner, RoundTrace, Scheduler,
};
use ghzgrid::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(n: usize, a: (usize, usize), b: (usize, usize)) -> GridSpec {
    GridSpec::new(n, Coord::new(a.0, a.1), Coord::new(b.0, b.1)).unwrap()
}

#[test]
fn noiseless_full_heralding_delivers_a_bell_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 2..=5 {
        for (a, b) in [((0, 0), (n - 1, n - 1)), ((0, n - 1), (n - 1, 0)), ((0, 0), (0, 1)), ((n / 2, 0), (n / 2, n - 1))] {
            for scheduler in [Scheduler::ConsumerGreedy, Scheduler::LinearSweep] {
                for k in [KHop::Hops(1), KHop::Global] {
                    let mut cfg = ProtocolConfig::new(spec(n, a, b), 1.0, 1.0);
                    cfg.scheduler = scheduler;
                    cfg.k_hop = k;
                    let out = execute_round(&cfg, &mut rng).unwrap();
                    assert_eq!(out.aborted, None);
                    assert!((out.coherent_information().unwrap() - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn no_links_means_disconnected() {
    let cfg = ProtocolConfig::new(spec(3, (0, 0), (2, 2)), 0.0, 0.9);
    let out = execute_round(&cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    assert_eq!(out.aborted, Some(AbortReason::Disconnected));
    assert!(out.final_state.is_none());
}

#[test]
fn single_chain_has_one_swap() {
    let s = spec(3, (0, 0), (0, 2));
    let g = HeraldedGraph::from_node_pairs(s, &[(0, 1), (1, 2)]).unwrap();
    let w = 0.8;
    let out = run_on_graph(&g, &LinkWeights::uniform(w), KHop::Hops(1), Scheduler::ConsumerGreedy, &mut ChaCha8Rng::seed_from_u64(0), None).unwrap();
    assert_eq!(out.swaps_performed, 1);
    let f = out.final_state.unwrap().fidelity();
    assert!((f - (w * w + (1.0 - w * w) / 4.0)).abs() < 1e-14);
}

#[test]
fn full_heralding_resolves_every_square() {
    for n in 2..=6 {
        let grid = build_grid(spec(n, (0, 0), (n - 1, n - 1)), RegionLevel::All).unwrap();
        let g = HeraldedGraph::full(&grid);
        for k in [KHop::Hops(1), KHop::Hops(2), KHop::Global] {
            let rules = apply_x_rules(&g, k);
            assert!(!rules.abort, "n={n} k={k}");
        }
        let rules = apply_x_rules(&g, KHop::Hops(1));
        // corners of consumer squares are not marked
        let consumer_corner = usize::from(n >= 2);
        assert_eq!(rules.marked.len(), (n - 1) * (n - 1) - consumer_corner);
        // what is left of the helper graph has no cycle at all
        let kept: Vec<_> = g
            .edges()
            .iter()
            .copied()
            .filter(|&(a, _)| rules.keeps(&g, a))
            .collect();
        let rest = HeraldedGraph::from_edges(*g.spec(), kept).unwrap();
        assert!(enumerate_cycles(&rest, 4 * n * n).cycles.iter().all(|c| c.nodes.contains(&(n * n - 1))));
    }
}

#[test]
fn hexagon_away_from_consumers_aborts_for_k1() {
    // 2x3 block of nodes {0,1,2,3,4,5} in a 3x3 grid, outer 6-cycle only
    let s = spec(3, (2, 0), (2, 2));
    let g = HeraldedGraph::from_node_pairs(s, &[(0, 1), (1, 2), (2, 5), (5, 4), (4, 3), (3, 0)]).unwrap();
    assert!(apply_x_rules(&g, KHop::Hops(1)).abort);
    assert!(!apply_x_rules(&g, KHop::Hops(2)).abort);
    assert!(!apply_x_rules(&g, KHop::Global).abort);
    let rules = apply_x_rules(&g, KHop::Hops(2));
    assert_eq!(rules.marked, vec![memory_id(5, Direction::Left)]);
}

#[test]
fn polygon_through_a_consumer_does_not_abort() {
    let s = spec(3, (0, 0), (2, 2));
    let g = HeraldedGraph::from_node_pairs(s, &[(0, 1), (1, 2), (2, 5), (5, 4), (4, 3), (3, 0), (5, 8)]).unwrap();
    let rules = apply_x_rules(&g, KHop::Hops(1));
    assert!(!rules.abort);
    let out = run_on_graph(&g, &LinkWeights::uniform(1.0), KHop::Hops(1), Scheduler::LinearSweep, &mut ChaCha8Rng::seed_from_u64(4), None).unwrap();
    assert!((out.coherent_information().unwrap() - 1.0).abs() < 1e-12);
}

/// Two helper squares sharing a column plus a dangling helper: the two
/// bottom-right corners measure their left memories and the lone helper
/// memory is pruned.
#[test]
fn corner_and_leaf_rules() {
    let s = spec(4, (0, 0), (3, 3));
    let pairs = [
        (0, 1), (1, 2), (1, 5), (2, 6), (5, 6), // square {1,2,5,6}
        (5, 9), (6, 10), (9, 10), // square {5,6,9,10}
        (10, 11), (11, 15), // to Bob
        (9, 13), // dangling helper 13
    ];
    let g = HeraldedGraph::from_node_pairs(s, &pairs).unwrap();
    let rules = apply_x_rules(&g, KHop::Hops(1));
    assert!(!rules.abort);
    assert_eq!(rules.marked, vec![memory_id(6, Direction::Left), memory_id(10, Direction::Left)]);
    assert!(rules.leaves.contains(&memory_id(13, Direction::Up)));
    let plan = plan_route(&g, &rules).unwrap();
    assert!(plan.x_measured.contains(&memory_id(13, Direction::Up)));
    assert!(plan.x_measured.contains(&memory_id(6, Direction::Left)));
    assert!(plan.x_measured.contains(&memory_id(10, Direction::Left)));
}

#[test]
fn greedy_order_grows_from_alice() {
    // consumers at nodes 3 and 10 of a 4x4 grid
    let s = spec(4, (0, 3), (2, 2));
    let pairs = [(3, 2), (2, 6), (2, 1), (1, 5), (6, 5), (6, 10), (5, 4), (5, 9), (4, 8)];
    let g = HeraldedGraph::from_node_pairs(s, &pairs).unwrap();
    let rules = apply_x_rules(&g, KHop::Hops(1));
    let plan = plan_route(&g, &rules).unwrap();
    let sched = plan_schedule(&g, &plan, Scheduler::ConsumerGreedy);
    assert_eq!(&sched.nodes()[..4], &[2, 6, 1, 5]);
    // the square {1,2,5,6} is resolved at node 6, so node 5 never holds two main-state memories
    assert_eq!(rules.marked, vec![memory_id(6, Direction::Left)]);
    let out = run_on_graph(&g, &LinkWeights::uniform(1.0), KHop::Hops(1), Scheduler::ConsumerGreedy, &mut ChaCha8Rng::seed_from_u64(9), None).unwrap();
    assert!((out.coherent_information().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn linear_sweep_visits_row_major_skipping_consumers() {
    let s = spec(3, (0, 0), (2, 2));
    let grid = build_grid(s, RegionLevel::All).unwrap();
    let g = HeraldedGraph::full(&grid);
    let rules = apply_x_rules(&g, KHop::Global);
    let plan = plan_route(&g, &rules).unwrap();
    let sched = plan_schedule(&g, &plan, Scheduler::LinearSweep);
    assert_eq!(sched.nodes(), vec![1, 2, 3, 4, 5, 6, 7]);
    // Alice's down link leads into {3, 6}, cut off by the marked memories
    // of nodes 4 and 7, so she uses her right link and that pair idles
    let skipped: Vec<usize> = sched.visits.iter().filter(|v| v.action == Action::Skip).map(|v| v.node).collect();
    assert_eq!(skipped, vec![3, 6]);
}

fn traced(cfg: &ProtocolConfig, seed: u64) -> (ghzgrid::protocol::RoundOutcome, RoundTrace) {
    let runner = RoundRunner::new(*cfg).unwrap();
    runner.run_traced(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn rounds_match_dense_replay() {
    let mut checked = 0;
    let mut seed = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    while checked < 50 {
        seed += 1;
        let consumers = [((0, 0), (2, 2)), ((0, 1), (1, 1)), ((0, 2), (1, 0)), ((1, 0), (1, 2))][seed as usize % 4];
        let mut cfg = ProtocolConfig::new(spec(3, consumers.0, consumers.1), rng.gen_range(0.5..1.0), rng.gen_range(0.7..1.0));
        cfg.scheduler = if seed % 2 == 0 { Scheduler::LinearSweep } else { Scheduler::ConsumerGreedy };
        cfg.k_hop = if seed % 3 == 0 { KHop::Hops(1) } else { KHop::Global };
        let (out, trace) = traced(&cfg, seed);
        let Some(state) = out.final_state else { continue };
        let (ids, rho) = replay(&trace.links, &trace.ops).unwrap();
        assert_eq!(ids.len(), 2, "seed {seed}");
        assert!(ids.contains(&state.qubits()[0]) && ids.contains(&state.qubits()[1]));
        let (diag, off) = rho.ghz_diagonal_coefficients().unwrap();
        assert!(off < 1e-10);
        let dev = diag.iter().zip(&trace.uncorrected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-10, "seed {seed}: deviation {dev:e}\n{:?}", trace.lines);
        checked += 1;
    }
}

#[test]
fn schedulers_agree_on_identical_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut compared = 0;
    for round in 0..200 {
        let n = 3 + round % 2;
        let a = (rng.gen_range(0..n), rng.gen_range(0..n));
        let mut b = a;
        while b == a {
            b = (rng.gen_range(0..n), rng.gen_range(0..n));
        }
        let s = spec(n, a, b);
        let grid = build_grid(s, RegionLevel::All).unwrap();
        let g = herald_links(&grid, rng.gen_range(0.5..1.0), &mut rng).unwrap();
        let w = LinkWeights::uniform(rng.gen_range(0.5..1.0));
        let k = if round % 2 == 0 { KHop::Global } else { KHop::Hops(1) };
        let x = run_on_graph(&g, &w, k, Scheduler::ConsumerGreedy, &mut rng, None).unwrap();
        let y = run_on_graph(&g, &w, k, Scheduler::LinearSweep, &mut rng, None).unwrap();
        assert_eq!(x.aborted, y.aborted);
        assert_eq!(x.swaps_performed, y.swaps_performed);
        if let (Some(p), Some(q)) = (&x.final_state, &y.final_state) {
            assert!(p.max_abs_diff(q) < 1e-10, "round {round}");
            compared += 1;
        }
    }
    assert!(compared > 100);
}

#[test]
fn trace_lines_have_the_declared_shape() {
    let cfg = ProtocolConfig::new(spec(3, (0, 0), (2, 2)), 1.0, 0.95);
    let (_, trace) = traced(&cfg, 3);
    assert!(!trace.lines.is_empty());
    for line in &trace.lines {
        let parts: Vec<&str> = line.split(' ').collect();
        assert_eq!(parts.len(), 3, "{line}");
        assert!(parts[0].starts_with("node=("));
        assert!(parts[1].starts_with("action="));
        assert!(parts[2].starts_with("state_qubits="));
    }
}

#[test]
fn fixed_seed_is_deterministic() {
    let mut cfg = ProtocolConfig::new(spec(4, (0, 1), (3, 2)), 0.7, 0.9);
    cfg.distill_rounds = 3;
    let runner = RoundRunner::new(cfg).unwrap();
    for seed in 0..20 {
        let a = runner.run(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = runner.run(&mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn no_abort_at_full_heralding() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in 2..=6 {
        for k in [1, 2] {
            let mut cfg = ProtocolConfig::new(spec(n, (0, 0), (n - 1, n / 2)), 1.0, 0.9);
            cfg.k_hop = KHop::Hops(k);
            assert_eq!(execute_round(&cfg, &mut rng).unwrap().aborted, None);
        }
    }
}

#[test]
fn invalid_configuration_names_the_field() {
    let mut cfg = ProtocolConfig::new(spec(3, (0, 0), (2, 2)), 0.5, 0.2);
    match RoundRunner::new(cfg) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "fidelity"),
        other => panic!("unexpected {other:?}"),
    }
    cfg.link_fidelity = 0.9;
    cfg.link_prob = 1.2;
    assert!(matches!(RoundRunner::new(cfg), Err(Error::Config { .. })));
}
