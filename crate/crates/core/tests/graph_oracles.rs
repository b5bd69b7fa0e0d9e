mod common;

use magmaspace::bitset::BitMatrix;
use magmaspace::graph::strongly_connected_components;
use magmaspace::par::Execution;

#[test]
fn small_preorders_match_brute_force() {
    for seed in 0..1000 {
        let (n, pairs) = common::random_relation(seed);
        if let Err(e) = common::check_graph_against_oracles(n, &pairs, Execution::Sequential) {
            panic!("seed {seed} (n = {n}, pairs = {pairs:?}): {e}");
        }
    }
}

#[test]
fn parallel_condensation_agrees() {
    for seed in 0..200 {
        let (n, pairs) = common::random_relation(seed);
        common::check_graph_against_oracles(n, &pairs, Execution::Parallel).unwrap();
    }
}

#[test]
fn deep_cycle_needs_no_recursion() {
    // A 20000-vertex cycle plus a tail vertex; the SCC search is iterative,
    // so this does not overflow the stack.
    let n = 20_000;
    let mut adj = BitMatrix::identity(n);
    for i in 0..n - 1 {
        adj.set(i, i + 1);
    }
    adj.set(n - 2, 0);
    let sccs = strongly_connected_components(&adj);
    assert_eq!(sccs.len(), 2);
    assert_eq!(sccs[0].len(), n - 1);
    assert_eq!(sccs[1], vec![n - 1]);
}
