use magmaspace::geometry::{clique_geometry, edge_lengths, PointSet};
use magmaspace::graph::{condense, Closure, ImplicationGraph, SelfPairs};
use proptest::prelude::*;

fn graph() -> ImplicationGraph {
    // Cliques {0,1}, {2}, {3,4,5} with 0 ⇒ 2 ⇒ 3.
    let pairs = [(0, 1), (1, 0), (0, 2), (2, 3), (3, 4), (4, 5), (5, 3)];
    ImplicationGraph::from_pairs(6, pairs, Closure::Transitive).unwrap()
}

fn rotate(coords: &[f64], a: f64, b: f64, shift: [f64; 3]) -> Vec<f64> {
    let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
    coords
        .chunks(3)
        .flat_map(|p| {
            let (x, y) = (ca * p[0] - sa * p[1], sa * p[0] + ca * p[1]);
            let (y, z) = (cb * y - sb * p[2], sb * y + cb * p[2]);
            [x + shift[0], y + shift[1], z + shift[2]]
        })
        .collect()
}

proptest! {
    #[test]
    fn rigid_motions_preserve_edge_statistics(
        coords in proptest::collection::vec(-1.0f64..1.0, 18),
        a in 0.0f64..6.3,
        b in 0.0f64..6.3,
        shift in proptest::array::uniform3(-5.0f64..5.0),
    ) {
        let g = graph();
        let c = condense(&g);
        let p = PointSet::new(3, coords.clone());
        let q = PointSet::new(3, rotate(&coords, a, b, shift));
        for convention in [SelfPairs::Include, SelfPairs::Exclude] {
            let (s, t) = (edge_lengths(&p, &g, &c, convention).unwrap(), edge_lengths(&q, &g, &c, convention).unwrap());
            for (x, y) in [(&s.reversible, &t.reversible), (&s.atomic, &t.atomic), (&s.strict, &t.strict)] {
                prop_assert_eq!(x.count, y.count);
                prop_assert!((x.mean - y.mean).abs() < 1e-9);
                prop_assert!((x.max - y.max).abs() < 1e-9);
            }
        }
        let (gp, gq) = (clique_geometry(&p, &c, 0.002).unwrap(), clique_geometry(&q, &c, 0.002).unwrap());
        for (x, y) in gp.cliques.iter().zip(&gq.cliques) {
            prop_assert!((x.spread - y.spread).abs() < 1e-9);
            prop_assert_eq!(x.radius, y.radius);
        }
    }
}

#[test]
fn edge_counts_follow_the_self_pair_convention() {
    let g = graph();
    let c = condense(&g);
    let p = PointSet::new(3, (0..18).map(|i| i as f64).collect());
    let inc = edge_lengths(&p, &g, &c, SelfPairs::Include).unwrap();
    let exc = edge_lengths(&p, &g, &c, SelfPairs::Exclude).unwrap();
    assert_eq!(inc.reversible.count, 4 + 1 + 9);
    assert_eq!(exc.reversible.count, 2 + 6);
    assert_eq!(inc.reversible.count + inc.strict.count, g.total());
    assert_eq!(exc.reversible.count + exc.strict.count, g.total());
    // Atomic edges {0,1}→{2} and {2}→{3,4,5}.
    assert_eq!(inc.atomic.count, 2 + 3);
    assert!(edge_lengths(&PointSet::new(3, vec![0.0; 9]), &g, &c, SelfPairs::Include).is_err());
}
