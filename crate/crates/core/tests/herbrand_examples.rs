use magmaspace::herbrand::{
    all_magmas, instance_countermodel, replay, verify, verify_semantically, HerbrandProof, Law,
    RuleMode, Substitution, Verdict,
};
use magmaspace::magma::Magma;
use magmaspace::stone::CompiledEquation;

const EQ13: &str = "u = v * (u * v)";
const EQ1557: &str = "x = (y * z) * (x * (y * z))";
const ASTERIX: &str = "x = y * (x * (y * x))";
const OBELIX: &str = "x = (y * x) * (y * (y * x))";

fn proof(source: &str, target: &str, steps: &[&str]) -> HerbrandProof {
    let (s, t) = (Law::parse(source).unwrap(), Law::parse(target).unwrap());
    let steps = steps
        .iter()
        .map(|x| Substitution::parse(x, &s, &t).unwrap())
        .collect();
    HerbrandProof::new(s, t, steps).unwrap()
}

fn small_magmas() -> Vec<Magma> {
    (1..=3).flat_map(all_magmas).collect()
}

fn proved_and_replayed(p: &HerbrandProof) -> usize {
    let v = verify(p).unwrap();
    assert_eq!(v.verdict, Verdict::Proved, "{:?}", p.steps);
    replay(&v, (&p.target.lhs, &p.target.rhs)).unwrap();
    v.trace.len()
}

#[test]
fn single_substitution_is_a_zero_rewrite_proof() {
    let p = proof(EQ13, EQ1557, &["u -> x, v -> y * z"]);
    let v = verify(&p).unwrap();
    assert_eq!(v.verdict, Verdict::Proved);
    assert!(v.trace.is_empty());
    assert!(v.by_instance.is_some());
}

#[test]
fn collapsing_y_and_z_loses_the_instance() {
    // v ↦ x*y yields x = (x*y)*(x*(x*y)), which does not entail the goal.
    let p = proof(EQ13, EQ1557, &["u -> x, v -> x * y"]);
    assert_eq!(verify(&p).unwrap().verdict, Verdict::NotFoundWithinBounds);
    let cm = instance_countermodel(&p, &small_magmas()).unwrap();
    assert!(cm.is_some());
    let mut schematic = p.clone();
    schematic.limits.mode = RuleMode::Schematic;
    assert_eq!(
        verify(&schematic).unwrap().verdict,
        Verdict::NotFoundWithinBounds
    );
}

#[test]
fn converse_needs_two_instances() {
    // With y ↦ u*u the first instance is u = ((u*u)*(v*(u*u)))*(u*((u*u)*(v*(u*u)))).
    let p = proof(
        EQ1557,
        EQ13,
        &[
            "x -> u, y -> u * u, z -> v * (u * u)",
            "x -> v, y -> u, z -> u",
        ],
    );
    let steps = proved_and_replayed(&p);
    assert!((1..=8).contains(&steps));
    let (l, r) = &p.instances().unwrap()[1];
    assert_eq!(
        format!("{} = {}", p.target.term_string(l), p.target.term_string(r)),
        "v = (u * u) * (v * (u * u))"
    );
}

#[test]
fn instances_that_fail_in_a_finite_model_prove_nothing() {
    let magmas = small_magmas();
    for steps in [
        [
            "x -> u, y -> u * v, z -> v * (u * u)",
            "x -> v, y -> u, z -> u",
        ],
        [
            "x -> u, y -> u * v, z -> v * (u * u)",
            "x -> v, y -> u, z -> v",
        ],
    ] {
        let mut p = proof(EQ1557, EQ13, &steps);
        for mode in [RuleMode::Ground, RuleMode::Schematic] {
            p.limits.mode = mode;
            assert_eq!(
                verify(&p).unwrap().verdict,
                Verdict::NotFoundWithinBounds,
                "{steps:?} {mode:?}"
            );
        }
        let cm = instance_countermodel(&p, &magmas)
            .unwrap()
            .expect("countermodel");
        let m = &magmas[cm.magma];
        let target = CompiledEquation::new(&p.target.lhs, &p.target.rhs).unwrap();
        let mut slots = Vec::new();
        let (a, b) = target.eval_sides(m, &cm.assignment, &mut slots);
        assert_ne!(a, b);
    }
}

#[test]
fn proofs_found_are_semantically_sound() {
    // Whenever the search proves a goal, no finite magma may satisfy all
    // instances at some assignment while violating the goal there.
    let magmas: Vec<Magma> = (1..=2).flat_map(all_magmas).collect();
    let laws = [
        "u = u * u",
        "u = v * u",
        "u * v = v * u",
        "u = (u * v) * u",
        "u * u = v * v",
        "u = v * (u * v)",
    ];
    let targets = [
        "x = x * x",
        "x * y = y * x",
        "x = (x * y) * x",
        "x * x = y * y",
        "x = y * (x * y)",
        "x = (y * x) * y",
    ];
    let subs = [
        "u -> x, v -> y",
        "u -> y, v -> x",
        "u -> x * y, v -> x",
        "u -> x, v -> x * y",
    ];
    let mut proved = 0;
    for l in laws {
        for t in targets {
            let (s, tl) = (Law::parse(l).unwrap(), Law::parse(t).unwrap());
            let steps: Vec<Substitution> = subs
                .iter()
                .filter_map(|x| {
                    let text: String = x
                        .split(", ")
                        .filter(|b| s.names.index_of(b.split(" -> ").next().unwrap()).is_some())
                        .collect::<Vec<_>>()
                        .join(", ");
                    Substitution::parse(&text, &s, &tl).ok()
                })
                .collect();
            if steps.is_empty() {
                continue;
            }
            let mut p = HerbrandProof::new(s, tl, steps).unwrap();
            p.limits.depth = 4;
            p.limits.max_visited = 20_000;
            if verify(&p).unwrap().verdict == Verdict::Proved {
                proved += 1;
                assert!(
                    instance_countermodel(&p, &magmas).unwrap().is_none(),
                    "{l} |- {t}"
                );
                assert!(
                    verify_semantically(&p, &magmas).unwrap().is_none(),
                    "{l} |- {t}"
                );
            }
        }
    }
    assert!(proved > 0);
}

#[test]
fn asterix_implies_obelix_on_all_small_magmas() {
    let asterix = CompiledEquation::from_equation(&ASTERIX.parse().unwrap()).unwrap();
    let obelix = CompiledEquation::from_equation(&OBELIX.parse().unwrap()).unwrap();
    let mut models = 0;
    for m in small_magmas() {
        if asterix.holds_in(&m) {
            models += 1;
            assert!(obelix.holds_in(&m), "{:?}", m.table());
        }
    }
    assert!(models > 1);
}
