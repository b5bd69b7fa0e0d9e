use magmaspace::magma::Magma;
use magmaspace::stone::CompiledEquation;
use magmaspace::terms::{parse_term, Equation, Term};
use proptest::prelude::*;
use rand::SeedableRng;

fn term(max_var: u8, depth: u32) -> impl Strategy<Value = Term> {
    let leaf = (0..max_var).prop_map(Term::var);
    leaf.prop_recursive(depth, 32, 2, |inner| {
        (inner.clone(), inner).prop_map(|(l, r)| Term::app(l, r))
    })
}

fn magma(size: usize) -> impl Strategy<Value = Magma> {
    proptest::collection::vec(0..size as u8, size * size)
        .prop_map(move |t| Magma::new(size, t).unwrap())
}

proptest! {
    #[test]
    fn term_text_round_trips(t in term(9, 5)) {
        prop_assert_eq!(parse_term(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn equation_text_round_trips(l in term(5, 4), r in term(5, 4)) {
        let e = Equation::new(&l, &r);
        prop_assert_eq!(e.to_string().parse::<Equation>().unwrap(), e);
    }

    #[test]
    fn canonical_form_ignores_side_order_and_names(l in term(5, 4), r in term(5, 4), perm in Just((0u8..5).collect::<Vec<u8>>()).prop_shuffle()) {
        let e = Equation::new(&l, &r);
        prop_assert_eq!(Equation::new(&r, &l), e.clone());
        let f = |v: u8| perm[v as usize];
        prop_assert_eq!(Equation::new(&l.rename(&f), &r.rename(&f)), e.clone());
        prop_assert_eq!(Equation::new(e.lhs(), e.rhs()), e.clone());
        prop_assert_eq!(e.num_vars(), {
            let mut v = l.vars();
            v.extend(r.vars());
            v.sort();
            v.dedup();
            v.len()
        });
    }

    #[test]
    fn conjugation_is_an_involution(l in term(4, 4), r in term(4, 4)) {
        let e = Equation::new(&l, &r);
        prop_assert_eq!(e.conjugate().conjugate(), e.clone());
        prop_assert_eq!(e.conjugate().signature(), e.signature());
        prop_assert_eq!(l.mirror().mirror(), l);
    }

    #[test]
    fn mirror_is_evaluation_in_the_opposite_magma(t in term(3, 5), m in magma(3), a in proptest::collection::vec(0u8..3, 3)) {
        prop_assert_eq!(m.eval_term(&t.mirror(), &a).unwrap(), m.opposite().eval_term(&t, &a).unwrap());
    }

    #[test]
    fn conjugate_pairing_is_pairing_in_the_opposite(l in term(3, 3), r in term(3, 3), m in magma(3)) {
        let e = Equation::new(&l, &r);
        let c = CompiledEquation::from_equation(&e).unwrap();
        let cc = CompiledEquation::from_equation(&e.conjugate()).unwrap();
        prop_assert_eq!(cc.count_satisfying(&m), c.count_satisfying(&m.opposite()));
    }
}

#[test]
fn random_magma_opposite_is_involutive() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for size in 1..6 {
        let m = Magma::random(size, &mut rng).unwrap();
        assert_eq!(m.opposite().opposite(), m);
    }
}
