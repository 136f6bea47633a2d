use std::collections::BTreeSet;

use proptest::prelude::*;

use forestq::automata::Element;
use forestq::engine::Engine;
use forestq::formula::{within_log_bound, Formula};
use forestq::gen::{random_nfsta, random_piece, random_tree, Lcg, TreeShape, UpdateGen};
use forestq::laws::{violated_axioms, FreeAlgebra, TransitionAlgebra};
use forestq::oracle::{oracle_eval, oracle_select, OracleConfig};
use forestq::tree::{equal_trees, Alphabet, ForestOrContext, Kind};

fn shape(i: u8) -> TreeShape {
    [TreeShape::Random, TreeShape::Deep, TreeShape::Wide][i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The formula tracks a reference tree updated node by node, keeps its
    /// invariants and stays within the height bound.
    #[test]
    fn formula_follows_reference_tree(seed in any::<u64>(), n in 1usize..300, sh in 0u8..3, steps in 0usize..200) {
        let mut rng = Lcg::new(seed);
        let t = random_tree(&mut rng, n, 3, shape(sh));
        let mut f = Formula::construct(&t).unwrap();
        let mut reference = t.clone();
        let mut gen = UpdateGen::new(t.preorder().iter().map(|x| x.id()), 3);
        for _ in 0..steps {
            let u = gen.next(&mut rng, &f);
            let fresh = f.next_fresh_id();
            let c = f.apply_update(&u).unwrap();
            if let Some(c) = c {
                prop_assert_eq!(c, fresh);
            }
            reference = reference.apply_update(&u, fresh).unwrap();
            gen.record(&u, c);
            let size = reference.node_count() as u64;
            // a single node is a height-1 formula; the bound is vacuous there
            let ok = if size == 1 { f.height() == 1 } else { within_log_bound(f.height(), size) };
            prop_assert!(ok, "height {} for {} nodes", f.height(), size);
        }
        let got = f.represented_tree();
        prop_assert!(equal_trees(&got, &reference));
        let ids = |t: &ForestOrContext| t.preorder().iter().map(|x| x.id()).collect::<Vec<_>>();
        prop_assert_eq!(ids(&got), ids(&reference));
        let rep = f.audit();
        prop_assert!(rep.is_ok(), "{:?}", rep);
    }

    /// Writing a tree as a term and reading it back gives the same tree.
    #[test]
    fn terms_round_trip(seed in any::<u64>(), n in 0usize..30, context in any::<bool>()) {
        let mut rng = Lcg::new(seed);
        let kind = if context { Kind::Context } else { Kind::Forest };
        let d = random_piece(&mut rng, n, 3, kind);
        let mut al = Alphabet::from_names(&["a", "b", "c"]);
        let back = ForestOrContext::from_term(&d.to_term(&al), &mut al).unwrap();
        prop_assert!(equal_trees(&d, &back));
        prop_assert_eq!(back.kind(), d.kind());
    }

    #[test]
    fn free_algebra_laws(seed in any::<u64>()) {
        let mut rng = Lcg::new(seed);
        let mut piece = |k| {
            let n = rng.below(6);
            random_piece(&mut rng, n, 2, k)
        };
        let f = [piece(Kind::Forest), piece(Kind::Forest), piece(Kind::Forest)];
        let c = [piece(Kind::Context), piece(Kind::Context), piece(Kind::Context)];
        let bad = violated_axioms(&FreeAlgebra, [&f[0], &f[1], &f[2]], [&c[0], &c[1], &c[2]]);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn transition_algebra_laws(seed in any::<u64>(), n in 1usize..5, m in 0u32..3, pct in 5u32..60) {
        let mut rng = Lcg::new(seed);
        let alg = TransitionAlgebra { n, m };
        let f: Vec<Element> = (0..3).map(|_| alg.random(&mut rng, Kind::Forest, pct)).collect();
        let c: Vec<Element> = (0..3).map(|_| alg.random(&mut rng, Kind::Context, pct / 3)).collect();
        let bad = violated_axioms(&alg, [&f[0], &f[1], &f[2]], [&c[0], &c[1], &c[2]]);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    /// Answers equal the reference after every update, and come sorted
    /// without duplicates.
    #[test]
    fn enumeration_matches_reference(seed in any::<u64>(), n in 1usize..40, states in 2usize..5, k in 0usize..3, tuples in 1usize..3) {
        let mut rng = Lcg::new(seed);
        let m = random_nfsta(&mut rng, states, 2, 35, k, tuples);
        let t = random_tree(&mut rng, n, 2, TreeShape::Random);
        let mut e = Engine::new(&t, m).unwrap();
        let mut gen = UpdateGen::new(t.preorder().iter().map(|x| x.id()), 2);
        for step in 0..4 {
            if step > 0 {
                let u = gen.next(&mut rng, e.formula());
                let c = e.apply_update(&u).unwrap();
                gen.record(&u, c);
            }
            let tree = e.formula().represented_tree();
            prop_assert_eq!(e.is_accepted(), oracle_eval(e.nfsta().nfta(), &tree));
            let want = oracle_select(e.nfsta(), &tree, &OracleConfig::default()).unwrap();
            let got = e.answers();
            let order = e.formula().leaf_order();
            let rank = |v| order.iter().position(|&x| x == v).unwrap();
            let keys: Vec<Vec<usize>> = got.iter().map(|a| a.iter().map(|&v| rank(v)).collect()).collect();
            prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
            let set: BTreeSet<_> = got.into_iter().collect();
            prop_assert_eq!(set, want);
        }
    }
}
