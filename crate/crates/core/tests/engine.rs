use std::collections::BTreeSet;

use forestq::automata::{parse_automaton, Element, Nfsta, Signature};
use forestq::engine::{Engine, EngineError};
use forestq::formula::FIdx;
use forestq::gen::{random_nfsta, random_tree, Lcg, TreeShape, UpdateGen};
use forestq::oracle::{oracle_eval, oracle_relevant, oracle_select, OracleConfig};
use forestq::tree::{parse_tree_text, ForestOrContext, NodeId, TreeUpdate};

fn load(aut: &str, tree: &str) -> (Nfsta, ForestOrContext) {
    let m = parse_automaton(aut).unwrap();
    let a = m.nfta().alphabet().clone();
    let t = parse_tree_text(tree, |s| a.get(s)).unwrap();
    (m, t)
}

fn alternating() -> (Nfsta, ForestOrContext) {
    load(include_str!("../data/alternating.aut"), include_str!("../data/alternating.tree"))
}

fn pairs() -> (Nfsta, ForestOrContext) {
    load(include_str!("../data/pairs.aut"), include_str!("../data/pairs.tree"))
}

/// Answers must be strictly increasing in lexicographic formula-leaf order.
fn assert_sorted(e: &Engine, answers: &[Vec<NodeId>]) {
    let order = e.formula().leaf_order();
    let rank = |v: NodeId| order.iter().position(|&x| x == v).unwrap();
    let keys: Vec<Vec<usize>> = answers.iter().map(|a| a.iter().map(|&v| rank(v)).collect()).collect();
    for w in keys.windows(2) {
        assert!(w[0] < w[1], "not strictly increasing: {w:?}");
    }
}

fn check_against_oracle(e: &mut Engine, ctx: &str) {
    let t = e.formula().represented_tree();
    let want = oracle_select(e.nfsta(), &t, &OracleConfig::default()).unwrap();
    let got = e.answers();
    assert_sorted(e, &got);
    let set: BTreeSet<Vec<NodeId>> = got.iter().cloned().collect();
    assert_eq!(set.len(), got.len(), "duplicates {ctx}");
    assert_eq!(set, want, "{ctx}");
    assert_eq!(e.is_accepted(), oracle_eval(e.nfsta().nfta(), &t), "{ctx}");
}

#[test]
fn alternating_fixture_is_accepted() {
    let (m, t) = alternating();
    let e = Engine::new(&t, m.clone()).unwrap();
    assert!(e.is_accepted());
    let (_, bad) = load(include_str!("../data/alternating.aut"), include_str!("../data/rejected.tree"));
    let e = Engine::new(&bad, m).unwrap();
    assert!(!e.is_accepted());
}

#[test]
fn pairs_fixture_has_two_answers() {
    let (m, t) = pairs();
    let mut e = Engine::new(&t, m).unwrap();
    let got = e.answers();
    assert_eq!(got.len(), 2);
    let set: BTreeSet<_> = got.iter().cloned().collect();
    let want: BTreeSet<_> = [vec![NodeId(5), NodeId(2)], vec![NodeId(6), NodeId(2)]].into_iter().collect();
    assert_eq!(set, want);
    // the first answer starts with whichever a-leaf comes first in leaf order
    let first = if e.precedes(NodeId(5), NodeId(6)).unwrap() { NodeId(5) } else { NodeId(6) };
    assert_eq!(got[0][0], first);
    assert_sorted(&e, &got);
}

#[test]
fn first_completion_and_last_node() {
    let (m, t) = pairs();
    let mut e = Engine::new(&t, m).unwrap();
    let s = e.enum_start();
    let a = e.complete(&s, None).unwrap().unwrap();
    assert_eq!(a.len(), 1);
    assert!(a[0] == NodeId(5) || a[0] == NodeId(6));
    let last = *e.formula().leaf_order().last().unwrap();
    assert_eq!(e.complete(&s, Some(last)).unwrap(), None);
}

#[test]
fn exhausted_session_stays_exhausted() {
    let (m, t) = pairs();
    let mut e = Engine::new(&t, m).unwrap();
    let mut s = e.enum_start();
    while e.next_answer(&mut s).unwrap().is_some() {}
    for _ in 0..3 {
        assert_eq!(e.next_answer(&mut s).unwrap(), None);
    }
}

#[test]
fn stale_sessions_are_rejected() {
    let (m, t) = pairs();
    let mut e = Engine::new(&t, m).unwrap();
    let mut s = e.enum_start();
    assert!(e.next_answer(&mut s).unwrap().is_some());
    e.apply_update(&TreeUpdate::Delete(NodeId(5))).unwrap();
    assert_eq!(e.next_answer(&mut s), Err(EngineError::StaleSession));
    assert_eq!(e.answers(), vec![vec![NodeId(6), NodeId(2)]]);
}

#[test]
fn boolean_query_has_one_empty_answer_iff_accepted() {
    let (m, t) = alternating();
    let mut e = Engine::new(&t, m.clone()).unwrap();
    assert_eq!(e.answers(), vec![Vec::<NodeId>::new()]);
    let (_, bad) = load(include_str!("../data/alternating.aut"), include_str!("../data/rejected.tree"));
    let mut e = Engine::new(&bad, m).unwrap();
    assert!(e.answers().is_empty());
}

#[test]
fn rejected_tree_has_empty_relevant_sets() {
    let (m, _) = pairs();
    let t = load(include_str!("../data/pairs.aut"), "1 - b -\n2 1 b -\n").1;
    let e = Engine::new(&t, m).unwrap();
    assert!(!e.is_accepted());
    let root = e.formula().root();
    assert!(e.r2(root, &[]).iter().all(Element::is_empty));
}

#[test]
fn insert_then_delete_restores_root_element() {
    let (m, t) = alternating();
    let mut e = Engine::new(&t, m).unwrap();
    let before = e.root_element();
    let b = e.nfsta().nfta().alphabet().get("b").unwrap();
    let v = e.apply_update(&TreeUpdate::InsertR(NodeId(3), b)).unwrap().unwrap();
    assert_ne!(e.root_element(), before);
    e.apply_update(&TreeUpdate::Delete(v)).unwrap();
    assert_eq!(e.root_element(), before);
    assert!(e.is_accepted());
}

#[test]
fn relabel_to_same_element_changes_nothing() {
    let (m, t) = alternating();
    let mut e = Engine::new(&t, m).unwrap();
    let before: Vec<_> = e.formula().leaf_order().iter().map(|&v| e.formula().value(e.formula().leaf_of(v).unwrap()).clone()).collect();
    let a = e.nfsta().nfta().alphabet().get("a").unwrap();
    e.apply_update(&TreeUpdate::Relab(NodeId(3), a)).unwrap();
    let after: Vec<_> = e.formula().leaf_order().iter().map(|&v| e.formula().value(e.formula().leaf_of(v).unwrap()).clone()).collect();
    assert_eq!(before, after);
}

#[test]
fn unknown_labels_are_rejected() {
    let (m, t) = alternating();
    let mut e = Engine::new(&t, m).unwrap();
    let r = e.apply_update(&TreeUpdate::Relab(NodeId(3), forestq::tree::Symbol(9)));
    assert!(matches!(r, Err(EngineError::Automaton(_))));
}

#[test]
fn random_instances_match_oracle_under_updates() {
    let mut rng = Lcg::new(2024);
    for trial in 0..150 {
        let states = 2 + rng.below(4);
        let k = 1 + rng.below(3);
        let n = 1 + rng.below(if k == 3 { 25 } else { 60 });
        let density = 20 + rng.below(30) as u32;
        let tuples = 1 + rng.below(3);
        let m = random_nfsta(&mut rng, states, 2, density, k, tuples);
        let t = random_tree(&mut rng, n, 2, TreeShape::Random);
        let mut e = Engine::new(&t, m).unwrap();
        check_against_oracle(&mut e, &format!("trial {trial} initial"));
        let mut gen = UpdateGen::new(t.preorder().iter().map(|x| x.id()), 2);
        for step in 0..4 {
            let u = gen.next(&mut rng, e.formula());
            let c = e.apply_update(&u).unwrap();
            gen.record(&u, c);
            check_against_oracle(&mut e, &format!("trial {trial} step {step} {u:?}"));
        }
    }
}

#[test]
fn update_coherence_with_fresh_annotation() {
    let mut rng = Lcg::new(77);
    for _ in 0..20 {
        let m = random_nfsta(&mut rng, 4, 3, 30, 2, 2);
        let t = random_tree(&mut rng, 40, 3, TreeShape::Random);
        let mut e = Engine::new(&t, m.clone()).unwrap();
        let mut gen = UpdateGen::new(t.preorder().iter().map(|x| x.id()), 3);
        for _ in 0..60 {
            let u = gen.next(&mut rng, e.formula());
            let c = e.apply_update(&u).unwrap();
            gen.record(&u, c);
        }
        let fresh = Engine::new(&e.formula().represented_tree(), m).unwrap();
        assert_eq!(e.formula().root_value(), fresh.formula().root_value());
        assert!(e.formula().audit().value_mismatches.is_empty());
    }
}

/// Every formula node of every prefix reached during enumeration: the
/// relevant sets agree with the run-level oracle.
#[test]
fn relevant_sets_match_run_oracle() {
    let mut rng = Lcg::new(5);
    let cfg = OracleConfig { max_nodes: 7, max_states: 4, ..Default::default() };
    let mut checked = 0;
    for _ in 0..40 {
        let states = 2 + rng.below(3);
        let tuples = 1 + rng.below(2);
        let m = random_nfsta(&mut rng, states, 2, 35, 2, tuples);
        let n = 2 + rng.below(5);
        let t = random_tree(&mut rng, n, 2, TreeShape::Random);
        let mut e = Engine::new(&t, m.clone()).unwrap();
        let tree = e.formula().represented_tree();
        let mut prefixes: Vec<Vec<NodeId>> = vec![vec![]];
        for a in e.answers() {
            prefixes.push(a[..1].to_vec());
        }
        prefixes.dedup();
        let nodes: Vec<FIdx> = {
            let mut v = vec![e.formula().root()];
            let mut i = 0;
            while i < v.len() {
                if let (Some(l), Some(r)) = (e.formula().left(v[i]), e.formula().right(v[i])) {
                    v.push(l);
                    v.push(r);
                }
                i += 1;
            }
            v
        };
        for p in &prefixes {
            for &x in &nodes {
                let sub = e.formula().represented_subtree(x);
                let got = e.r2(x, p);
                for s in 0..m.tuples().len() {
                    let want = oracle_relevant(&m, s, &tree, &sub, p, &cfg).unwrap();
                    let have: BTreeSet<(Signature, u32)> = got[s].iter().into_iter().collect();
                    assert_eq!(have, want, "prefix {p:?} node {x:?} track {s}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn session_caches_match_from_scratch_values() {
    let mut rng = Lcg::new(11);
    for _ in 0..30 {
        let m = random_nfsta(&mut rng, 3, 2, 35, 3, 2);
        let t = random_tree(&mut rng, 25, 2, TreeShape::Random);
        let mut e = Engine::new(&t, m).unwrap();
        let mut s = e.enum_start();
        let mut seen = 0;
        while let Some(_) = e.next_answer(&mut s).unwrap() {
            let prefix = s.prefix();
            let leaf = e.formula().leaf_of(*prefix.last().unwrap()).unwrap();
            let mut x = Some(leaf);
            while let Some(y) = x {
                assert_eq!(e.session_r1(&s, y), e.r1(y, &prefix));
                x = e.formula().parent(y);
            }
            seen += 1;
            if seen > 20 {
                break;
            }
        }
    }
}
