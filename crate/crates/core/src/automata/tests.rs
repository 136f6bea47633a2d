use super::*;

const ALTERNATING: &str = include_str!("../../data/alternating.aut");
const PAIRS: &str = include_str!("../../data/pairs.aut");

fn sym(n: &Nfta, s: &str) -> Symbol {
    n.alphabet().get(s).unwrap()
}

#[test]
fn parse_fixture() {
    let m = parse_automaton(ALTERNATING).unwrap();
    let n = m.nfta();
    assert_eq!(n.states(), 6);
    assert_eq!(n.delta().len(), 12);
    assert_eq!(m.arity(), 0);
    assert_eq!(m.tuples(), &[Vec::<State>::new()]);
    assert_eq!(n.init(sym(n, "b")), &[n.state("q3").unwrap()]);
    let again = parse_automaton(&m.to_text()).unwrap();
    assert_eq!(again, m);

    let p = parse_automaton(PAIRS).unwrap();
    assert_eq!(p.arity(), 2);
    let q = |s: &str| p.nfta().state(s).unwrap();
    assert_eq!(p.tuples(), &[vec![q("q3"), q("q5")]]);
    assert_eq!(p.full_mask(0), 0b11);
    assert_eq!(p.state_bit(0, q("q5")), 0b10);
    assert_eq!(parse_automaton(&p.to_text()).unwrap(), p);
}

#[test]
fn parse_errors_name_the_line() {
    let bad = ALTERNATING.replace("delta: q2 q3 q1", "delta: q2 q3");
    match parse_automaton(&bad) {
        Err(AutomatonError::Parse { line, .. }) => assert_eq!(line, 9),
        r => panic!("{r:?}"),
    }
    let bad = ALTERNATING.replace("init: b q3", "init: c q3");
    assert!(matches!(parse_automaton(&bad), Err(AutomatonError::Parse { line: 6, .. })));
    let bad = ALTERNATING.replace("q0: q0", "q0: q9");
    assert!(matches!(parse_automaton(&bad), Err(AutomatonError::Parse { line: 19, .. })));
    let bad = format!("{ALTERNATING}select: q1\nselect: q1 q2\n");
    assert!(matches!(parse_automaton(&bad), Err(AutomatonError::Parse { line: 22, .. })));
    assert!(matches!(parse_automaton("states: q\n"), Err(AutomatonError::Parse { .. })));
    assert!(matches!(parse_automaton("foo: x\n"), Err(AutomatonError::Parse { line: 1, .. })));
}

#[test]
fn duplicate_transitions_are_merged() {
    let text = format!("{ALTERNATING}delta: q1 q1 q2\n");
    assert_eq!(parse_automaton(&text).unwrap().nfta().delta().len(), 12);
}

#[test]
fn atomic_elements_of_alternating_automaton() {
    let m = parse_automaton(ALTERNATING).unwrap();
    let n = m.nfta();
    let q = |s: &str| n.state(s).unwrap();
    let a = ta_atomic(sym(n, "a"), false, n).unwrap();
    // an a-leaf takes q1 and is read by q0 -> qF, q1 -> q2 and q3 -> q4
    let want: Vec<_> = [(q("q0"), q("qF")), (q("q1"), q("q2")), (q("q3"), q("q4"))]
        .into_iter()
        .map(|(x, y)| (Signature::Forest(x, y), 0))
        .collect();
    assert_eq!(a.iter(), want);
    let ah = ta_atomic(sym(n, "a"), true, n).unwrap();
    assert!(ah.contains(Signature::Context((q("q1"), q("q2")), (q("q1"), q("q2"))), 0));
    assert!(!ah.contains(Signature::Context((q("q1"), q("q2")), (q("q3"), q("q2"))), 0));
    assert_eq!(ta_atomic(Symbol(7), false, n), Err(AutomatonError::UnknownSymbol(Symbol(7))));
}

#[test]
fn empty_transitions_give_empty_elements() {
    let n = Nfta::new(vec!["p".into(), "f".into()], Alphabet::from_names(&["a"]), vec![(Symbol(0), vec![0])], vec![], 0, 1)
        .unwrap();
    assert!(ta_atomic(Symbol(0), false, &n).unwrap().is_empty());
    assert!(ta_atomic(Symbol(0), true, &n).unwrap().is_empty());
}

#[test]
fn extended_atomic_marks_selecting_states() {
    let m = parse_automaton(PAIRS).unwrap();
    let n = m.nfta();
    let q = |s: &str| n.state(s).unwrap();
    let e = eta_atomic(sym(n, "a"), false, &m, 0).unwrap();
    assert_eq!(e.mask_bits(), 2);
    // an a-leaf taking q3, read by q0 -> qF or q6 -> q7
    assert!(e.contains(Signature::Forest(q("q0"), q("qF")), 0b01));
    assert!(e.contains(Signature::Forest(q("q6"), q("q7")), 0b01));
    assert!(!e.contains(Signature::Forest(q("q6"), q("q7")), 0));
    // a b-leaf never takes a selecting state
    let b = eta_atomic(sym(n, "b"), false, &m, 0).unwrap();
    assert_eq!(b.visited_mask(), 0);
    assert_eq!(e.project(), ta_atomic(sym(n, "a"), false, n).unwrap());
}

#[test]
fn accepting_signature() {
    let m = parse_automaton(ALTERNATING).unwrap();
    let n = m.nfta();
    let mut e = Element::empty(Kind::Forest, n.states(), 0);
    assert!(!is_accepting_signature(&e, n).unwrap());
    e.insert(Signature::Forest(n.q0(), n.qf()), 0);
    assert!(is_accepting_signature(&e, n).unwrap());
    let c = Element::empty(Kind::Context, n.states(), 0);
    assert!(is_accepting_signature(&c, n).is_err());
}
