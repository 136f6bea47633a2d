//! List the answers of a selecting automaton, then step through them one
//! completion at a time.

use forestq::automata::parse_automaton;
use forestq::engine::Engine;
use forestq::tree::parse_tree_text;

fn main() {
    let m = parse_automaton(include_str!("../data/pairs.aut")).unwrap();
    let alphabet = m.nfta().alphabet().clone();
    let t = parse_tree_text(include_str!("../data/pairs.tree"), |s| alphabet.get(s)).unwrap();
    let mut e = Engine::new(&t, m).unwrap();

    let mut s = e.enum_start();
    while let Some(a) = e.next_answer(&mut s).unwrap() {
        let ids: Vec<String> = a.iter().map(|v| v.0.to_string()).collect();
        let st = e.last_complete_stats();
        println!("{}  (last completion: {} calls, height {})", ids.join(" "), st.calls, st.height);
    }
    println!("worst calls/height over the session: {:.2}", s.worst_ratio);
}
