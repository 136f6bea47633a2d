//! Apply a stream of updates and watch acceptance and answers change.

use forestq::automata::parse_automaton;
use forestq::engine::Engine;
use forestq::tree::{parse_tree_text, parse_update_script, write_update};

const SCRIPT: &str = "\
# drop one of the selected a-leaves, then add a fresh a-leaf next to node 2
delete 5
insertR 2 a
relab 3 b
subdiv 7 a
";

fn main() {
    let m = parse_automaton(include_str!("../data/pairs.aut")).unwrap();
    let alphabet = m.nfta().alphabet().clone();
    let t = parse_tree_text(include_str!("../data/pairs.tree"), |s| alphabet.get(s)).unwrap();
    let mut e = Engine::new(&t, m).unwrap();
    println!("initial: {:?}", e.answers());
    for (line, u) in parse_update_script(SCRIPT, |s| alphabet.get(s)).unwrap() {
        let created = e.apply_update(&u).unwrap();
        println!(
            "line {line}: {:<10} created {:?}  height {}  answers {:?}",
            write_update(&u, &alphabet),
            created.map(|v| v.0),
            e.height(),
            e.answers()
        );
    }
    println!("tree now: {}", e.formula().represented_tree().to_term(&alphabet));
}
