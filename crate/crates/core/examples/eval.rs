//! Decide whether a tree is accepted by an automaton.
//!
//! cargo run --example eval [tree-file automaton-file]

use forestq::automata::parse_automaton;
use forestq::engine::Engine;
use forestq::tree::{parse_tree_text, write_tree_text};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (aut, tree) = match args.as_slice() {
        [t, a] => (std::fs::read_to_string(a).unwrap(), std::fs::read_to_string(t).unwrap()),
        _ => (include_str!("../data/alternating.aut").to_string(), include_str!("../data/alternating.tree").to_string()),
    };
    let m = parse_automaton(&aut).unwrap();
    let alphabet = m.nfta().alphabet().clone();
    let t = parse_tree_text(&tree, |s| alphabet.get(s)).unwrap();
    let e = Engine::new(&t, m).unwrap();
    print!("{}", write_tree_text(&t, &alphabet));
    println!("formula height {} over {} nodes", e.height(), t.node_count());
    println!("accepted: {}", e.is_accepted());
}
