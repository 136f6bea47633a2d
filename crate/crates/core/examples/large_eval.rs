//! Acceptance on a million-node tree with an eight-state automaton, then a
//! thousand updates.
//!
//! cargo run --release --example large_eval

use std::time::Instant;

use forestq::automata::Nfsta;
use forestq::engine::Engine;
use forestq::gen::{random_nfta, random_tree, Lcg, TreeShape, UpdateGen};

fn main() {
    let n = 1_000_000;
    let mut rng = Lcg::new(8);
    let t = random_tree(&mut rng, n, 3, TreeShape::Random);
    let m = Nfsta::boolean(random_nfta(&mut rng, 8, 3, 15));
    let start = Instant::now();
    let mut e = Engine::new(&t, m).unwrap();
    println!("built in {:.2?}: height {}, accepted {}", start.elapsed(), e.height(), e.is_accepted());
    let mut gen = UpdateGen::new(t.preorder().iter().map(|x| x.id()), 3);
    let start = Instant::now();
    for _ in 0..1000 {
        let u = gen.next(&mut rng, e.formula());
        let c = e.apply_update(&u).unwrap();
        gen.record(&u, c);
    }
    println!("1000 updates in {:.2?}: height {}, accepted {}", start.elapsed(), e.height(), e.is_accepted());
}
