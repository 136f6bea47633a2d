//! The forest-algebra equations on random pieces, in the free algebra and
//! in a transition algebra.

use forestq::gen::{random_piece, Lcg};
use forestq::laws::{violated_axioms, FreeAlgebra, TransitionAlgebra};
use forestq::tree::{Alphabet, Kind};

fn main() {
    let mut rng = Lcg::new(1);
    let al = Alphabet::from_names(&["a", "b"]);
    let piece = |k, rng: &mut Lcg| {
        let n = rng.below(4);
        random_piece(rng, n, 2, k)
    };
    let f = [piece(Kind::Forest, &mut rng), piece(Kind::Forest, &mut rng), piece(Kind::Forest, &mut rng)];
    let c = [piece(Kind::Context, &mut rng), piece(Kind::Context, &mut rng), piece(Kind::Context, &mut rng)];
    for (name, x) in ["f1", "f2", "f3", "c1", "c2", "c3"].iter().zip(f.iter().chain(&c)) {
        let term = x.to_term(&al);
        println!("{name} = {}", if term.is_empty() { "(empty)" } else { &term });
    }
    println!("free algebra violations: {:?}", violated_axioms(&FreeAlgebra, [&f[0], &f[1], &f[2]], [&c[0], &c[1], &c[2]]));

    let mut bad = 0;
    for _ in 0..1000 {
        let alg = TransitionAlgebra { n: 3, m: 1 };
        let f: Vec<_> = (0..3).map(|_| alg.random(&mut rng, Kind::Forest, 30)).collect();
        let c: Vec<_> = (0..3).map(|_| alg.random(&mut rng, Kind::Context, 10)).collect();
        bad += !violated_axioms(&alg, [&f[0], &f[1], &f[2]], [&c[0], &c[1], &c[2]]).is_empty() as usize;
    }
    println!("transition algebra: {bad} of 1000 random triples violate an equation");
}
