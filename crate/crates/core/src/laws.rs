//! The fourteen forest-algebra equations, checked on concrete elements.
//!
//! Numbering: 1-4 neutral elements, 5-10 associativity, 11-14 interaction
//! between concatenation and context application.

use crate::automata::{Element, Signature};
use crate::formula::Op;
use crate::gen::Lcg;
use crate::tree::{equal_trees, ForestOrContext, Kind};

/// A two-sorted algebra with the five typed operations.
pub trait ForestAlgebra {
    type Elem: Clone;
    fn empty_forest(&self) -> Self::Elem;
    fn hole(&self) -> Self::Elem;
    fn op(&self, op: Op, x: &Self::Elem, y: &Self::Elem) -> Self::Elem;
    fn same(&self, x: &Self::Elem, y: &Self::Elem) -> bool;
}

/// Numbers of the equations that fail for forests `f` and contexts `c`.
pub fn violated_axioms<A: ForestAlgebra>(alg: &A, f: [&A::Elem; 3], c: [&A::Elem; 3]) -> Vec<u8> {
    use Op::*;
    let o = |op, x: &A::Elem, y: &A::Elem| alg.op(op, x, y);
    let (e, h) = (alg.empty_forest(), alg.hole());
    let [f1, f2, f3] = f;
    let [c1, c2, c3] = c;
    let checks: [(u8, bool); 18] = [
        (1, alg.same(&o(ConcatHH, &e, f1), f1)),
        (1, alg.same(&o(ConcatHH, f1, &e), f1)),
        (2, alg.same(&o(ConcatHV, &e, c1), c1)),
        (2, alg.same(&o(ConcatVH, c1, &e), c1)),
        (3, alg.same(&o(ApplyVV, &h, c1), c1)),
        (3, alg.same(&o(ApplyVV, c1, &h), c1)),
        (4, alg.same(&o(ApplyVH, &h, f1), f1)),
        (5, alg.same(&o(ConcatHH, &o(ConcatHH, f1, f2), f3), &o(ConcatHH, f1, &o(ConcatHH, f2, f3)))),
        (6, alg.same(&o(ConcatHV, &o(ConcatHH, f1, f2), c1), &o(ConcatHV, f1, &o(ConcatHV, f2, c1)))),
        (7, alg.same(&o(ConcatVH, &o(ConcatVH, c1, f1), f2), &o(ConcatVH, c1, &o(ConcatHH, f1, f2)))),
        (8, alg.same(&o(ConcatVH, &o(ConcatHV, f1, c1), f2), &o(ConcatHV, f1, &o(ConcatVH, c1, f2)))),
        (9, alg.same(&o(ApplyVV, &o(ApplyVV, c1, c2), c3), &o(ApplyVV, c1, &o(ApplyVV, c2, c3)))),
        (10, alg.same(&o(ApplyVH, &o(ApplyVV, c1, c2), f1), &o(ApplyVH, c1, &o(ApplyVH, c2, f1)))),
        (11, alg.same(&o(ApplyVH, &o(ConcatHV, f1, c1), f2), &o(ConcatHH, f1, &o(ApplyVH, c1, f2)))),
        (12, alg.same(&o(ApplyVV, &o(ConcatHV, f1, c1), c2), &o(ConcatHV, f1, &o(ApplyVV, c1, c2)))),
        (13, alg.same(&o(ApplyVH, &o(ConcatVH, c1, f1), f2), &o(ConcatHH, &o(ApplyVH, c1, f2), f1))),
        (14, alg.same(&o(ApplyVV, &o(ConcatVH, c1, f1), c2), &o(ConcatVH, &o(ApplyVV, c1, c2), f1))),
        // the hole is neutral on both sides of the context action too
        (4, alg.same(&o(ApplyVV, &h, &h), &h)),
    ];
    let mut bad: Vec<u8> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    bad.sort_unstable();
    bad.dedup();
    bad
}

/// Forests and contexts themselves; equality up to node ids.
pub struct FreeAlgebra;

impl ForestAlgebra for FreeAlgebra {
    type Elem = ForestOrContext;

    fn empty_forest(&self) -> ForestOrContext {
        ForestOrContext::empty()
    }

    fn hole(&self) -> ForestOrContext {
        ForestOrContext::hole()
    }

    fn op(&self, op: Op, x: &ForestOrContext, y: &ForestOrContext) -> ForestOrContext {
        let r = if op.is_concat() { x.clone().concat(y.clone()) } else { x.clone().apply(y.clone()) };
        r.expect("operands typed by the caller")
    }

    fn same(&self, x: &ForestOrContext, y: &ForestOrContext) -> bool {
        equal_trees(x, y)
    }
}

/// Signature sets over `n` states with `m` mask bits.
#[derive(Clone, Copy, Debug)]
pub struct TransitionAlgebra {
    pub n: usize,
    pub m: u32,
}

impl TransitionAlgebra {
    /// A random element; each signature and mask group is present with
    /// probability `pct` percent.
    pub fn random(&self, rng: &mut Lcg, kind: Kind, pct: u32) -> Element {
        let mut e = Element::empty(kind, self.n, self.m);
        let n = self.n;
        for r in 0..1u32 << self.m {
            for a in 0..n {
                for b in 0..n {
                    match kind {
                        Kind::Forest => {
                            if rng.chance(pct) {
                                e.insert(Signature::Forest(a, b), r);
                            }
                        }
                        Kind::Context => {
                            for c in 0..n {
                                for d in 0..n {
                                    if rng.chance(pct) {
                                        e.insert(Signature::Context((a, b), (c, d)), r);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        e
    }
}

impl ForestAlgebra for TransitionAlgebra {
    type Elem = Element;

    fn empty_forest(&self) -> Element {
        Element::identity(Kind::Forest, self.n, self.m)
    }

    fn hole(&self) -> Element {
        Element::identity(Kind::Context, self.n, self.m)
    }

    fn op(&self, op: Op, x: &Element, y: &Element) -> Element {
        Element::combine(op, x, y).expect("operands typed by the caller")
    }

    fn same(&self, x: &Element, y: &Element) -> bool {
        x == y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::random_piece;

    #[test]
    fn free_algebra_satisfies_axioms() {
        let mut g = Lcg::new(3);
        for _ in 0..300 {
            let mut piece = |k| {
                let n = g.below(5);
                random_piece(&mut g, n, 2, k)
            };
            let f = [piece(Kind::Forest), piece(Kind::Forest), piece(Kind::Forest)];
            let c = [piece(Kind::Context), piece(Kind::Context), piece(Kind::Context)];
            let bad = violated_axioms(&FreeAlgebra, [&f[0], &f[1], &f[2]], [&c[0], &c[1], &c[2]]);
            assert!(bad.is_empty(), "{bad:?}");
        }
    }

    #[test]
    fn transition_algebra_satisfies_axioms() {
        let mut g = Lcg::new(4);
        for i in 0..200 {
            let alg = TransitionAlgebra { n: 1 + i % 4, m: (i % 3) as u32 };
            let f: Vec<Element> = (0..3).map(|_| alg.random(&mut g, Kind::Forest, 30)).collect();
            let c: Vec<Element> = (0..3).map(|_| alg.random(&mut g, Kind::Context, 10)).collect();
            let bad = violated_axioms(&alg, [&f[0], &f[1], &f[2]], [&c[0], &c[1], &c[2]]);
            assert!(bad.is_empty(), "{bad:?}");
        }
    }

    /// Swapping the operands of forest concatenation breaks the interaction laws.
    #[test]
    fn detects_a_broken_operation() {
        struct Swapped;
        impl ForestAlgebra for Swapped {
            type Elem = ForestOrContext;
            fn empty_forest(&self) -> ForestOrContext {
                ForestOrContext::empty()
            }
            fn hole(&self) -> ForestOrContext {
                ForestOrContext::hole()
            }
            fn op(&self, op: Op, x: &ForestOrContext, y: &ForestOrContext) -> ForestOrContext {
                match op {
                    Op::ConcatHH => FreeAlgebra.op(op, y, x),
                    _ => FreeAlgebra.op(op, x, y),
                }
            }
            fn same(&self, x: &ForestOrContext, y: &ForestOrContext) -> bool {
                equal_trees(x, y)
            }
        }
        let mut al = crate::tree::Alphabet::new();
        let t = |s: &str, al: &mut _| ForestOrContext::from_term(s, al).unwrap();
        let f = [t("a", &mut al), t("b", &mut al), t("c", &mut al)];
        let c = [t("a(_)", &mut al), t("b(_)", &mut al), t("c(_)", &mut al)];
        let bad = violated_axioms(&Swapped, [&f[0], &f[1], &f[2]], [&c[0], &c[1], &c[2]]);
        assert!(bad.contains(&11) && bad.contains(&13), "{bad:?}");
    }
}
