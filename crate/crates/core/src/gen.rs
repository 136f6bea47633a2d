//! Seeded generators for trees, automata and update workloads.
//!
//! All randomness comes from [`Lcg`], a 64-bit linear congruential generator
//! with Knuth's MMIX constants: `x' = x · 6364136223846793005 +
//! 1442695040888963407 (mod 2^64)`, outputs taken from the high 31 bits
//! (`x' >> 33`). It is trivial to reproduce in any language.

use std::collections::HashMap;

use crate::automata::{Nfsta, Nfta, State};
use crate::formula::{Annotator, Formula};
use crate::tree::{Alphabet, ForestOrContext, Kind, NodeId, Symbol, TreeUpdate};

#[derive(Clone, Debug)]
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Lcg {
        let mut g = Lcg(seed);
        g.next_u32();
        g
    }

    pub fn next_u32(&mut self) -> u32 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 33) as u32
    }

    /// Uniform in `0..n` (up to negligible bias); `n > 0`.
    pub fn below(&mut self, n: usize) -> usize {
        let x = ((self.next_u32() as u64) << 31) | self.next_u32() as u64;
        (x % n as u64) as usize
    }

    /// True with probability `pct` percent.
    pub fn chance(&mut self, pct: u32) -> bool {
        self.below(100) < pct as usize
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.below(xs.len())]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeShape {
    /// Each node's parent is uniform among earlier nodes.
    Random,
    /// Parent among the last few nodes: long paths.
    Deep,
    /// Parent among the first few nodes: wide fan-out.
    Wide,
}

/// A tree with `n ≥ 1` nodes, ids `1..=n` in creation order, labels uniform
/// over the first `symbols` symbols.
pub fn random_tree(rng: &mut Lcg, n: usize, symbols: usize, shape: TreeShape) -> ForestOrContext {
    let mut t = ForestOrContext::empty();
    let mut slots = Vec::with_capacity(n);
    for i in 0..n {
        let parent = (i > 0).then(|| match shape {
            TreeShape::Random => rng.below(i),
            TreeShape::Deep => i - 1 - rng.below(i.min(3)),
            TreeShape::Wide => rng.below(i.min(4)),
        });
        let label = Symbol(rng.below(symbols) as u32);
        slots.push(t.add_node(parent.map(|p| slots[p]), NodeId(i as u64 + 1), label));
    }
    t
}

/// A forest (possibly empty) or a context with `n` labeled nodes. Every
/// node picks a uniform parent among earlier nodes or becomes a new root;
/// the hole of a context is placed the same way at a random step.
pub fn random_piece(rng: &mut Lcg, n: usize, symbols: usize, kind: Kind) -> ForestOrContext {
    let mut t = ForestOrContext::empty();
    let mut slots = Vec::with_capacity(n);
    let hole_at = (kind == Kind::Context).then(|| rng.below(n + 1));
    for i in 0..=n {
        let parent = if slots.is_empty() || rng.chance(30) { None } else { Some(*rng.pick(&slots)) };
        if hole_at == Some(i) {
            t.add_hole(parent);
        }
        if i < n {
            let label = Symbol(rng.below(symbols) as u32);
            slots.push(t.add_node(parent, NodeId(i as u64 + 1), label));
        }
    }
    t
}

pub fn alphabet(symbols: usize) -> Alphabet {
    let names: Vec<String> = (0..symbols).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    Alphabet::from_names(&names)
}

/// An automaton over `symbols` symbols whose transitions are each present
/// with probability `density` percent; Init sets are random nonempty subsets.
pub fn random_nfta(rng: &mut Lcg, states: usize, symbols: usize, density: u32) -> Nfta {
    let names = (0..states).map(|i| format!("q{i}")).collect();
    let mut init = Vec::new();
    for a in 0..symbols {
        let mut qs: Vec<State> = (0..states).filter(|_| rng.chance(35)).collect();
        if qs.is_empty() {
            qs.push(rng.below(states));
        }
        init.push((Symbol(a as u32), qs));
    }
    let mut delta = Vec::new();
    for a in 0..states {
        for b in 0..states {
            for c in 0..states {
                if rng.chance(density) {
                    delta.push((a, b, c));
                }
            }
        }
    }
    let q0 = rng.below(states);
    let qf = rng.below(states);
    // make acceptance reachable often enough to be interesting
    delta.push((q0, rng.below(states), qf));
    Nfta::new(names, alphabet(symbols), init, delta, q0, qf).expect("valid by construction")
}

/// A selecting automaton with `tuples` random tuples of arity `k`.
pub fn random_nfsta(rng: &mut Lcg, states: usize, symbols: usize, density: u32, k: usize, tuples: usize) -> Nfsta {
    let base = random_nfta(rng, states, symbols, density);
    let ts = (0..tuples).map(|_| (0..k).map(|_| rng.below(states)).collect()).collect();
    Nfsta::new(base, k, ts).expect("valid by construction")
}

/// Relative weights of the five updates.
#[derive(Clone, Copy, Debug)]
pub struct UpdateMix {
    pub relab: u32,
    pub subdiv: u32,
    pub insert_left: u32,
    pub insert_right: u32,
    pub delete: u32,
}

impl Default for UpdateMix {
    /// Inserts and deletes balanced so the tree size drifts slowly.
    fn default() -> Self {
        UpdateMix { relab: 20, subdiv: 10, insert_left: 15, insert_right: 15, delete: 40 }
    }
}

/// Random valid updates for a tree that changes only through them. Keeps
/// the node ids in a pool for O(1) sampling.
#[derive(Clone, Debug)]
pub struct UpdateGen {
    ids: Vec<NodeId>,
    pos: HashMap<NodeId, usize>,
    pub mix: UpdateMix,
    pub symbols: usize,
}

impl UpdateGen {
    pub fn new(ids: impl IntoIterator<Item = NodeId>, symbols: usize) -> UpdateGen {
        let mut ids: Vec<NodeId> = ids.into_iter().collect();
        ids.sort();
        let pos = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        UpdateGen { ids, pos, mix: UpdateMix::default(), symbols }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// A valid update for the tree represented by `f`.
    pub fn next<A: Annotator>(&self, rng: &mut Lcg, f: &Formula<A>) -> TreeUpdate {
        let m = self.mix;
        let total = m.relab + m.subdiv + m.insert_left + m.insert_right + m.delete;
        let root = f.subject_root();
        let a = Symbol(rng.below(self.symbols) as u32);
        let mut x = rng.below(total as usize) as u32;
        let v = *rng.pick(&self.ids);
        if x < m.relab {
            return TreeUpdate::Relab(v, a);
        }
        x -= m.relab;
        if x < m.subdiv {
            return TreeUpdate::Subdiv(v, a);
        }
        x -= m.subdiv;
        if x < m.insert_left + m.insert_right {
            if v == root {
                return TreeUpdate::Subdiv(v, a);
            }
            return if x < m.insert_left { TreeUpdate::InsertL(v, a) } else { TreeUpdate::InsertR(v, a) };
        }
        for _ in 0..8 {
            let v = *rng.pick(&self.ids);
            if v != root && f.is_subject_leaf(v) == Some(true) {
                return TreeUpdate::Delete(v);
            }
        }
        TreeUpdate::Relab(v, a)
    }

    /// Records the effect of an applied update.
    pub fn record(&mut self, u: &TreeUpdate, created: Option<NodeId>) {
        if let Some(c) = created {
            self.pos.insert(c, self.ids.len());
            self.ids.push(c);
        }
        if let TreeUpdate::Delete(v) = *u {
            if let Some(i) = self.pos.remove(&v) {
                let last = self.ids.pop().expect("nonempty");
                if i < self.ids.len() {
                    self.ids[i] = last;
                    self.pos.insert(last, i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcg_reference_values() {
        // x1 = 1442695040888963407 from seed 0; first output is x2 >> 33
        let mut g = Lcg(0);
        assert_eq!(g.next_u32(), (1442695040888963407u64 >> 33) as u32);
        let mut a = Lcg::new(42);
        let mut b = Lcg::new(42);
        for _ in 0..100 {
            assert_eq!(a.below(1000), b.below(1000));
        }
    }

    #[test]
    fn trees_have_requested_size() {
        let mut g = Lcg::new(1);
        for shape in [TreeShape::Random, TreeShape::Deep, TreeShape::Wide] {
            let t = random_tree(&mut g, 50, 3, shape);
            assert_eq!(t.preorder().len(), 50);
            assert!(t.is_tree());
        }
    }

    #[test]
    fn updates_stay_valid() {
        let mut g = Lcg::new(7);
        let t = random_tree(&mut g, 30, 2, TreeShape::Random);
        let mut f = Formula::construct(&t).unwrap();
        let mut gen = UpdateGen::new(t.preorder().iter().map(|x| x.id()), 2);
        for _ in 0..500 {
            let u = gen.next(&mut g, &f);
            let c = f.apply_update(&u).unwrap();
            gen.record(&u, c);
            assert_eq!(gen.len(), f.len());
        }
    }
}
