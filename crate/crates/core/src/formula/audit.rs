//! From-scratch checks of cached data, colors and the deletion invariant.

use num_bigint::BigUint;

use super::{Annotator, FIdx, Formula, Op, Tag, NIL};
use crate::tree::Kind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Color {
    /// `height ≤ 10·log₂(leaves)`
    Green,
    /// `height - 1 ≤ 10·log₂(leaves) < height`
    Yellow,
    Red,
}

/// `l^10 ≥ 2^h`, exactly.
fn pow10_ge_pow2(l: u64, h: u32) -> bool {
    if l == 0 {
        return false;
    }
    let lg = 63 - l.leading_zeros(); // floor(log2 l)
    if h <= 10 * lg {
        return true;
    }
    if h >= 10 * (lg + 1) {
        return false;
    }
    BigUint::from(l).pow(10) >= (BigUint::from(1u32) << h as usize)
}

/// Color of a subformula with the given height and leaf count.
pub fn color(height: u32, leaves: u64) -> Color {
    if pow10_ge_pow2(leaves, height) {
        Color::Green
    } else if height > 0 && pow10_ge_pow2(leaves, height - 1) {
        Color::Yellow
    } else {
        Color::Red
    }
}

/// `height ≤ 10·log₂(n)`.
pub fn within_log_bound(height: u32, n: u64) -> bool {
    pow10_ge_pow2(n, height)
}

/// `deficit ≤ (h·L − B) / (20h)`, i.e. `20h·2^(h/10) ≤ 21hL − B`.
fn deficit_ok(h: u32, leaves: u64, b: u64) -> bool {
    let r = 21 * h as i128 * leaves as i128 - b as i128;
    if r <= 0 {
        return false;
    }
    let lhs = BigUint::from(20 * h as u64).pow(10) << h as usize;
    BigUint::from(r as u128).pow(10) >= lhs
}

/// Findings of [`Formula::audit`]. Leaves are exempt from the color and
/// deficit checks (a single leaf has height 1 and is always yellow).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub structure_errors: Vec<String>,
    /// Nodes whose cached height, leaf count or balance differ from a recount.
    pub cache_mismatches: Vec<FIdx>,
    /// Nodes whose stored value differs from combining their children's values.
    pub value_mismatches: Vec<FIdx>,
    pub red_nodes: Vec<FIdx>,
    pub yellow_nodes: Vec<FIdx>,
    /// Non-green inner nodes violating the deletion invariant.
    pub deficit_violations: Vec<FIdx>,
    pub balance_total_mismatch: Option<(i64, i64)>,
}

impl AuditReport {
    /// No structural or cache problems and the deletion invariant holds.
    pub fn is_ok(&self) -> bool {
        self.structure_errors.is_empty()
            && self.cache_mismatches.is_empty()
            && self.value_mismatches.is_empty()
            && self.red_nodes.is_empty()
            && self.deficit_violations.is_empty()
            && self.balance_total_mismatch.is_none()
    }

    /// Every inner node is green.
    pub fn all_green(&self) -> bool {
        self.yellow_nodes.is_empty() && self.red_nodes.is_empty()
    }
}

impl<A: Annotator> Formula<A> {
    pub fn node_color(&self, x: FIdx) -> Color {
        let n = &self.nodes[x.index()];
        color(n.height, n.leaves as u64)
    }

    /// Recomputes everything from scratch and compares with the caches.
    pub fn audit(&self) -> AuditReport {
        let mut rep = AuditReport::default();
        if self.root == NIL {
            rep.structure_errors.push("no root".into());
            return rep;
        }
        if self.nodes[self.root as usize].parent != NIL {
            rep.structure_errors.push("root has a parent".into());
        }
        let mut order = Vec::new();
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            order.push(x);
            if order.len() > self.nodes.len() {
                rep.structure_errors.push("cycle".into());
                return rep;
            }
            let n = &self.nodes[x as usize];
            if let Tag::Inner(_) = n.tag {
                for c in [n.left, n.right] {
                    if c == NIL || self.nodes[c as usize].parent != x {
                        rep.structure_errors.push(format!("bad child link at {x}"));
                        return rep;
                    }
                    stack.push(c);
                }
            }
        }
        // (height, leaves, B)
        let mut info: Vec<(u32, u64, u64)> = vec![(0, 0, 0); self.nodes.len()];
        let mut leaf_count = 0usize;
        let mut total: i64 = 0;
        for &x in order.iter().rev() {
            let n = &self.nodes[x as usize];
            let (h, l, b, bal) = match n.tag {
                Tag::Leaf(a) => {
                    leaf_count += 1;
                    if self.leaf_of.get(&a.node) != Some(&x) {
                        rep.structure_errors.push(format!("leaf {x} not indexed as node {}", a.node));
                    }
                    if self.vals[x as usize] != self.annotator.leaf(a.label, a.holed) {
                        rep.value_mismatches.push(FIdx(x));
                    }
                    (1, 1, 0, 0)
                }
                Tag::Inner(op) => {
                    let (hl, ll, bl) = info[n.left as usize];
                    let (hr, lr, br) = info[n.right as usize];
                    let bal = hr as i32 - hl as i32;
                    let kinds = (self.kind_of(n.left), self.kind_of(n.right));
                    if op.operand_kinds() != kinds {
                        rep.structure_errors.push(format!("{x}: {op:?} over {kinds:?}"));
                    }
                    let v = self.annotator.combine(op, &self.vals[n.left as usize], &self.vals[n.right as usize]);
                    if self.vals[x as usize] != v {
                        rep.value_mismatches.push(FIdx(x));
                    }
                    (1 + hl.max(hr), ll + lr, bl + br + bal.unsigned_abs() as u64, bal)
                }
            };
            info[x as usize] = (h, l, b);
            total += bal.unsigned_abs() as i64;
            if n.height != h || n.leaves as u64 != l || n.bal != bal {
                rep.cache_mismatches.push(FIdx(x));
            }
            if matches!(n.tag, Tag::Inner(_)) {
                match color(h, l) {
                    Color::Green => {}
                    c => {
                        if c == Color::Red {
                            rep.red_nodes.push(FIdx(x));
                        } else {
                            rep.yellow_nodes.push(FIdx(x));
                        }
                        if !deficit_ok(h, l, b) {
                            rep.deficit_violations.push(FIdx(x));
                        }
                    }
                }
            }
        }
        if leaf_count != self.leaf_of.len() {
            rep.structure_errors.push(format!("{leaf_count} leaves, {} indexed nodes", self.leaf_of.len()));
        }
        if total != self.total_balance {
            rep.balance_total_mismatch = Some((self.total_balance, total));
        }
        if self.kind_of(self.root) != Kind::Forest {
            rep.structure_errors.push("root is not a forest".into());
        }
        if let Tag::Inner(Op::ConcatHH | Op::ConcatHV | Op::ConcatVH) = self.nodes[self.root as usize].tag {
            rep.structure_errors.push("root is a concatenation (more than one tree)".into());
        }
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_color_thresholds() {
        // 2^10 = 1024: 2 leaves allow height 10
        assert_eq!(color(10, 2), Color::Green);
        assert_eq!(color(11, 2), Color::Yellow);
        assert_eq!(color(12, 2), Color::Red);
        assert_eq!(color(1, 1), Color::Yellow);
        // 3^10 = 59049 and 2^15 = 32768 < 59049 < 2^16 = 65536
        assert_eq!(color(15, 3), Color::Green);
        assert_eq!(color(16, 3), Color::Yellow);
        assert!(within_log_bound(200, 1 << 20));
        assert!(!within_log_bound(201, 1 << 20));
    }

    #[test]
    fn deficit_matches_float_formula_away_from_boundary() {
        for h in 2..60u32 {
            for l in 1..200u64 {
                for b in [0u64, 5, 50, 500] {
                    let lhs = 2f64.powf(h as f64 / 10.0) - l as f64;
                    let rhs = (h as f64 * l as f64 - b as f64) / (20.0 * h as f64);
                    if (lhs - rhs).abs() > 1e-6 {
                        assert_eq!(deficit_ok(h, l, b), lhs <= rhs, "h={h} l={l} b={b}");
                    }
                }
            }
        }
    }
}
