//! Local restructurings that keep the represented tree and change heights.

use super::{Annotator, FIdx, Formula, FormulaError, Op, Tag, NIL};
use crate::tree::equal_trees;

/// Rotation shapes. `a` variants rotate at a left-heavy node, `b` variants
/// at a right-heavy node (except 3b, which is left-heavy too).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RotationKind {
    /// `(A∘B)∘C → A∘(B∘C)`, both nodes of the same operation.
    R1a,
    /// `A∘(B∘C) → (A∘B)∘C`.
    R1b,
    /// `(A⊕B)⊙C → A⊕(B⊙C)` for a context `B`.
    R2a,
    /// `A⊕(B⊙C) → (A⊕B)⊙C` for a forest `A`.
    R2b,
    /// `(A⊕B)⊙C → (A⊙C)⊕B` for a context `A`.
    R3a,
    /// `(A⊙B)⊕C → (A⊕C)⊙B` for a forest `C`.
    R3b,
    /// 1b at the left child, then 1a (three concatenations).
    R4a,
    /// 1a at the right child, then 1b.
    R4b,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rotation {
    pub kind: RotationKind,
    pub height_reducing: bool,
}

impl<A: Annotator> Formula<A> {
    fn inner_op(&self, x: u32) -> Option<Op> {
        match self.nodes[x as usize].tag {
            Tag::Inner(op) => Some(op),
            Tag::Leaf(_) => None,
        }
    }

    /// The single rotation whose shape and balance conditions match at `v`,
    /// height reducing or height preserving.
    pub(crate) fn single_rotation(&self, v: u32) -> Option<Rotation> {
        use RotationKind::*;
        let op = self.inner_op(v)?;
        let n = &self.nodes[v as usize];
        if n.bal <= -2 {
            let w = n.left;
            let wop = self.inner_op(w)?;
            let bw = self.nodes[w as usize].bal;
            let kind = if op.is_concat() == wop.is_concat() {
                R1a
            } else if !op.is_concat() {
                match wop {
                    Op::ConcatHV => R2a,
                    Op::ConcatVH => R3a,
                    _ => return None,
                }
            } else if matches!(op, Op::ConcatHH | Op::ConcatVH) {
                R3b
            } else {
                return None;
            };
            let hr = match kind {
                R1a | R2a if bw < 0 => true,
                R1a | R2a if bw > 0 => false,
                R3a if bw > 0 => true,
                R3a if bw < 0 => false,
                R3b if bw > 0 => true,
                _ => return None,
            };
            Some(Rotation { kind, height_reducing: hr })
        } else if n.bal >= 2 {
            let w = n.right;
            let wop = self.inner_op(w)?;
            let kind = if op.is_concat() == wop.is_concat() {
                R1b
            } else if matches!(op, Op::ConcatHH | Op::ConcatHV) {
                R2b
            } else {
                return None;
            };
            (self.nodes[w as usize].bal > 0).then_some(Rotation { kind, height_reducing: true })
        } else {
            None
        }
    }

    /// Height reducing double rotation over three concatenations whose
    /// balances alternate.
    pub(crate) fn double_rotation(&self, v: u32) -> Option<Rotation> {
        if !self.inner_op(v)?.is_concat() {
            return None;
        }
        let n = &self.nodes[v as usize];
        let is_concat = |x: u32| self.inner_op(x).is_some_and(Op::is_concat);
        let kind = if n.bal <= -2 {
            let v2 = n.left;
            let m = &self.nodes[v2 as usize];
            (is_concat(v2) && m.bal > 0 && is_concat(m.right)).then_some(RotationKind::R4a)?
        } else if n.bal >= 2 {
            let v2 = n.right;
            let m = &self.nodes[v2 as usize];
            (is_concat(v2) && m.bal < 0 && is_concat(m.left)).then_some(RotationKind::R4b)?
        } else {
            return None;
        };
        Some(Rotation { kind, height_reducing: true })
    }

    /// A height reducing single rotation, or a height preserving one at a
    /// `⊙` node.
    pub(crate) fn simple_rotation(&self, v: u32) -> Option<Rotation> {
        self.single_rotation(v)
            .filter(|r| r.height_reducing || self.inner_op(v).is_some_and(|op| !op.is_concat()))
    }

    pub(crate) fn rotation_possible_raw(&self, v: u32) -> Option<Rotation> {
        self.simple_rotation(v).or_else(|| self.double_rotation(v))
    }

    pub(crate) fn height_reducing_rotation(&self, v: u32) -> Option<Rotation> {
        self.single_rotation(v)
            .filter(|r| r.height_reducing)
            .or_else(|| self.double_rotation(v))
    }

    pub(crate) fn preserving_apply_rotation(&self, v: u32) -> Option<Rotation> {
        self.single_rotation(v)
            .filter(|r| !r.height_reducing && self.inner_op(v).is_some_and(|op| !op.is_concat()))
    }

    /// The rotation the rebalancing algorithms would apply at `x`: a height
    /// reducing one (single or double) or a height preserving one at a `⊙` node.
    pub fn rotation_possible(&self, x: FIdx) -> Option<Rotation> {
        self.rotation_possible_raw(x.0)
    }

    /// Any single rotation whose balance conditions hold at `x`.
    pub fn single_rotation_at(&self, x: FIdx) -> Option<Rotation> {
        self.single_rotation(x.0)
    }

    /// Applies [`Formula::rotation_possible`] at `x` and returns the node `w'`
    /// that may need further work (for a double rotation, the `w'` of the
    /// second step).
    pub fn do_rotation(&mut self, x: FIdx) -> Result<FIdx, FormulaError> {
        let r = self.rotation_possible_raw(x.0).ok_or(FormulaError::NoRotation)?;
        Ok(FIdx(self.rotate(x.0, r, true)))
    }

    /// Applies the single rotation matching at `x`, including height
    /// preserving ones at `⊕` nodes.
    pub fn do_single_rotation(&mut self, x: FIdx) -> Result<FIdx, FormulaError> {
        let r = self.single_rotation(x.0).ok_or(FormulaError::NoRotation)?;
        Ok(FIdx(self.rotate(x.0, r, true)))
    }

    pub(crate) fn rotate(&mut self, v: u32, r: Rotation, propagate: bool) -> u32 {
        let w = match r.kind {
            RotationKind::R4a => {
                let v2 = self.nodes[v as usize].left;
                self.rotate_single(v2, RotationKind::R1b);
                self.double_rotations += 1;
                self.rotate_single(v, RotationKind::R1a)
            }
            RotationKind::R4b => {
                let v2 = self.nodes[v as usize].right;
                self.rotate_single(v2, RotationKind::R1a);
                self.double_rotations += 1;
                self.rotate_single(v, RotationKind::R1b)
            }
            k => self.rotate_single(v, k),
        };
        if propagate {
            let p = self.nodes[v as usize].parent;
            if p != NIL {
                self.propagate_heights(p);
            }
        }
        w
    }

    fn retype(&mut self, x: u32, concat: bool) {
        let n = &self.nodes[x as usize];
        let op = Op::typed(concat, self.kind_of(n.left), self.kind_of(n.right))
            .expect("rotation keeps operand kinds consistent");
        self.nodes[x as usize].tag = Tag::Inner(op);
    }

    /// Restructures at `v`; `v` keeps its index (as `v'`), the rotated child
    /// is reused as `w'`, which is returned.
    fn rotate_single(&mut self, v: u32, kind: RotationKind) -> u32 {
        use RotationKind::*;
        let audit = !self.lazy && self.audit.is_some();
        let before = audit.then(|| self.vals[v as usize].clone());
        let tree_before = if audit {
            let a = self.audit.as_mut().expect("audit on");
            let every = a.tree_sample_every;
            (every > 0 && self.rotations % every == 0).then(|| self.represented_tree())
        } else {
            None
        };

        let n = &self.nodes[v as usize];
        let (vl, vr) = (n.left, n.right);
        let v_cat = self.inner_op(v).expect("inner").is_concat();
        let w = match kind {
            R1a | R2a | R3a | R3b => vl,
            R1b | R2b => vr,
            R4a | R4b => unreachable!("double rotations are split"),
        };
        let w_cat = self.inner_op(w).expect("inner").is_concat();
        let (wl, wr) = (self.nodes[w as usize].left, self.nodes[w as usize].right);
        match kind {
            R1a | R2a => {
                self.link(w, wr, vr);
                self.link(v, wl, w);
            }
            R1b | R2b => {
                self.link(w, vl, wl);
                self.link(v, w, wr);
            }
            _ => {
                self.link(w, wl, vr);
                self.link(v, w, wr);
            }
        }
        // the two operations trade places (a no-op for 1a/1b)
        self.retype(w, v_cat);
        self.retype(v, w_cat);
        self.refresh(w);
        self.refresh(v);
        self.rotations += 1;

        if let Some(old) = before {
            let same = self.vals[v as usize] == old;
            let a = self.audit.as_mut().expect("audit on");
            a.value_checks += 1;
            if !same {
                a.value_mismatches += 1;
            }
        }
        if let Some(t0) = tree_before {
            let t1 = self.represented_tree();
            let ids0: Vec<_> = t0.preorder().iter().map(|n| n.id()).collect();
            let ids1: Vec<_> = t1.preorder().iter().map(|n| n.id()).collect();
            let same = equal_trees(&t0, &t1) && ids0 == ids1;
            let a = self.audit.as_mut().expect("audit on");
            a.tree_checks += 1;
            if !same {
                a.tree_mismatches += 1;
            }
        }
        w
    }
}
