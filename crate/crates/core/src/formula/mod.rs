//! Forest-algebra parse trees ("formulas") kept at logarithmic height
//! under tree updates.
//!
//! A formula is a binary tree whose leaves are one-node forests `a` or
//! atomic contexts `a⊡` and whose inner nodes are the five typed
//! operations of [`Op`]. Every inner node caches its height, leaf count
//! and balance, plus an optional value computed by an [`Annotator`]
//! (the automaton engine stores its algebra elements there).

mod audit;
mod expr;
mod rotation;

use std::collections::HashMap;

use thiserror::Error;

use crate::tree::{ForestOrContext, Kind, NodeId, Symbol, TreeUpdate};

pub use audit::{color, within_log_bound, AuditReport, Color};
pub use expr::FormulaExpr;
pub use rotation::{Rotation, RotationKind};

pub(crate) const NIL: u32 = u32::MAX;

/// Typed inner operation: concatenation `⊕` or context application `⊙`,
/// indexed by operand kinds (H = forest, V = context).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    ConcatHH,
    ConcatHV,
    ConcatVH,
    ApplyVV,
    ApplyVH,
}

impl Op {
    pub const ALL: [Op; 5] = [Op::ConcatHH, Op::ConcatHV, Op::ConcatVH, Op::ApplyVV, Op::ApplyVH];

    pub fn is_concat(self) -> bool {
        matches!(self, Op::ConcatHH | Op::ConcatHV | Op::ConcatVH)
    }

    pub fn result_kind(self) -> Kind {
        match self {
            Op::ConcatHH | Op::ApplyVH => Kind::Forest,
            _ => Kind::Context,
        }
    }

    pub fn operand_kinds(self) -> (Kind, Kind) {
        use Kind::*;
        match self {
            Op::ConcatHH => (Forest, Forest),
            Op::ConcatHV => (Forest, Context),
            Op::ConcatVH => (Context, Forest),
            Op::ApplyVV => (Context, Context),
            Op::ApplyVH => (Context, Forest),
        }
    }

    /// The concatenation or application typed for the given operand kinds.
    pub fn typed(concat: bool, left: Kind, right: Kind) -> Option<Op> {
        use Kind::*;
        match (concat, left, right) {
            (true, Forest, Forest) => Some(Op::ConcatHH),
            (true, Forest, Context) => Some(Op::ConcatHV),
            (true, Context, Forest) => Some(Op::ConcatVH),
            (false, Context, Context) => Some(Op::ApplyVV),
            (false, Context, Forest) => Some(Op::ApplyVH),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        if self.is_concat() {
            "⊕"
        } else {
            "⊙"
        }
    }
}

/// A formula leaf: the subject node it stands for, its label and whether
/// it is the atomic context `a⊡` (the node has children) or the forest `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Atom {
    pub node: NodeId,
    pub label: Symbol,
    pub holed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    Inner(Op),
    Leaf(Atom),
}

/// Handle of a formula node. Handles are reused after deletions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FIdx(pub(crate) u32);

impl FIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Values attached to formula nodes, recomputed bottom-up.
pub trait Annotator {
    type Value: Clone + Default + PartialEq;
    fn leaf(&self, label: Symbol, holed: bool) -> Self::Value;
    fn combine(&self, op: Op, left: &Self::Value, right: &Self::Value) -> Self::Value;
}

impl Annotator for () {
    type Value = ();
    fn leaf(&self, _: Symbol, _: bool) {}
    fn combine(&self, _: Op, _: &(), _: &()) {}
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("bad target {0}: {1}")]
    BadTarget(NodeId, &'static str),
    #[error("the tree is empty")]
    EmptyTree,
    #[error("input is not a tree")]
    NotATree,
    #[error("no rotation applies")]
    NoRotation,
    #[error("malformed formula: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug)]
pub(crate) struct FNode {
    pub(crate) tag: Tag,
    pub(crate) parent: u32,
    pub(crate) left: u32,
    pub(crate) right: u32,
    pub(crate) height: u32,
    pub(crate) leaves: u32,
    pub(crate) bal: i32,
}

/// Counters for rotation soundness checks (see [`Formula::set_rotation_audit`]).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RotationAudit {
    /// Check the represented tree on every n-th single rotation (0 = never).
    pub tree_sample_every: u64,
    pub value_checks: u64,
    pub value_mismatches: u64,
    pub tree_checks: u64,
    pub tree_mismatches: u64,
}

/// A balanced formula representing a tree, with per-node values from `A`.
pub struct Formula<A: Annotator = ()> {
    pub(crate) nodes: Vec<FNode>,
    pub(crate) vals: Vec<A::Value>,
    free: Vec<u32>,
    pub(crate) root: u32,
    leaf_of: HashMap<NodeId, u32>,
    root_id: NodeId,
    next_id: u64,
    annotator: A,
    total_balance: i64,
    /// During construction only heights are maintained; everything else is
    /// recomputed in one pass at the end.
    lazy: bool,
    rotations: u64,
    double_rotations: u64,
    audit: Option<RotationAudit>,
}

impl Formula<()> {
    /// Builds a formula for a nonempty tree.
    pub fn construct(t: &ForestOrContext) -> Result<Self, FormulaError> {
        Self::construct_with(t, ())
    }
}

impl<A: Annotator> Formula<A> {
    fn empty_with(annotator: A) -> Self {
        Formula {
            nodes: Vec::new(),
            vals: Vec::new(),
            free: Vec::new(),
            root: NIL,
            leaf_of: HashMap::new(),
            root_id: NodeId(0),
            next_id: 0,
            annotator,
            total_balance: 0,
            lazy: false,
            rotations: 0,
            double_rotations: 0,
            audit: None,
        }
    }

    /// Builds a formula for a nonempty tree in linear time, keeping the
    /// tree's node ids, and computes all values.
    pub fn construct_with(t: &ForestOrContext, annotator: A) -> Result<Self, FormulaError> {
        if t.is_empty() {
            return Err(FormulaError::EmptyTree);
        }
        if !t.is_tree() {
            return Err(FormulaError::NotATree);
        }
        let mut f = Self::empty_with(annotator);
        f.lazy = true;
        let pre = t.preorder();
        let root = pre[0];
        f.root_id = root.id();
        f.next_id = pre.iter().map(|n| n.id().0).max().unwrap_or(0) + 1;
        let r = f.alloc(Tag::Leaf(Atom { node: root.id(), label: root.label(), holed: false }));
        f.root = r;
        f.leaf_of.insert(root.id(), r);
        // Preorder: the first child subdivides its parent, later children are
        // inserted right of their left sibling.
        let mut stack: Vec<(crate::tree::NodeRef<'_>, Option<NodeId>)> = Vec::new();
        fn push_children<'a>(stack: &mut Vec<(crate::tree::NodeRef<'a>, Option<NodeId>)>, n: crate::tree::NodeRef<'a>) {
            let kids: Vec<_> = n.children().collect();
            for k in (0..kids.len()).rev() {
                let anchor = (k > 0).then(|| kids[k - 1].id());
                stack.push((kids[k], anchor));
            }
        }
        push_children(&mut stack, root);
        while let Some((n, left)) = stack.pop() {
            let upd = match left {
                None => TreeUpdate::Subdiv(n.parent().expect("non-root").id(), n.label()),
                Some(l) => TreeUpdate::InsertR(l, n.label()),
            };
            let w = f.graft(&upd, n.id())?;
            f.optimize_upwards(w);
            push_children(&mut stack, n);
        }
        f.optimize_all();
        f.lazy = false;
        f.recompute_all();
        // headroom so the first inserts after a build do not copy the arena
        let extra = f.nodes.len() / 2;
        f.nodes.reserve(extra);
        f.vals.reserve(extra);
        f.leaf_of.reserve(extra / 2);
        Ok(f)
    }

    // ---------------------------------------------------------------- access

    pub fn root(&self) -> FIdx {
        FIdx(self.root)
    }

    /// Id of the subject tree's root.
    pub fn subject_root(&self) -> NodeId {
        self.root_id
    }

    pub fn height(&self) -> u32 {
        self.nodes[self.root as usize].height
    }

    /// Number of subject nodes.
    pub fn len(&self) -> usize {
        self.leaf_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaf_of.is_empty()
    }

    /// Sum of |balance| over all nodes.
    pub fn total_balance(&self) -> i64 {
        self.total_balance
    }

    /// Single rotations performed so far (a double rotation counts twice).
    pub fn rotation_count(&self) -> u64 {
        self.rotations
    }

    pub fn double_rotation_count(&self) -> u64 {
        self.double_rotations
    }

    pub fn annotator(&self) -> &A {
        &self.annotator
    }

    pub fn tag(&self, x: FIdx) -> Tag {
        self.nodes[x.index()].tag
    }

    pub fn node_height(&self, x: FIdx) -> u32 {
        self.nodes[x.index()].height
    }

    pub fn node_leaves(&self, x: FIdx) -> u32 {
        self.nodes[x.index()].leaves
    }

    /// Height of the right child minus height of the left child.
    pub fn balance(&self, x: FIdx) -> i32 {
        self.nodes[x.index()].bal
    }

    pub fn left(&self, x: FIdx) -> Option<FIdx> {
        let l = self.nodes[x.index()].left;
        (l != NIL).then_some(FIdx(l))
    }

    pub fn right(&self, x: FIdx) -> Option<FIdx> {
        let r = self.nodes[x.index()].right;
        (r != NIL).then_some(FIdx(r))
    }

    pub fn parent(&self, x: FIdx) -> Option<FIdx> {
        let p = self.nodes[x.index()].parent;
        (p != NIL).then_some(FIdx(p))
    }

    pub fn is_leaf(&self, x: FIdx) -> bool {
        matches!(self.nodes[x.index()].tag, Tag::Leaf(_))
    }

    pub fn kind(&self, x: FIdx) -> Kind {
        self.kind_of(x.0)
    }

    /// The value computed for the subformula at `x`.
    pub fn value(&self, x: FIdx) -> &A::Value {
        &self.vals[x.index()]
    }

    pub fn root_value(&self) -> &A::Value {
        &self.vals[self.root as usize]
    }

    /// Formula leaf of a subject node.
    pub fn leaf_of(&self, v: NodeId) -> Option<FIdx> {
        self.leaf_of.get(&v).map(|&x| FIdx(x))
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.leaf_of.contains_key(&v)
    }

    /// The atom at a formula leaf.
    pub fn atom(&self, x: FIdx) -> Option<Atom> {
        match self.nodes[x.index()].tag {
            Tag::Leaf(a) => Some(a),
            Tag::Inner(_) => None,
        }
    }

    /// True if the subject node has no children.
    pub fn is_subject_leaf(&self, v: NodeId) -> Option<bool> {
        self.leaf_of(v).and_then(|x| self.atom(x)).map(|a| !a.holed)
    }

    pub fn label_of(&self, v: NodeId) -> Option<Symbol> {
        self.leaf_of(v).and_then(|x| self.atom(x)).map(|a| a.label)
    }

    /// Subject node ids in formula-leaf order (left to right).
    pub fn leaf_order(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            let n = &self.nodes[x as usize];
            match n.tag {
                Tag::Leaf(a) => out.push(a.node),
                Tag::Inner(_) => {
                    stack.push(n.right);
                    stack.push(n.left);
                }
            }
        }
        out
    }

    /// Subject node ids in unspecified order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.leaf_of.keys().copied()
    }

    /// The deeper child, if the balance is nonzero.
    pub fn child_d(&self, x: FIdx) -> Option<FIdx> {
        self.child_d_raw(x.0).map(FIdx)
    }

    /// The long path from `x`: repeatedly the strictly deeper child.
    pub fn long_path(&self, x: FIdx) -> Vec<FIdx> {
        let mut out = vec![x];
        let mut cur = x.0;
        while let Some(c) = self.child_d_raw(cur) {
            out.push(FIdx(c));
            cur = c;
        }
        out
    }

    /// Evaluates the formula in the free forest algebra.
    pub fn represented_tree(&self) -> ForestOrContext {
        self.represented_subtree(self.root())
    }

    /// Evaluates the subformula at `x` in the free forest algebra.
    pub fn represented_subtree(&self, x: FIdx) -> ForestOrContext {
        let mut out: Vec<ForestOrContext> = Vec::new();
        let mut stack = vec![(x.0, false)];
        while let Some((i, done)) = stack.pop() {
            let n = &self.nodes[i as usize];
            match n.tag {
                Tag::Leaf(a) => out.push(ForestOrContext::atom(a.node, a.label, a.holed)),
                Tag::Inner(op) if done => {
                    let r = out.pop().expect("right operand");
                    let l = out.pop().expect("left operand");
                    let v = if op.is_concat() { l.concat(r) } else { l.apply(r) };
                    out.push(v.expect("operand kinds match the tag"));
                }
                Tag::Inner(_) => {
                    stack.push((i, true));
                    stack.push((n.right, false));
                    stack.push((n.left, false));
                }
            }
        }
        out.pop().expect("one value")
    }

    /// Enables per-rotation soundness checks: every rotation compares the
    /// recomputed value at the rotated node with the value before, and every
    /// `tree_sample_every`-th rotation compares the represented tree.
    pub fn set_rotation_audit(&mut self, tree_sample_every: u64) {
        self.audit = Some(RotationAudit { tree_sample_every, ..Default::default() });
    }

    pub fn rotation_audit(&self) -> Option<&RotationAudit> {
        self.audit.as_ref()
    }

    // --------------------------------------------------------------- storage

    fn alloc(&mut self, tag: Tag) -> u32 {
        let node = FNode { tag, parent: NIL, left: NIL, right: NIL, height: 1, leaves: 1, bal: 0 };
        let val = match (self.lazy, tag) {
            (false, Tag::Leaf(a)) => self.annotator.leaf(a.label, a.holed),
            _ => A::Value::default(),
        };
        if let Some(i) = self.free.pop() {
            self.nodes[i as usize] = node;
            self.vals[i as usize] = val;
            i
        } else {
            self.nodes.push(node);
            self.vals.push(val);
            (self.nodes.len() - 1) as u32
        }
    }

    fn release(&mut self, x: u32) {
        self.total_balance -= self.nodes[x as usize].bal.unsigned_abs() as i64;
        self.nodes[x as usize].parent = NIL;
        self.nodes[x as usize].left = NIL;
        self.nodes[x as usize].right = NIL;
        self.nodes[x as usize].bal = 0;
        self.vals[x as usize] = A::Value::default();
        self.free.push(x);
    }

    pub(crate) fn kind_of(&self, x: u32) -> Kind {
        match self.nodes[x as usize].tag {
            Tag::Leaf(a) => {
                if a.holed {
                    Kind::Context
                } else {
                    Kind::Forest
                }
            }
            Tag::Inner(op) => op.result_kind(),
        }
    }

    pub(crate) fn child_d_raw(&self, x: u32) -> Option<u32> {
        let n = &self.nodes[x as usize];
        match n.bal {
            b if b < 0 => Some(n.left),
            b if b > 0 => Some(n.right),
            _ => None,
        }
    }

    /// `new` takes the place of `old` under `old`'s parent (or as root).
    fn place(&mut self, old: u32, new: u32) {
        let p = self.nodes[old as usize].parent;
        self.nodes[new as usize].parent = p;
        if p == NIL {
            self.root = new;
        } else if self.nodes[p as usize].left == old {
            self.nodes[p as usize].left = new;
        } else {
            self.nodes[p as usize].right = new;
        }
    }

    pub(crate) fn link(&mut self, parent: u32, left: u32, right: u32) {
        self.nodes[parent as usize].left = left;
        self.nodes[parent as usize].right = right;
        self.nodes[left as usize].parent = parent;
        self.nodes[right as usize].parent = parent;
    }

    /// Recomputes the cached data of `x` from its children.
    pub(crate) fn refresh(&mut self, x: u32) {
        let n = &self.nodes[x as usize];
        match n.tag {
            Tag::Leaf(a) => {
                if !self.lazy {
                    self.vals[x as usize] = self.annotator.leaf(a.label, a.holed);
                }
            }
            Tag::Inner(op) => {
                let (l, r) = (n.left as usize, n.right as usize);
                let (hl, hr) = (self.nodes[l].height, self.nodes[r].height);
                let bal = hr as i32 - hl as i32;
                let old = self.nodes[x as usize].bal;
                self.total_balance += bal.unsigned_abs() as i64 - old.unsigned_abs() as i64;
                let leaves = self.nodes[l].leaves + self.nodes[r].leaves;
                let m = &mut self.nodes[x as usize];
                m.height = 1 + hl.max(hr);
                m.bal = bal;
                m.leaves = leaves;
                if !self.lazy {
                    let v = self.annotator.combine(op, &self.vals[l], &self.vals[r]);
                    self.vals[x as usize] = v;
                }
            }
        }
    }

    fn refresh_to_root(&mut self, mut x: u32) {
        while x != NIL {
            self.refresh(x);
            x = self.nodes[x as usize].parent;
        }
    }

    /// Updates heights and balances upwards from `x` until a height is unchanged.
    pub(crate) fn propagate_heights(&mut self, mut x: u32) {
        while x != NIL {
            let n = &self.nodes[x as usize];
            let (hl, hr) = (self.nodes[n.left as usize].height, self.nodes[n.right as usize].height);
            let h = 1 + hl.max(hr);
            let bal = hr as i32 - hl as i32;
            let old_h = n.height;
            self.total_balance += bal.unsigned_abs() as i64 - n.bal.unsigned_abs() as i64;
            let m = &mut self.nodes[x as usize];
            m.bal = bal;
            m.height = h;
            if h == old_h {
                break;
            }
            x = m.parent;
        }
    }

    /// Recomputes every cache and value bottom-up.
    pub fn recompute_all(&mut self) {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            order.push(x);
            let n = &self.nodes[x as usize];
            if let Tag::Inner(_) = n.tag {
                stack.push(n.left);
                stack.push(n.right);
            }
        }
        for &x in order.iter().rev() {
            self.refresh(x);
        }
        self.total_balance = order.iter().map(|&x| self.nodes[x as usize].bal.unsigned_abs() as i64).sum();
    }

    // --------------------------------------------------------------- updates

    /// Structural part of an insertion: replaces the leaf of the target by a
    /// new inner node over it and a new leaf. Returns the new inner node.
    fn graft(&mut self, u: &TreeUpdate, new_id: NodeId) -> Result<u32, FormulaError> {
        let v = u.target();
        let x = *self.leaf_of.get(&v).ok_or(FormulaError::BadTarget(v, "no such node"))?;
        let Tag::Leaf(atom) = self.nodes[x as usize].tag else { unreachable!("leaf_of maps to leaves") };
        if self.leaf_of.contains_key(&new_id) {
            return Err(FormulaError::BadTarget(new_id, "id already in use"));
        }
        let (w, y) = match *u {
            TreeUpdate::Subdiv(_, a) => {
                // a leaf becomes b⊡ ⊙ a; an inner node becomes b⊡ ⊙ a⊡
                let y = self.alloc(Tag::Leaf(Atom { node: new_id, label: a, holed: atom.holed }));
                let op = if atom.holed { Op::ApplyVV } else { Op::ApplyVH };
                self.nodes[x as usize].tag = Tag::Leaf(Atom { holed: true, ..atom });
                let w = self.alloc(Tag::Inner(op));
                self.place(x, w);
                self.link(w, x, y);
                (w, y)
            }
            TreeUpdate::InsertL(_, a) | TreeUpdate::InsertR(_, a) => {
                if v == self.root_id {
                    return Err(FormulaError::BadTarget(v, "cannot insert a sibling of the root"));
                }
                let y = self.alloc(Tag::Leaf(Atom { node: new_id, label: a, holed: false }));
                let k = self.kind_of(x);
                let w;
                if matches!(u, TreeUpdate::InsertL(..)) {
                    w = self.alloc(Tag::Inner(Op::typed(true, Kind::Forest, k).expect("forest concat")));
                    self.place(x, w);
                    self.link(w, y, x);
                } else {
                    w = self.alloc(Tag::Inner(Op::typed(true, k, Kind::Forest).expect("forest concat")));
                    self.place(x, w);
                    self.link(w, x, y);
                }
                (w, y)
            }
            TreeUpdate::Relab(..) | TreeUpdate::Delete(_) => {
                return Err(FormulaError::BadTarget(v, "not an insertion"));
            }
        };
        self.leaf_of.insert(new_id, y);
        self.next_id = self.next_id.max(new_id.0 + 1);
        self.refresh(y);
        self.refresh(x);
        if self.lazy {
            self.refresh(w);
            let p = self.nodes[w as usize].parent;
            if p != NIL {
                self.propagate_heights(p);
            }
        } else {
            self.refresh_to_root(w);
        }
        Ok(w)
    }

    /// Applies any of the five updates. Returns the id of a created node.
    pub fn apply_update(&mut self, u: &TreeUpdate) -> Result<Option<NodeId>, FormulaError> {
        match *u {
            TreeUpdate::Relab(v, a) => self.relabel(v, a).map(|_| None),
            TreeUpdate::Delete(v) => self.remove(v).map(|_| None),
            _ => self.insert(u).map(Some),
        }
    }

    /// Subdiv, InsertL or InsertR, followed by rebalancing. The new node
    /// gets the next fresh id, which is returned.
    pub fn insert(&mut self, u: &TreeUpdate) -> Result<NodeId, FormulaError> {
        let id = NodeId(self.next_id);
        let w = self.graft(u, id)?;
        let mut v = w;
        let mut reduced = false;
        while v != NIL {
            if let Some(r) = self.rotation_possible_raw(v) {
                v = self.rotate(v, r, true);
                if r.height_reducing {
                    reduced = true;
                    break;
                }
            } else {
                v = self.up_if_deeper(v);
            }
        }
        if reduced {
            self.try_reduce_height(FIdx(v));
        }
        Ok(id)
    }

    /// Deletes a subject leaf (not the root) and rebalances.
    pub fn remove(&mut self, v: NodeId) -> Result<(), FormulaError> {
        let w = *self.leaf_of.get(&v).ok_or(FormulaError::BadTarget(v, "no such node"))?;
        let Tag::Leaf(atom) = self.nodes[w as usize].tag else { unreachable!() };
        if atom.holed {
            return Err(FormulaError::BadTarget(v, "not a leaf"));
        }
        if v == self.root_id {
            return Err(FormulaError::BadTarget(v, "cannot delete the root"));
        }
        let b0 = self.total_balance;
        let p = self.nodes[w as usize].parent;
        let mut ancestors = Vec::new();
        let mut a = self.nodes[p as usize].parent;
        while a != NIL {
            ancestors.push((a, self.nodes[a as usize].height));
            a = self.nodes[a as usize].parent;
        }
        let pn = &self.nodes[p as usize];
        let Tag::Inner(op) = pn.tag else { unreachable!() };
        let sib = if pn.left == w { pn.right } else { pn.left };
        self.place(p, sib);
        if !op.is_concat() {
            // the parent loses its only child: retype the hole path of the
            // remaining context down to the parent's leaf
            let mut path = Vec::new();
            let mut x = sib;
            loop {
                path.push(x);
                let n = &mut self.nodes[x as usize];
                match n.tag {
                    Tag::Leaf(at) => {
                        debug_assert!(at.holed);
                        n.tag = Tag::Leaf(Atom { holed: false, ..at });
                        break;
                    }
                    Tag::Inner(Op::ConcatVH) => {
                        n.tag = Tag::Inner(Op::ConcatHH);
                        x = n.left;
                    }
                    Tag::Inner(Op::ConcatHV) => {
                        n.tag = Tag::Inner(Op::ConcatHH);
                        x = n.right;
                    }
                    Tag::Inner(Op::ApplyVV) => {
                        n.tag = Tag::Inner(Op::ApplyVH);
                        x = n.right;
                    }
                    Tag::Inner(_) => unreachable!("context without hole path"),
                }
            }
            for &x in path.iter().rev() {
                self.refresh(x);
            }
        }
        self.leaf_of.remove(&v);
        self.release(w);
        self.release(p);
        let up = self.nodes[sib as usize].parent;
        self.refresh_to_root(up);

        let mut x = sib;
        let mut k = 0;
        while x != self.root {
            x = self.nodes[x as usize].parent;
            debug_assert_eq!(x, ancestors[k].0);
            let not_lower = self.nodes[x as usize].height >= ancestors[k].1;
            let budget = 20 * self.height() as i64;
            if not_lower && b0 - self.total_balance < budget {
                self.try_reduce_height(FIdx(x));
            }
            k += 1;
        }
        Ok(())
    }

    /// Changes the label of a subject node, keeping its plain/holed form.
    pub fn relabel(&mut self, v: NodeId, a: Symbol) -> Result<(), FormulaError> {
        let x = *self.leaf_of.get(&v).ok_or(FormulaError::BadTarget(v, "no such node"))?;
        if let Tag::Leaf(at) = self.nodes[x as usize].tag {
            self.nodes[x as usize].tag = Tag::Leaf(Atom { label: a, ..at });
        }
        self.refresh_to_root(x);
        Ok(())
    }

    fn up_if_deeper(&self, v: u32) -> u32 {
        let p = self.nodes[v as usize].parent;
        if p != NIL && self.child_d_raw(p) == Some(v) {
            p
        } else {
            NIL
        }
    }

    /// Lowers the height of a yellow subformula by rotations along its long
    /// path, fixing any yellow node its own rotations create.
    pub fn try_reduce_height(&mut self, v: FIdx) {
        let top = v.0;
        let mut v = v.0;
        loop {
            if self.nodes[v as usize].bal.abs() >= 2 {
                if let Some(r) = self.simple_rotation(v) {
                    v = self.rotate(v, r, true);
                } else {
                    v = self.child_d_raw(v).expect("nonzero balance");
                }
                continue;
            }
            // lowest node u with v on lp(u) where a rotation applies
            let mut u = v;
            let mut found = None;
            for _ in 0..8 {
                if u == top {
                    break;
                }
                let p = self.nodes[u as usize].parent;
                if p == NIL || self.child_d_raw(p) != Some(u) {
                    break;
                }
                u = p;
                if let Some(r) = self.rotation_possible_raw(u) {
                    found = Some((u, r));
                    break;
                }
            }
            match found {
                Some((u, r)) => v = self.rotate(u, r, true),
                None => return,
            }
        }
    }

    // ---------------------------------------------------- construction helpers

    fn optimize_upwards(&mut self, mut v: u32) {
        while v != NIL {
            if let Some(r) = self.height_reducing_rotation(v) {
                self.rotate(v, r, true);
                return;
            }
            let n = &self.nodes[v as usize];
            if matches!(n.tag, Tag::Inner(op) if !op.is_concat()) && n.bal <= -7 {
                let mut moved = false;
                while v != NIL {
                    let Some(r) = self.preserving_apply_rotation(v) else { break };
                    self.rotate(v, r, true);
                    v = self.child_d_raw(v).unwrap_or(NIL);
                    moved = true;
                }
                if moved {
                    continue;
                }
            }
            v = self.up_if_deeper(v);
        }
    }

    fn optimize_all(&mut self) {
        enum Step {
            Visit(u32),
            Rotate(u32),
        }
        let mut stack = vec![Step::Visit(self.root)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Visit(x) => {
                    let n = &self.nodes[x as usize];
                    if let Tag::Inner(_) = n.tag {
                        stack.push(Step::Rotate(x));
                        stack.push(Step::Visit(n.right));
                        stack.push(Step::Visit(n.left));
                    }
                }
                Step::Rotate(x) => {
                    if !matches!(self.nodes[x as usize].tag, Tag::Inner(_)) {
                        continue;
                    }
                    self.refresh(x);
                    if let Some(r) = self.rotation_possible_raw(x) {
                        self.rotate(x, r, false);
                        let n = &self.nodes[x as usize];
                        stack.push(Step::Rotate(x));
                        stack.push(Step::Rotate(n.right));
                        stack.push(Step::Rotate(n.left));
                    }
                }
            }
        }
    }
}

impl<A: Annotator> Formula<A> {
    /// The same formula with another annotator; all values are recomputed.
    pub fn with_annotator<B: Annotator>(self, annotator: B) -> Formula<B> {
        let mut f = Formula {
            vals: vec![B::Value::default(); self.nodes.len()],
            nodes: self.nodes,
            free: self.free,
            root: self.root,
            leaf_of: self.leaf_of,
            root_id: self.root_id,
            next_id: self.next_id,
            annotator,
            total_balance: self.total_balance,
            lazy: false,
            rotations: self.rotations,
            double_rotations: self.double_rotations,
            audit: self.audit,
        };
        f.recompute_all();
        f
    }

    /// True if `x` is the right child of its parent.
    pub fn is_right_child(&self, x: FIdx) -> bool {
        let p = self.nodes[x.index()].parent;
        p != NIL && self.nodes[p as usize].right == x.0
    }

    /// The next id [`Formula::insert`] would assign.
    pub fn next_fresh_id(&self) -> NodeId {
        NodeId(self.next_id)
    }
}

impl<A: Annotator> Clone for Formula<A>
where
    A: Clone,
{
    fn clone(&self) -> Self {
        Formula {
            nodes: self.nodes.clone(),
            vals: self.vals.clone(),
            free: self.free.clone(),
            root: self.root,
            leaf_of: self.leaf_of.clone(),
            root_id: self.root_id,
            next_id: self.next_id,
            annotator: self.annotator.clone(),
            total_balance: self.total_balance,
            lazy: self.lazy,
            rotations: self.rotations,
            double_rotations: self.double_rotations,
            audit: self.audit.clone(),
        }
    }
}
