//! A formula annotated with transition-algebra elements of a selecting
//! automaton: acceptance after every update, and enumeration of answers in
//! formula-leaf order.
//!
//! Every formula node stores one extended element per selecting tuple (its
//! projection is the plain element). Enumeration extends incomplete answers
//! one node at a time by a top-down search that keeps, per node, the
//! signatures compatible with the current prefix (bottom-up) and with an
//! accepting run (top-down).

use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::automata::{eta_atomic, AutomatonError, Element, Nfsta, Signature, State};
use crate::formula::{Annotator, FIdx, Formula, FormulaError, Op, Tag};
use crate::tree::{ForestOrContext, Kind, NodeId, NodeRef, Symbol, TreeUpdate};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("the tree changed since this enumeration started")]
    StaleSession,
}

/// One extended element per track. A track is a selecting tuple; without
/// tuples there is a single plain track used for acceptance only.
#[derive(Clone)]
pub struct QueryAnnotator {
    nfsta: Arc<Nfsta>,
    /// per symbol: [plain leaf, holed leaf]
    atoms: Vec<[Vec<Element>; 2]>,
    empty: [Vec<Element>; 2],
    swap_hh: bool,
}

impl QueryAnnotator {
    pub fn new(nfsta: Arc<Nfsta>) -> QueryAnnotator {
        let n = nfsta.nfta();
        let tracks = nfsta.tuples().len();
        let atom = |a: Symbol, holed: bool| -> Vec<Element> {
            if tracks == 0 {
                vec![crate::automata::ta_atomic(a, holed, n).expect("symbol of the alphabet")]
            } else {
                (0..tracks).map(|s| eta_atomic(a, holed, &nfsta, s).expect("symbol of the alphabet")).collect()
            }
        };
        let atoms = n.alphabet().symbols().map(|a| [atom(a, false), atom(a, true)]).collect();
        let bits = |s: usize| nfsta.tuple_states(s).len() as u32;
        let empty_of = |kind: Kind| -> Vec<Element> {
            if tracks == 0 {
                vec![Element::empty(kind, n.states(), 0)]
            } else {
                (0..tracks).map(|s| Element::empty(kind, n.states(), bits(s))).collect()
            }
        };
        let empty = [empty_of(Kind::Forest), empty_of(Kind::Context)];
        QueryAnnotator { nfsta, atoms, empty, swap_hh: false }
    }

    /// Deliberately wrong variant that swaps the operands of forest
    /// concatenation; used to check that cross-checks catch broken joins.
    pub fn with_swapped_concat(mut self) -> QueryAnnotator {
        self.swap_hh = true;
        self
    }

    pub fn nfsta(&self) -> &Nfsta {
        &self.nfsta
    }

    /// The value of a whole forest or context, folded directly over its
    /// nodes (no formula): the empty forest and the hole map to identities.
    pub fn evaluate(&self, d: &ForestOrContext) -> Vec<Element> {
        let roots: Vec<NodeRef<'_>> = d.roots().collect();
        self.sequence(&roots)
    }

    fn identity(&self, kind: Kind) -> Vec<Element> {
        self.empty[(kind == Kind::Context) as usize].iter().map(|e| Element::identity(kind, e.states(), e.mask_bits())).collect()
    }

    fn sequence(&self, xs: &[NodeRef<'_>]) -> Vec<Element> {
        let mut acc: Option<Vec<Element>> = None;
        for x in xs {
            let v = self.node(*x);
            acc = Some(match acc {
                None => v,
                Some(a) => {
                    let op = Op::typed(true, a[0].kind(), v[0].kind()).expect("at most one hole");
                    self.combine(op, &a, &v)
                }
            });
        }
        acc.unwrap_or_else(|| self.identity(Kind::Forest))
    }

    fn node(&self, x: NodeRef<'_>) -> Vec<Element> {
        if x.is_hole() {
            return self.identity(Kind::Context);
        }
        if x.is_leaf() {
            return self.leaf(x.label(), false);
        }
        let kids: Vec<NodeRef<'_>> = x.children().collect();
        let below = self.sequence(&kids);
        let op = Op::typed(false, Kind::Context, below[0].kind()).expect("application");
        self.combine(op, &self.leaf(x.label(), true), &below)
    }
}

impl Annotator for QueryAnnotator {
    type Value = Vec<Element>;

    fn leaf(&self, label: Symbol, holed: bool) -> Vec<Element> {
        match self.atoms.get(label.0 as usize) {
            Some(a) => a[holed as usize].clone(),
            None => self.empty[holed as usize].clone(),
        }
    }

    fn combine(&self, op: Op, l: &Vec<Element>, r: &Vec<Element>) -> Vec<Element> {
        l.iter()
            .zip(r)
            .map(|(x, y)| {
                let (x, y) = if self.swap_hh && op == Op::ConcatHH { (y, x) } else { (x, y) };
                Element::combine(op, x, y).expect("formula keeps operand kinds consistent")
            })
            .collect()
    }
}

/// Counters of the last top-level completion step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompleteStats {
    /// All invocations of the recursive search.
    pub calls: u64,
    /// Invocations that passed the pruning test.
    pub non_tail_calls: u64,
    /// Formula height at the time.
    pub height: u32,
}

/// State of an enumeration: the current incomplete answer and, per prefix
/// length, the bottom-up relevant sets that differ from the stored values.
#[derive(Clone, Debug)]
pub struct EnumSession {
    epoch: u64,
    prefix: Vec<(NodeId, FIdx)>,
    /// `levels[i]`: overrides for the prefix of length `i + 1`.
    levels: Vec<HashMap<FIdx, Vec<Element>>>,
    /// `r2c[j]`: top-down relevant sets computed for the prefix of length `j`
    r2c: Vec<HashMap<FIdx, R2>>,
    started: bool,
    done: bool,
    /// Worst counters seen over all completion steps of this session.
    pub worst: CompleteStats,
    /// Largest `calls / height` seen.
    pub worst_ratio: f64,
    /// Largest `non_tail_calls / height` seen.
    pub worst_non_tail_ratio: f64,
    pub completions: u64,
}

impl EnumSession {
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// The current incomplete answer.
    pub fn prefix(&self) -> Vec<NodeId> {
        self.prefix.iter().map(|p| p.0).collect()
    }
}

type R2 = Rc<Vec<Option<Element>>>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pos {
    /// every leaf is before `u`
    Before,
    /// some leaf is `u`
    Contains,
    /// every leaf is after `u`
    After,
}

struct Search<'a> {
    j: usize,
    /// mask bit of the wanted state per track (0: track cannot extend)
    want: Vec<u32>,
    /// root-to-leaf path of `u`
    path: Vec<FIdx>,
    /// `tail_right[d]`: below depth `d` the path only takes right children
    tail_right: Vec<bool>,
    prefix: &'a [(NodeId, FIdx)],
    r2c: &'a mut HashMap<FIdx, R2>,
    new_level: HashMap<FIdx, Vec<Element>>,
    stats: CompleteStats,
}

impl Search<'_> {
    /// Every leaf below a node at `depth` with position `pos` is at or
    /// before `u`.
    fn all_before(&self, depth: usize, pos: Pos) -> bool {
        match pos {
            Pos::Before => true,
            Pos::After => false,
            Pos::Contains => self.tail_right[depth],
        }
    }
}

pub struct Engine {
    formula: Formula<QueryAnnotator>,
    nfsta: Arc<Nfsta>,
    epoch: u64,
    last_complete: CompleteStats,
}

impl Engine {
    /// Builds the formula of `tree` and annotates it. Labels must be symbols
    /// of the automaton's alphabet.
    pub fn new(tree: &ForestOrContext, nfsta: Nfsta) -> Result<Engine, EngineError> {
        let nfsta = Arc::new(nfsta);
        for v in tree.preorder() {
            if !nfsta.nfta().knows(v.label()) {
                return Err(AutomatonError::UnknownSymbol(v.label()).into());
            }
        }
        let formula = Formula::construct_with(tree, QueryAnnotator::new(nfsta.clone()))?;
        Ok(Engine { formula, nfsta, epoch: 0, last_complete: CompleteStats::default() })
    }

    /// Annotates an existing formula.
    pub fn annotate<A: Annotator>(f: Formula<A>, nfsta: Nfsta) -> Result<Engine, EngineError> {
        Self::annotate_with(f, QueryAnnotator::new(Arc::new(nfsta)))
    }

    pub fn annotate_with<A: Annotator>(f: Formula<A>, annotator: QueryAnnotator) -> Result<Engine, EngineError> {
        for x in f.leaf_order() {
            let a = f.label_of(x).expect("leaf");
            if !annotator.nfsta().nfta().knows(a) {
                return Err(AutomatonError::UnknownSymbol(a).into());
            }
        }
        let nfsta = annotator.nfsta.clone();
        Ok(Engine { formula: f.with_annotator(annotator), nfsta, epoch: 0, last_complete: CompleteStats::default() })
    }

    pub fn formula(&self) -> &Formula<QueryAnnotator> {
        &self.formula
    }

    /// See [`Formula::set_rotation_audit`].
    pub fn set_rotation_audit(&mut self, tree_sample_every: u64) {
        self.formula.set_rotation_audit(tree_sample_every);
    }

    pub fn nfsta(&self) -> &Nfsta {
        &self.nfsta
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn height(&self) -> u32 {
        self.formula.height()
    }

    pub fn last_complete_stats(&self) -> CompleteStats {
        self.last_complete
    }

    /// Applies an update and invalidates running sessions. Returns the id of
    /// a created node.
    pub fn apply_update(&mut self, u: &TreeUpdate) -> Result<Option<NodeId>, EngineError> {
        let label = match *u {
            TreeUpdate::Relab(_, a) | TreeUpdate::Subdiv(_, a) | TreeUpdate::InsertL(_, a) | TreeUpdate::InsertR(_, a) => {
                Some(a)
            }
            TreeUpdate::Delete(_) => None,
        };
        if let Some(a) = label {
            if !self.nfsta.nfta().knows(a) {
                return Err(AutomatonError::UnknownSymbol(a).into());
            }
        }
        let r = self.formula.apply_update(u)?;
        self.epoch += 1;
        Ok(r)
    }

    /// Whether some run ends the root in `qF` after starting in `q0`.
    pub fn is_accepted(&self) -> bool {
        let n = self.nfsta.nfta();
        let sig = Signature::Forest(n.q0(), n.qf());
        self.formula.root_value().iter().any(|e| (0..(1u32 << e.mask_bits())).any(|r| e.contains(sig, r)))
    }

    /// The plain element of the whole tree.
    pub fn root_element(&self) -> Element {
        self.formula.root_value()[0].project()
    }

    fn tracks(&self) -> usize {
        if self.nfsta.tuples().is_empty() {
            0
        } else {
            self.nfsta.tuples().len()
        }
    }

    /// True if `v` comes before `w` in the enumeration order.
    pub fn precedes(&self, v: NodeId, w: NodeId) -> Option<bool> {
        let order = self.formula.leaf_order();
        let i = order.iter().position(|&x| x == v)?;
        let j = order.iter().position(|&x| x == w)?;
        Some(i < j)
    }

    // ------------------------------------------------------------ enumeration

    pub fn enum_start(&self) -> EnumSession {
        EnumSession {
            epoch: self.epoch,
            prefix: Vec::new(),
            levels: Vec::new(),
            r2c: Vec::new(),
            started: false,
            done: false,
            worst: CompleteStats::default(),
            worst_ratio: 0.0,
            worst_non_tail_ratio: 0.0,
            completions: 0,
        }
    }

    /// The next answer, in lexicographic formula-leaf order.
    pub fn next_answer(&mut self, sess: &mut EnumSession) -> Result<Option<Vec<NodeId>>, EngineError> {
        if sess.epoch != self.epoch {
            return Err(EngineError::StaleSession);
        }
        if sess.done {
            return Ok(None);
        }
        let k = self.nfsta.arity();
        if !sess.started {
            sess.started = true;
            if k == 0 || self.tracks() == 0 {
                sess.done = true;
                let yes = k == 0 && self.tracks() > 0 && self.is_accepted();
                return Ok(yes.then(Vec::new));
            }
        } else if !self.advance(sess) {
            sess.done = true;
            return Ok(None);
        }
        while sess.prefix.len() < k {
            if !self.extend(sess, None) && !self.advance(sess) {
                sess.done = true;
                return Ok(None);
            }
        }
        Ok(Some(sess.prefix()))
    }

    /// All answers, in order.
    pub fn answers(&mut self) -> Vec<Vec<NodeId>> {
        let mut s = self.enum_start();
        let mut out = Vec::new();
        while let Some(a) = self.next_answer(&mut s).expect("fresh session") {
            out.push(a);
        }
        out
    }

    /// Replaces the last node of the prefix by the next possible one,
    /// shortening the prefix while that fails.
    fn advance(&mut self, sess: &mut EnumSession) -> bool {
        while let Some((v, _)) = sess.prefix.pop() {
            sess.levels.truncate(sess.prefix.len());
            if self.extend(sess, Some(v)) {
                return true;
            }
        }
        false
    }

    /// Appends the least node after `u` that keeps the prefix an incomplete
    /// answer.
    fn extend(&mut self, sess: &mut EnumSession, u: Option<NodeId>) -> bool {
        match self.complete_in(sess, u) {
            Some((v, x, level)) => {
                sess.levels.truncate(sess.prefix.len());
                sess.levels.push(level);
                sess.r2c.truncate(sess.prefix.len() + 1);
                sess.prefix.push((v, x));
                true
            }
            None => false,
        }
    }

    /// The completion of the session's prefix after `u` (or from the
    /// start), without changing the session.
    pub fn complete(&mut self, sess: &EnumSession, u: Option<NodeId>) -> Result<Option<Vec<NodeId>>, EngineError> {
        if sess.epoch != self.epoch {
            return Err(EngineError::StaleSession);
        }
        let mut tmp = sess.clone();
        Ok(self.complete_in(&mut tmp, u).map(|(v, _, _)| {
            let mut a = sess.prefix();
            a.push(v);
            a
        }))
    }

    fn complete_in(&mut self, sess: &mut EnumSession, u: Option<NodeId>) -> Option<(NodeId, FIdx, HashMap<FIdx, Vec<Element>>)> {
        let j = sess.prefix.len();
        if j >= self.nfsta.arity() || self.tracks() == 0 {
            return None;
        }
        let f = &self.formula;
        let want: Vec<u32> = (0..self.tracks()).map(|s| self.nfsta.state_bit(s, self.nfsta.tuples()[s][j])).collect();
        let mut path = Vec::new();
        if let Some(u) = u {
            let mut x = f.leaf_of(u)?;
            path.push(x);
            while let Some(p) = f.parent(x) {
                path.push(p);
                x = p;
            }
            path.reverse();
        }
        let mut tail_right = vec![true; path.len()];
        for d in (0..path.len().saturating_sub(1)).rev() {
            tail_right[d] = tail_right[d + 1] && f.is_right_child(path[d + 1]);
        }
        if sess.r2c.len() <= j {
            sess.r2c.resize_with(j + 1, HashMap::new);
        }
        let root = f.root();
        let r2 = match sess.r2c[j].get(&root) {
            Some(r2) => r2.clone(),
            None => {
                let n = self.nfsta.nfta();
                let r1 = self.r1_cached(&sess.levels, j, root);
                let r2: Vec<Option<Element>> = r1
                    .iter()
                    .enumerate()
                    .map(|(s, e)| {
                        let mut t = Element::empty(Kind::Forest, n.states(), e.mask_bits());
                        t.insert(Signature::Forest(n.q0(), n.qf()), self.nfsta.full_mask(s));
                        let x = e.intersect(&t);
                        (!x.is_empty()).then_some(x)
                    })
                    .collect();
                let r2 = Rc::new(r2);
                sess.r2c[j].insert(root, r2.clone());
                r2
            }
        };
        let mut st = Search {
            j,
            want,
            path,
            tail_right,
            prefix: &sess.prefix,
            r2c: &mut sess.r2c[j],
            new_level: HashMap::new(),
            stats: CompleteStats { height: f.height(), ..Default::default() },
        };
        let pos = if st.path.is_empty() { Pos::After } else { Pos::Contains };
        let found = self.search(&sess.levels, &mut st, root, 0, pos, r2);
        let Search { stats, new_level, .. } = st;
        self.last_complete = stats;
        sess.completions += 1;
        if stats.calls > sess.worst.calls {
            sess.worst = stats;
        }
        let ratio = stats.calls as f64 / stats.height.max(1) as f64;
        sess.worst_ratio = sess.worst_ratio.max(ratio);
        let ratio = stats.non_tail_calls as f64 / stats.height.max(1) as f64;
        sess.worst_non_tail_ratio = sess.worst_non_tail_ratio.max(ratio);
        found.map(|(v, x)| (v, x, new_level))
    }

    /// R¹ of the prefix of length `j` at `x`: the newest override, or the
    /// stored value.
    fn r1_cached<'a>(&'a self, levels: &'a [HashMap<FIdx, Vec<Element>>], j: usize, x: FIdx) -> &'a Vec<Element> {
        for l in levels[..j.min(levels.len())].iter().rev() {
            if let Some(v) = l.get(&x) {
                return v;
            }
        }
        self.formula.value(x)
    }

    fn search(
        &self,
        levels: &[HashMap<FIdx, Vec<Element>>],
        st: &mut Search<'_>,
        x: FIdx,
        depth: usize,
        pos: Pos,
        r2: R2,
    ) -> Option<(NodeId, FIdx)> {
        st.stats.calls += 1;
        if st.all_before(depth, pos) {
            return None;
        }
        let hopeless = r2
            .iter()
            .zip(&st.want)
            .all(|(e, &b)| e.as_ref().is_none_or(|e| e.visited_mask() & b == 0));
        if hopeless {
            return None;
        }
        st.stats.non_tail_calls += 1;
        let f = &self.formula;
        let j = st.j;
        match f.tag(x) {
            Tag::Leaf(a) => {
                // the new prefix pins this node at every position it occupies
                let mut positions: Vec<usize> = st.prefix.iter().enumerate().filter(|p| p.1 .0 == a.node).map(|p| p.0).collect();
                positions.push(j);
                let r1 = self.restrict_leaf(f.value(x), &positions);
                st.new_level.insert(x, r1);
                Some((a.node, x))
            }
            Tag::Inner(op) => {
                let (l, r) = (f.left(x).expect("inner"), f.right(x).expect("inner"));
                let child_pos = |c: FIdx| match pos {
                    Pos::Contains if st.path.get(depth + 1) == Some(&c) => Pos::Contains,
                    Pos::Contains if c == l => Pos::Before,
                    Pos::Contains => Pos::After,
                    p => p,
                };
                let (pl, pr) = (child_pos(l), child_pos(r));
                let r1l = self.r1_cached(levels, j, l);
                let r1r = self.r1_cached(levels, j, r);
                // a child entirely before `u` fails at once; its relevant set
                // is not needed
                let mut found = if st.all_before(depth + 1, pl) {
                    st.stats.calls += 1;
                    None
                } else {
                    let r2l = st.r2c.entry(l).or_insert_with(|| Rc::new(relevant(op, true, r1l, r1r, &r2))).clone();
                    self.search(levels, st, l, depth + 1, pl, r2l)
                };
                let mut went_left = true;
                if found.is_none() {
                    found = if st.all_before(depth + 1, pr) {
                        st.stats.calls += 1;
                        None
                    } else {
                        let r2r = st.r2c.entry(r).or_insert_with(|| Rc::new(relevant(op, false, r1r, r1l, &r2))).clone();
                        self.search(levels, st, r, depth + 1, pr, r2r)
                    };
                    went_left = false;
                }
                let found = found?;
                let (nl, nr) = if went_left {
                    (st.new_level.get(&l).expect("set on success"), r1r)
                } else {
                    (r1l, st.new_level.get(&r).expect("set on success"))
                };
                let v = f.annotator().combine(op, nl, nr);
                st.new_level.insert(x, v);
                Some(found)
            }
        }
    }

    /// Leaf value restricted to runs giving the node the states of all
    /// listed prefix positions.
    fn restrict_leaf(&self, h: &[Element], positions: &[usize]) -> Vec<Element> {
        h.iter()
            .enumerate()
            .map(|(s, e)| {
                let tuple = &self.nfsta.tuples()[s];
                let q = tuple[positions[0]];
                if positions.iter().any(|&i| tuple[i] != q) {
                    Element::empty(e.kind(), e.states(), e.mask_bits())
                } else {
                    e.restrict_mask(self.nfsta.state_bit(s, q))
                }
            })
            .collect()
    }

    /// Bottom-up relevant set at `x` for `prefix`, computed from scratch.
    pub fn r1(&self, x: FIdx, prefix: &[NodeId]) -> Vec<Element> {
        let f = &self.formula;
        match f.tag(x) {
            Tag::Leaf(a) => {
                let positions: Vec<usize> = prefix.iter().enumerate().filter(|p| *p.1 == a.node).map(|p| p.0).collect();
                if positions.is_empty() {
                    f.value(x).clone()
                } else {
                    self.restrict_leaf(f.value(x), &positions)
                }
            }
            Tag::Inner(op) => {
                let l = self.r1(f.left(x).expect("inner"), prefix);
                let r = self.r1(f.right(x).expect("inner"), prefix);
                f.annotator().combine(op, &l, &r)
            }
        }
    }

    /// Top-down relevant set at `x` for `prefix`, computed from scratch.
    pub fn r2(&self, x: FIdx, prefix: &[NodeId]) -> Vec<Element> {
        let f = &self.formula;
        let n = self.nfsta.nfta();
        let mut path = vec![x];
        while let Some(p) = f.parent(*path.last().expect("nonempty")) {
            path.push(p);
        }
        path.reverse();
        let root = path[0];
        let mut cur: Vec<Element> = self
            .r1(root, prefix)
            .iter()
            .enumerate()
            .map(|(s, e)| {
                let mut t = Element::empty(Kind::Forest, n.states(), e.mask_bits());
                let full = if self.tracks() == 0 { 0 } else { self.nfsta.full_mask(s) };
                t.insert(Signature::Forest(n.q0(), n.qf()), full);
                e.intersect(&t)
            })
            .collect();
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            let Tag::Inner(op) = f.tag(u) else { unreachable!("parent is inner") };
            let is_left = f.left(u) == Some(v);
            let sib = if is_left { f.right(u) } else { f.left(u) }.expect("inner");
            let mine = self.r1(v, prefix);
            let other = self.r1(sib, prefix);
            let wrapped: Vec<Option<Element>> = cur.into_iter().map(Some).collect();
            cur = relevant(op, is_left, &mine, &other, &wrapped)
                .into_iter()
                .zip(&mine)
                .map(|(e, m)| e.unwrap_or_else(|| Element::empty(m.kind(), m.states(), m.mask_bits())))
                .collect();
        }
        cur
    }

    /// Session-cached bottom-up relevant set, as used by the search.
    pub fn session_r1(&self, sess: &EnumSession, x: FIdx) -> Vec<Element> {
        self.r1_cached(&sess.levels, sess.prefix.len(), x).clone()
    }

    /// The selecting tuple of track `s`.
    pub fn tuple(&self, s: usize) -> &[State] {
        &self.nfsta.tuples()[s]
    }
}

/// Top-down relevant set of one child: `mine` filtered to those pairs that
/// combine with some pair of `sibling` into the parent's set.
fn relevant(op: Op, is_left: bool, mine: &[Element], sibling: &[Element], parent: &[Option<Element>]) -> Vec<Option<Element>> {
    mine.iter()
        .zip(sibling)
        .zip(parent)
        .map(|((m, y), t)| {
            let t = t.as_ref()?;
            let cand = if is_left { Element::residual_left(op, y, t) } else { Element::residual_right(op, y, t) };
            let x = m.intersect(&cand.expect("formula keeps operand kinds consistent"));
            (!x.is_empty()).then_some(x)
        })
        .collect()
}
