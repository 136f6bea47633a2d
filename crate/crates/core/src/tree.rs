//! Ordered labeled forests and contexts, the free forest algebra over them,
//! and the five local tree updates.
//!
//! Values are stored flat (an arena of slots), so deep trees never recurse.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

/// Stable identifier of a node of the subject tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

static NEXT_FRESH: AtomicU64 = AtomicU64::new(1 << 40);

impl NodeId {
    /// A process-wide fresh identifier, used when building values without
    /// explicit ids (terms, deep copies).
    pub fn fresh() -> NodeId {
        NodeId(NEXT_FRESH.fetch_add(1, Ordering::Relaxed))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Interned label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(pub u32);

/// Finite alphabet, interning label names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, Symbol>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        let mut a = Self::new();
        for n in names {
            a.intern(n.as_ref());
        }
        a
    }

    pub fn intern(&mut self, name: &str) -> Symbol {
        if let Some(&s) = self.index.get(name) {
            return s;
        }
        let s = Symbol(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), s);
        s
    }

    pub fn get(&self, name: &str) -> Option<Symbol> {
        self.index.get(name).copied()
    }

    pub fn name(&self, s: Symbol) -> &str {
        self.names.get(s.0 as usize).map(String::as_str).unwrap_or("?")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        (0..self.names.len() as u32).map(Symbol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Forest,
    Context,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("type error: {0}")]
    TypeError(&'static str),
    #[error("bad target {0}: {1}")]
    BadTarget(NodeId, &'static str),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A local update of a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeUpdate {
    Relab(NodeId, Symbol),
    Subdiv(NodeId, Symbol),
    InsertL(NodeId, Symbol),
    InsertR(NodeId, Symbol),
    Delete(NodeId),
}

impl TreeUpdate {
    pub fn target(&self) -> NodeId {
        match *self {
            TreeUpdate::Relab(v, _)
            | TreeUpdate::Subdiv(v, _)
            | TreeUpdate::InsertL(v, _)
            | TreeUpdate::InsertR(v, _)
            | TreeUpdate::Delete(v) => v,
        }
    }

    /// True for updates that create a node.
    pub fn creates_node(&self) -> bool {
        matches!(self, TreeUpdate::Subdiv(..) | TreeUpdate::InsertL(..) | TreeUpdate::InsertR(..))
    }
}

const NIL: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Slot {
    id: NodeId,
    label: Symbol,
    hole: bool,
    parent: u32,
    children: Vec<u32>,
}

/// An ordered forest, possibly containing one hole (then it is a context).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForestOrContext {
    slots: Vec<Slot>,
    roots: Vec<u32>,
    hole: Option<u32>,
}

/// Borrowed view of one node (or the hole) of a [`ForestOrContext`].
#[derive(Clone, Copy)]
pub struct NodeRef<'a> {
    f: &'a ForestOrContext,
    i: u32,
}

impl<'a> NodeRef<'a> {
    pub fn id(&self) -> NodeId {
        self.f.slots[self.i as usize].id
    }
    pub fn label(&self) -> Symbol {
        self.f.slots[self.i as usize].label
    }
    pub fn is_hole(&self) -> bool {
        self.f.slots[self.i as usize].hole
    }
    pub fn is_leaf(&self) -> bool {
        self.f.slots[self.i as usize].children.is_empty()
    }
    /// Position of this node in the arena; stable for the lifetime of the value.
    pub fn slot(&self) -> usize {
        self.i as usize
    }
    pub fn parent(&self) -> Option<NodeRef<'a>> {
        let p = self.f.slots[self.i as usize].parent;
        (p != NIL).then_some(NodeRef { f: self.f, i: p })
    }
    pub fn children(&self) -> impl Iterator<Item = NodeRef<'a>> + 'a {
        let f = self.f;
        f.slots[self.i as usize].children.iter().map(move |&i| NodeRef { f, i })
    }
    pub fn child_count(&self) -> usize {
        self.f.slots[self.i as usize].children.len()
    }
}

impl fmt::Debug for NodeRef<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_hole() {
            write!(f, "_")
        } else {
            write!(f, "#{}:{}", self.id(), self.label().0)
        }
    }
}

impl ForestOrContext {
    /// The empty forest.
    pub fn empty() -> Self {
        Self::default()
    }

    /// The bare hole.
    pub fn hole() -> Self {
        let mut f = Self::default();
        f.add_hole(None);
        f
    }

    /// A single node `a`, or `a` with the hole as only child.
    pub fn atom(id: NodeId, label: Symbol, holed: bool) -> Self {
        let mut f = Self::default();
        let r = f.add_node(None, id, label);
        if holed {
            f.add_hole(Some(r));
        }
        f
    }

    /// Appends a node as last child of `parent` (or as last root) and
    /// returns its slot.
    pub fn add_node(&mut self, parent: Option<usize>, id: NodeId, label: Symbol) -> usize {
        self.push_slot(parent, Slot { id, label, hole: false, parent: NIL, children: Vec::new() })
    }

    /// Appends the hole as last child of `parent` (or as last root).
    ///
    /// Panics if the value already has a hole.
    pub fn add_hole(&mut self, parent: Option<usize>) -> usize {
        assert!(self.hole.is_none(), "a context has exactly one hole");
        let i = self.push_slot(parent, Slot { id: NodeId(u64::MAX), label: Symbol(u32::MAX), hole: true, parent: NIL, children: Vec::new() });
        self.hole = Some(i as u32);
        i
    }

    fn push_slot(&mut self, parent: Option<usize>, mut slot: Slot) -> usize {
        let i = self.slots.len() as u32;
        match parent {
            Some(p) => {
                assert!(!self.slots[p].hole, "the hole has no children");
                slot.parent = p as u32;
                self.slots[p].children.push(i);
            }
            None => self.roots.push(i),
        }
        self.slots.push(slot);
        i as usize
    }

    pub fn kind(&self) -> Kind {
        if self.hole.is_some() {
            Kind::Context
        } else {
            Kind::Forest
        }
    }

    pub fn has_hole(&self) -> bool {
        self.hole.is_some()
    }

    /// Number of labeled nodes (the hole is not counted).
    pub fn node_count(&self) -> usize {
        self.slots.len() - usize::from(self.hole.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn is_tree(&self) -> bool {
        self.roots.len() == 1 && self.hole.is_none()
    }

    pub fn roots(&self) -> impl Iterator<Item = NodeRef<'_>> {
        self.roots.iter().map(move |&i| NodeRef { f: self, i })
    }

    /// The single root of a tree.
    pub fn root(&self) -> Option<NodeRef<'_>> {
        (self.roots.len() == 1).then(|| NodeRef { f: self, i: self.roots[0] })
    }

    pub fn node(&self, slot: usize) -> NodeRef<'_> {
        NodeRef { f: self, i: slot as u32 }
    }

    /// All nodes and the hole in document order.
    pub fn items_preorder(&self) -> Vec<NodeRef<'_>> {
        let mut out = Vec::with_capacity(self.slots.len());
        let mut stack: Vec<u32> = self.roots.iter().rev().copied().collect();
        while let Some(i) = stack.pop() {
            out.push(NodeRef { f: self, i });
            stack.extend(self.slots[i as usize].children.iter().rev());
        }
        out
    }

    /// Labeled nodes in document order.
    pub fn preorder(&self) -> Vec<NodeRef<'_>> {
        let mut v = self.items_preorder();
        v.retain(|n| !n.is_hole());
        v
    }

    pub fn find(&self, id: NodeId) -> Option<NodeRef<'_>> {
        self.slots.iter().position(|s| !s.hole && s.id == id).map(|i| NodeRef { f: self, i: i as u32 })
    }

    /// Appends the slots of `other`, returning its roots re-indexed.
    fn absorb(&mut self, other: ForestOrContext) -> Vec<u32> {
        let off = self.slots.len() as u32;
        let shift = |i: u32| if i == NIL { NIL } else { i + off };
        if let Some(h) = other.hole {
            self.hole = Some(h + off);
        }
        for mut s in other.slots {
            s.parent = shift(s.parent);
            for c in &mut s.children {
                *c += off;
            }
            self.slots.push(s);
        }
        other.roots.into_iter().map(|r| r + off).collect()
    }

    /// Horizontal concatenation: roots of `self` followed by roots of `other`.
    pub fn concat(mut self, other: ForestOrContext) -> Result<Self, TreeError> {
        if self.has_hole() && other.has_hole() {
            return Err(TreeError::TypeError("concatenation of two contexts"));
        }
        let r = self.absorb(other);
        self.roots.extend(r);
        Ok(self)
    }

    /// Context application: the hole of `self` is replaced by the roots of `other`.
    pub fn apply(mut self, other: ForestOrContext) -> Result<Self, TreeError> {
        let h = self.hole.take().ok_or(TreeError::TypeError("application of a forest"))?;
        let parent = self.slots[h as usize].parent;
        let new_roots = self.absorb(other);
        for &r in &new_roots {
            self.slots[r as usize].parent = parent;
        }
        let list = if parent == NIL { &mut self.roots } else { &mut self.slots[parent as usize].children };
        let pos = list.iter().position(|&c| c == h).expect("hole is listed at its parent");
        list.splice(pos..pos + 1, new_roots);
        self.remove_slot(h);
        Ok(self)
    }

    /// Removes an unlinked slot by swapping the last slot into its place.
    fn remove_slot(&mut self, i: u32) {
        let last = self.slots.len() as u32 - 1;
        if i != last {
            let moved = self.slots[last as usize].clone();
            let p = moved.parent;
            let list = if p == NIL { &mut self.roots } else { &mut self.slots[p as usize].children };
            for c in list.iter_mut() {
                if *c == last {
                    *c = i;
                }
            }
            for &c in &moved.children {
                self.slots[c as usize].parent = i;
            }
            if self.hole == Some(last) {
                self.hole = Some(i);
            }
            self.slots[i as usize] = moved;
        }
        self.slots.pop();
    }

    /// Copy with all node ids replaced by fresh ones.
    pub fn deep_copy(&self) -> Self {
        let mut out = self.clone();
        for s in &mut out.slots {
            if !s.hole {
                s.id = NodeId::fresh();
            }
        }
        out
    }

    /// Applies an update to a tree. `fresh` is the id given to a created node.
    pub fn apply_update(&self, u: &TreeUpdate, fresh: NodeId) -> Result<Self, TreeError> {
        let v = u.target();
        let i = self.find(v).ok_or(TreeError::BadTarget(v, "no such node"))?.i;
        let mut out = self.clone();
        let parent = out.slots[i as usize].parent;
        match *u {
            TreeUpdate::Relab(_, a) => out.slots[i as usize].label = a,
            TreeUpdate::Subdiv(_, a) => {
                let children = std::mem::take(&mut out.slots[i as usize].children);
                let n = out.slots.len() as u32;
                for &c in &children {
                    out.slots[c as usize].parent = n;
                }
                out.slots.push(Slot { id: fresh, label: a, hole: false, parent: i, children });
                out.slots[i as usize].children.push(n);
            }
            TreeUpdate::InsertL(_, a) | TreeUpdate::InsertR(_, a) => {
                if parent == NIL {
                    return Err(TreeError::BadTarget(v, "cannot insert a sibling of the root"));
                }
                let n = out.slots.len() as u32;
                out.slots.push(Slot { id: fresh, label: a, hole: false, parent, children: Vec::new() });
                let list = &mut out.slots[parent as usize].children;
                let pos = list.iter().position(|&c| c == i).expect("listed");
                let pos = if matches!(u, TreeUpdate::InsertL(..)) { pos } else { pos + 1 };
                list.insert(pos, n);
            }
            TreeUpdate::Delete(_) => {
                if parent == NIL {
                    return Err(TreeError::BadTarget(v, "cannot delete the root"));
                }
                if !out.slots[i as usize].children.is_empty() {
                    return Err(TreeError::BadTarget(v, "not a leaf"));
                }
                out.slots[parent as usize].children.retain(|&c| c != i);
                out.remove_slot(i);
            }
        }
        Ok(out)
    }

    /// Bracket notation, e.g. `a(b,c),d(_)`; `_` is the hole.
    pub fn to_term(&self, alphabet: &Alphabet) -> String {
        enum Step {
            Open(u32, bool),
            Close,
        }
        let mut out = String::new();
        let mut stack: Vec<Step> = Vec::new();
        for (k, &r) in self.roots.iter().enumerate().rev() {
            stack.push(Step::Open(r, k > 0));
        }
        while let Some(step) = stack.pop() {
            match step {
                Step::Close => out.push(')'),
                Step::Open(i, comma) => {
                    if comma {
                        out.push(',');
                    }
                    let s = &self.slots[i as usize];
                    if s.hole {
                        out.push('_');
                        continue;
                    }
                    out.push_str(alphabet.name(s.label));
                    if !s.children.is_empty() {
                        out.push('(');
                        stack.push(Step::Close);
                        for (k, &c) in s.children.iter().enumerate().rev() {
                            stack.push(Step::Open(c, k > 0));
                        }
                    }
                }
            }
        }
        out
    }

    /// Parses bracket notation, interning labels and assigning fresh ids.
    pub fn from_term(s: &str, alphabet: &mut Alphabet) -> Result<Self, TreeError> {
        let err = |msg: String| TreeError::Parse { line: 1, msg };
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut out = Self::default();
        let mut parents: Vec<Option<usize>> = vec![None];
        let mut pos = 0;
        let mut expect_item = !chars.is_empty();
        while pos < chars.len() {
            let c = chars[pos];
            if expect_item {
                let parent = *parents.last().expect("nonempty");
                if c == '_' {
                    if out.hole.is_some() {
                        return Err(err("more than one hole".into()));
                    }
                    out.add_hole(parent);
                    pos += 1;
                } else {
                    let start = pos;
                    while pos < chars.len() && !matches!(chars[pos], '(' | ')' | ',') {
                        pos += 1;
                    }
                    if start == pos {
                        return Err(err(format!("expected label at {start}")));
                    }
                    let name: String = chars[start..pos].iter().collect();
                    let label = alphabet.intern(&name);
                    let me = out.add_node(parent, NodeId::fresh(), label);
                    if chars.get(pos) == Some(&'(') {
                        pos += 1;
                        parents.push(Some(me));
                        continue;
                    }
                }
                expect_item = false;
            } else {
                match c {
                    ',' => expect_item = true,
                    ')' if parents.len() > 1 => {
                        parents.pop();
                    }
                    _ => return Err(err(format!("unexpected '{c}' at {pos}"))),
                }
                pos += 1;
            }
        }
        if parents.len() != 1 || (expect_item && !chars.is_empty()) {
            return Err(err("unbalanced term".into()));
        }
        Ok(out)
    }
}

/// Structural equality modulo node ids.
pub fn equal_trees(a: &ForestOrContext, b: &ForestOrContext) -> bool {
    if a.slots.len() != b.slots.len() || a.roots.len() != b.roots.len() {
        return false;
    }
    let mut stack: Vec<(u32, u32)> = a.roots.iter().copied().zip(b.roots.iter().copied()).collect();
    while let Some((x, y)) = stack.pop() {
        let (s, t) = (&a.slots[x as usize], &b.slots[y as usize]);
        if s.hole != t.hole || (!s.hole && s.label != t.label) || s.children.len() != t.children.len() {
            return false;
        }
        stack.extend(s.children.iter().copied().zip(t.children.iter().copied()));
    }
    true
}

/// Reads the line format `<id> <parent-id|-> <label> <left-sibling-id|->`.
/// `resolve` maps label names to symbols; unknown labels are parse errors.
pub fn parse_tree_text(
    text: &str,
    mut resolve: impl FnMut(&str) -> Option<Symbol>,
) -> Result<ForestOrContext, TreeError> {
    struct Row {
        id: NodeId,
        parent: Option<NodeId>,
        label: Symbol,
        left: Option<NodeId>,
        line: usize,
    }
    let err = |line: usize, msg: String| TreeError::Parse { line, msg };
    let parse_ref = |tok: &str, line: usize| -> Result<Option<NodeId>, TreeError> {
        if tok == "-" {
            Ok(None)
        } else {
            tok.parse::<u64>().map(|x| Some(NodeId(x))).map_err(|_| err(line, format!("bad id '{tok}'")))
        }
    };
    let mut rows: Vec<Row> = Vec::new();
    let mut by_id: HashMap<NodeId, usize> = HashMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(err(line, format!("expected 4 fields, found {}", toks.len())));
        }
        let id = parse_ref(toks[0], line)?.ok_or_else(|| err(line, "node id may not be '-'".into()))?;
        let parent = parse_ref(toks[1], line)?;
        let label = resolve(toks[2]).ok_or_else(|| err(line, format!("unknown label '{}'", toks[2])))?;
        let left = parse_ref(toks[3], line)?;
        if by_id.insert(id, rows.len()).is_some() {
            return Err(err(line, format!("duplicate id {id}")));
        }
        rows.push(Row { id, parent, label, left, line });
    }
    let mut first: HashMap<Option<NodeId>, usize> = HashMap::new();
    let mut next: HashMap<NodeId, usize> = HashMap::new();
    for (i, r) in rows.iter().enumerate() {
        if let Some(p) = r.parent {
            if !by_id.contains_key(&p) {
                return Err(err(r.line, format!("unknown parent {p}")));
            }
        }
        match r.left {
            None => {
                if first.insert(r.parent, i).is_some() {
                    return Err(err(r.line, "two first children of the same parent".into()));
                }
            }
            Some(l) => {
                let li = *by_id.get(&l).ok_or_else(|| err(r.line, format!("unknown left sibling {l}")))?;
                if rows[li].parent != r.parent {
                    return Err(err(r.line, format!("left sibling {l} has a different parent")));
                }
                if next.insert(l, i).is_some() {
                    return Err(err(r.line, format!("two right siblings of {l}")));
                }
            }
        }
    }
    let mut out = ForestOrContext::default();
    let mut placed = vec![false; rows.len()];
    // (row, parent slot) in document order
    let mut stack: Vec<(usize, Option<usize>)> = Vec::new();
    let push_chain = |stack: &mut Vec<(usize, Option<usize>)>, start: Option<usize>, parent: Option<usize>| {
        let mut chain = Vec::new();
        let mut cur = start;
        while let Some(i) = cur {
            if chain.len() > rows.len() {
                break;
            }
            chain.push((i, parent));
            cur = next.get(&rows[i].id).copied();
        }
        stack.extend(chain.into_iter().rev());
    };
    push_chain(&mut stack, first.get(&None).copied(), None);
    while let Some((i, parent)) = stack.pop() {
        if placed[i] {
            return Err(err(rows[i].line, "cycle in parent relation".into()));
        }
        placed[i] = true;
        let me = out.add_node(parent, rows[i].id, rows[i].label);
        push_chain(&mut stack, first.get(&Some(rows[i].id)).copied(), Some(me));
    }
    if let Some(i) = placed.iter().position(|p| !p) {
        return Err(err(rows[i].line, "node not reachable through sibling chains".into()));
    }
    Ok(out)
}

/// Writes the line format in document order.
pub fn write_tree_text(f: &ForestOrContext, alphabet: &Alphabet) -> String {
    let mut out = String::new();
    let show = |x: Option<NodeId>| x.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
    // (slot, parent id, left sibling id)
    let mut stack: Vec<(u32, Option<NodeId>, Option<NodeId>)> = Vec::new();
    let push_group = |stack: &mut Vec<(u32, Option<NodeId>, Option<NodeId>)>, group: &[u32], parent: Option<NodeId>| {
        let mut left = None;
        let mut entries = Vec::with_capacity(group.len());
        for &c in group {
            let s = &f.slots[c as usize];
            if s.hole {
                continue;
            }
            entries.push((c, parent, left));
            left = Some(s.id);
        }
        stack.extend(entries.into_iter().rev());
    };
    push_group(&mut stack, &f.roots, None);
    while let Some((i, parent, left)) = stack.pop() {
        let s = &f.slots[i as usize];
        out.push_str(&format!("{} {} {} {}\n", s.id, show(parent), alphabet.name(s.label), show(left)));
        push_group(&mut stack, &s.children, Some(s.id));
    }
    out
}

/// Reads an update script: one update per line, `relab <id> <label>`,
/// `subdiv <id> <label>`, `insertL <id> <label>`, `insertR <id> <label>` or
/// `delete <id>`. Returns each update with its line number.
pub fn parse_update_script(
    text: &str,
    mut resolve: impl FnMut(&str) -> Option<Symbol>,
) -> Result<Vec<(usize, TreeUpdate)>, TreeError> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| TreeError::Parse { line, msg };
        let toks: Vec<&str> = content.split_whitespace().collect();
        let id = toks
            .get(1)
            .ok_or_else(|| err("missing node id".into()))?
            .parse::<u64>()
            .map(NodeId)
            .map_err(|_| err(format!("bad id '{}'", toks[1])))?;
        let want = if toks[0] == "delete" { 2 } else { 3 };
        if toks.len() != want {
            return Err(err(format!("'{}' takes {} arguments", toks[0], want - 1)));
        }
        let mut label = || resolve(toks[2]).ok_or_else(|| err(format!("unknown label '{}'", toks[2])));
        let u = match toks[0] {
            "relab" => TreeUpdate::Relab(id, label()?),
            "subdiv" => TreeUpdate::Subdiv(id, label()?),
            "insertL" => TreeUpdate::InsertL(id, label()?),
            "insertR" => TreeUpdate::InsertR(id, label()?),
            "delete" => TreeUpdate::Delete(id),
            other => return Err(err(format!("unknown update '{other}'"))),
        };
        out.push((line, u));
    }
    Ok(out)
}

/// The script line of an update.
pub fn write_update(u: &TreeUpdate, alphabet: &Alphabet) -> String {
    match *u {
        TreeUpdate::Relab(v, a) => format!("relab {v} {}", alphabet.name(a)),
        TreeUpdate::Subdiv(v, a) => format!("subdiv {v} {}", alphabet.name(a)),
        TreeUpdate::InsertL(v, a) => format!("insertL {v} {}", alphabet.name(a)),
        TreeUpdate::InsertR(v, a) => format!("insertR {v} {}", alphabet.name(a)),
        TreeUpdate::Delete(v) => format!("delete {v}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str, al: &mut Alphabet) -> ForestOrContext {
        ForestOrContext::from_term(s, al).unwrap()
    }

    #[test]
    fn term_round_trip() {
        let mut al = Alphabet::new();
        for s in ["a", "a(b,c)", "a(a),b(_,a)", "_", "a(b(c(d)),e)", ""] {
            assert_eq!(t(s, &mut al).to_term(&al), s);
        }
        assert!(ForestOrContext::from_term("a(", &mut al).is_err());
        assert!(ForestOrContext::from_term("a)", &mut al).is_err());
        assert!(ForestOrContext::from_term("_,_", &mut al).is_err());
    }

    #[test]
    fn concat_and_apply_examples() {
        let mut al = Alphabet::new();
        let f = t("a(a)", &mut al);
        let c = t("b(_,a)", &mut al);
        let fc = f.clone().concat(c.clone()).unwrap();
        assert_eq!(fc.to_term(&al), "a(a),b(_,a)");
        assert_eq!(fc.kind(), Kind::Context);
        let cf = c.apply(f).unwrap();
        assert_eq!(cf.kind(), Kind::Forest);
        assert!(equal_trees(&cf, &t("b(a(a),a)", &mut al)));
        assert_eq!(cf.node_count(), 4);
    }

    #[test]
    fn type_errors() {
        let mut al = Alphabet::new();
        let c = t("b(_)", &mut al);
        assert!(c.clone().concat(c.deep_copy()).is_err());
        assert!(t("a", &mut al).apply(t("b", &mut al)).is_err());
    }

    #[test]
    fn neutral_elements() {
        let mut al = Alphabet::new();
        let f = t("a(b,c)", &mut al);
        assert!(equal_trees(&ForestOrContext::empty().concat(f.clone()).unwrap(), &f));
        assert!(equal_trees(&ForestOrContext::hole().apply(f.clone()).unwrap(), &f));
        let bc = t("b,c", &mut al);
        let abc = t("a(_)", &mut al).apply(bc).unwrap();
        assert!(equal_trees(&abc, &f));
    }

    #[test]
    fn equality_ignores_ids_but_not_order() {
        let mut al = Alphabet::new();
        assert!(equal_trees(&t("a(b,c)", &mut al), &t("a(b,c)", &mut al)));
        assert!(!equal_trees(&t("a(b,c)", &mut al), &t("a(c,b)", &mut al)));
        assert!(!equal_trees(&t("a(b,_)", &mut al), &t("a(b,c)", &mut al)));
    }

    #[test]
    fn updates_on_small_trees() {
        let mut al = Alphabet::new();
        let tr = t("a(c,d)", &mut al);
        let a = tr.root().unwrap().id();
        let b = al.intern("b");
        let out = tr.apply_update(&TreeUpdate::Subdiv(a, b), NodeId(1)).unwrap();
        assert_eq!(out.to_term(&al), "a(b(c,d))");

        let tr = t("a(b,c)", &mut al);
        let c = tr.preorder()[2].id();
        let d = al.intern("d");
        let out = tr.apply_update(&TreeUpdate::InsertR(c, d), NodeId(2)).unwrap();
        assert_eq!(out.to_term(&al), "a(b,c,d)");
        let back = out.apply_update(&TreeUpdate::Delete(NodeId(2)), NodeId(3)).unwrap();
        assert!(equal_trees(&back, &tr));
        let out = tr.apply_update(&TreeUpdate::Delete(c), NodeId(4)).unwrap();
        assert_eq!(out.to_term(&al), "a(b)");
    }

    #[test]
    fn bad_targets() {
        let mut al = Alphabet::new();
        let tr = t("a(b(c))", &mut al);
        let ids: Vec<NodeId> = tr.preorder().iter().map(|n| n.id()).collect();
        let x = al.intern("x");
        assert!(tr.apply_update(&TreeUpdate::Delete(ids[1]), NodeId(9)).is_err());
        assert!(tr.apply_update(&TreeUpdate::InsertL(ids[0], x), NodeId(9)).is_err());
        assert!(tr.apply_update(&TreeUpdate::Relab(NodeId(12345), x), NodeId(9)).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let mut al = Alphabet::new();
        let tr = t("a(b(c,d),e,f(g))", &mut al);
        let text = write_tree_text(&tr, &al);
        let back = parse_tree_text(&text, |s| al.get(s)).unwrap();
        assert!(equal_trees(&back, &tr));
        assert_eq!(write_tree_text(&back, &al), text);
    }

    #[test]
    fn text_format_errors_name_the_line() {
        let al = Alphabet::from_names(&["a"]);
        let e = parse_tree_text("1 - a -\n2 1 zz -\n", |s| al.get(s)).unwrap_err();
        assert_eq!(e, TreeError::Parse { line: 2, msg: "unknown label 'zz'".into() });
        let e = parse_tree_text("1 - a -\n2 7 a -\n", |s| al.get(s)).unwrap_err();
        assert!(matches!(e, TreeError::Parse { line: 2, .. }));
    }

    #[test]
    fn deep_path_does_not_recurse() {
        let mut f = ForestOrContext::empty();
        let mut p = None;
        for _ in 0..200_000 {
            p = Some(f.add_node(p, NodeId::fresh(), Symbol(0)));
        }
        let g = f.deep_copy();
        assert!(equal_trees(&f, &g));
        assert_eq!(g.preorder().len(), 200_000);
    }

    #[test]
    fn update_script_round_trip() {
        let al = Alphabet::from_names(&["a", "b"]);
        let text = "relab 1 b\n# comment\nsubdiv 2 a\ninsertL 3 a\ninsertR 4 b\ndelete 5\n";
        let us = parse_update_script(text, |s| al.get(s)).unwrap();
        assert_eq!(us.len(), 5);
        assert_eq!(us[1], (3, TreeUpdate::Subdiv(NodeId(2), Symbol(0))));
        let back: Vec<String> = us.iter().map(|(_, u)| write_update(u, &al)).collect();
        assert_eq!(back.join("\n") + "\n", text.replace("# comment\n", ""));
        let bad = |t: &str| match parse_update_script(t, |s| al.get(s)) {
            Err(TreeError::Parse { line, .. }) => line,
            r => panic!("{r:?}"),
        };
        assert_eq!(bad("relab 1 b\nrelab 1 z\n"), 2);
        assert_eq!(bad("delete 1 a\n"), 1);
        assert_eq!(bad("\nmove 1 a\n"), 2);
        assert_eq!(bad("delete x\n"), 1);
    }
}
