//! Explicit formulas: build a formula with a given shape, and a textual
//! syntax `⊙(⊕(a⊡,b),c)` (ASCII `+`, `*` and `[]` also accepted).

use super::{Annotator, Atom, FIdx, Formula, FormulaError, Op, Tag, NIL};
use crate::tree::{Alphabet, NodeId, Symbol};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormulaExpr {
    Leaf { label: Symbol, holed: bool, id: Option<NodeId> },
    Concat(Box<FormulaExpr>, Box<FormulaExpr>),
    Apply(Box<FormulaExpr>, Box<FormulaExpr>),
}

impl FormulaExpr {
    pub fn leaf(label: Symbol) -> Self {
        FormulaExpr::Leaf { label, holed: false, id: None }
    }

    pub fn holed(label: Symbol) -> Self {
        FormulaExpr::Leaf { label, holed: true, id: None }
    }

    pub fn concat(l: FormulaExpr, r: FormulaExpr) -> Self {
        FormulaExpr::Concat(Box::new(l), Box::new(r))
    }

    pub fn apply(l: FormulaExpr, r: FormulaExpr) -> Self {
        FormulaExpr::Apply(Box::new(l), Box::new(r))
    }

    /// Parses the textual syntax, interning labels.
    pub fn parse(s: &str, alphabet: &mut Alphabet) -> Result<Self, FormulaError> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let e = parse_rec(&chars, &mut pos, alphabet)?;
        if pos != chars.len() {
            return Err(FormulaError::Malformed(format!("trailing input at {pos}")));
        }
        Ok(e)
    }
}

fn parse_rec(c: &[char], pos: &mut usize, alphabet: &mut Alphabet) -> Result<FormulaExpr, FormulaError> {
    let err = |p: usize, m: &str| FormulaError::Malformed(format!("{m} at {p}"));
    let op = match c.get(*pos) {
        Some('⊕' | '+') => Some(true),
        Some('⊙' | '*') => Some(false),
        _ => None,
    };
    if let Some(concat) = op {
        *pos += 1;
        let expect = |pos: &mut usize, ch: char| {
            if c.get(*pos) == Some(&ch) {
                *pos += 1;
                Ok(())
            } else {
                Err(err(*pos, &format!("expected '{ch}'")))
            }
        };
        expect(pos, '(')?;
        let l = parse_rec(c, pos, alphabet)?;
        expect(pos, ',')?;
        let r = parse_rec(c, pos, alphabet)?;
        expect(pos, ')')?;
        return Ok(if concat { FormulaExpr::concat(l, r) } else { FormulaExpr::apply(l, r) });
    }
    let start = *pos;
    while *pos < c.len() && (c[*pos].is_alphanumeric() || c[*pos] == '_' || c[*pos] == '-') {
        *pos += 1;
    }
    if start == *pos {
        return Err(err(start, "expected a label or an operation"));
    }
    let name: String = c[start..*pos].iter().collect();
    let holed = if c.get(*pos) == Some(&'⊡') {
        *pos += 1;
        true
    } else if c.get(*pos) == Some(&'[') && c.get(*pos + 1) == Some(&']') {
        *pos += 2;
        true
    } else {
        false
    };
    Ok(FormulaExpr::Leaf { label: alphabet.intern(&name), holed, id: None })
}

impl<A: Annotator> Formula<A> {
    /// Builds a formula with exactly the given shape (no rebalancing).
    /// Leaves without an id are numbered 1, 2, ... in left-to-right order,
    /// skipping ids given explicitly.
    pub fn from_expr(e: &FormulaExpr, annotator: A) -> Result<Self, FormulaError> {
        let mut f = Self::empty_with(annotator);
        f.lazy = true;
        let mut explicit = std::collections::HashSet::new();
        let mut stack = vec![e];
        while let Some(x) = stack.pop() {
            match x {
                FormulaExpr::Leaf { id: Some(id), .. } => {
                    if !explicit.insert(*id) {
                        return Err(FormulaError::Malformed(format!("duplicate id {id}")));
                    }
                }
                FormulaExpr::Leaf { .. } => {}
                FormulaExpr::Concat(l, r) | FormulaExpr::Apply(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        let mut next = 1u64;
        // post-order build with an explicit stack
        enum Step<'a> {
            Enter(&'a FormulaExpr),
            Exit(bool),
        }
        let mut built: Vec<u32> = Vec::new();
        let mut steps = vec![Step::Enter(e)];
        while let Some(s) = steps.pop() {
            match s {
                Step::Enter(FormulaExpr::Leaf { label, holed, id }) => {
                    let id = match id {
                        Some(id) => *id,
                        None => {
                            while explicit.contains(&NodeId(next)) {
                                next += 1;
                            }
                            next += 1;
                            NodeId(next - 1)
                        }
                    };
                    let x = f.alloc(Tag::Leaf(Atom { node: id, label: *label, holed: *holed }));
                    f.leaf_of.insert(id, x);
                    f.next_id = f.next_id.max(id.0 + 1);
                    built.push(x);
                }
                Step::Enter(FormulaExpr::Concat(l, r)) => {
                    steps.push(Step::Exit(true));
                    steps.push(Step::Enter(r));
                    steps.push(Step::Enter(l));
                }
                Step::Enter(FormulaExpr::Apply(l, r)) => {
                    steps.push(Step::Exit(false));
                    steps.push(Step::Enter(r));
                    steps.push(Step::Enter(l));
                }
                Step::Exit(concat) => {
                    let r = built.pop().expect("right");
                    let l = built.pop().expect("left");
                    let op = Op::typed(concat, f.kind_of(l), f.kind_of(r)).ok_or_else(|| {
                        FormulaError::Malformed(format!(
                            "{} over {:?} and {:?}",
                            if concat { "⊕" } else { "⊙" },
                            f.kind_of(l),
                            f.kind_of(r)
                        ))
                    })?;
                    let x = f.alloc(Tag::Inner(op));
                    f.link(x, l, r);
                    built.push(x);
                }
            }
        }
        f.root = built.pop().expect("root");
        f.lazy = false;
        f.recompute_all();
        if f.kind_of(f.root) != crate::tree::Kind::Forest {
            return Err(FormulaError::Malformed("formula denotes a context".into()));
        }
        let t = f.represented_tree();
        let r = t.root().ok_or(FormulaError::NotATree)?;
        f.root_id = r.id();
        Ok(f)
    }

    /// Parses and builds in one step.
    pub fn parse_expr(s: &str, alphabet: &mut Alphabet, annotator: A) -> Result<Self, FormulaError> {
        Self::from_expr(&FormulaExpr::parse(s, alphabet)?, annotator)
    }

    /// The textual syntax of the subformula at `x`.
    pub fn expr_string_at(&self, x: FIdx, alphabet: &Alphabet) -> String {
        let mut out = String::new();
        enum Step {
            Node(u32),
            Text(&'static str),
        }
        let mut stack = vec![Step::Node(x.0)];
        while let Some(s) = stack.pop() {
            match s {
                Step::Text(t) => out.push_str(t),
                Step::Node(i) => {
                    debug_assert_ne!(i, NIL);
                    let n = &self.nodes[i as usize];
                    match n.tag {
                        Tag::Leaf(a) => {
                            out.push_str(alphabet.name(a.label));
                            if a.holed {
                                out.push('⊡');
                            }
                        }
                        Tag::Inner(op) => {
                            out.push_str(op.symbol());
                            out.push('(');
                            stack.push(Step::Text(")"));
                            stack.push(Step::Node(n.right));
                            stack.push(Step::Text(","));
                            stack.push(Step::Node(n.left));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn expr_string(&self, alphabet: &Alphabet) -> String {
        self.expr_string_at(self.root(), alphabet)
    }
}
