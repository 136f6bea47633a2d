//! Stepwise tree automata, selecting automata, and their transition algebras.
//!
//! A run assigns each node a transition `(pre, self, post)`: the root starts
//! in `q0`, a first child starts in some state of `Init(parent label)`, a
//! node starts where its left sibling ended, a leaf's self state is in
//! `Init(label)`, an inner node's self state is where its last child ended.
//! A tree is accepted if some run ends the root in `qF`.

mod element;

use std::fmt;

use thiserror::Error;

use crate::formula::Op;
use crate::tree::{Alphabet, Kind, Symbol};

pub use element::{Element, KindMismatch, Signature};

pub type State = usize;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(Symbol),
    #[error(transparent)]
    KindMismatch(#[from] KindMismatch),
    #[error("invalid automaton: {0}")]
    Invalid(String),
}

/// A stepwise nondeterministic tree automaton. States are `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct Nfta {
    names: Vec<String>,
    alphabet: Alphabet,
    init: Vec<Vec<State>>,
    delta: Vec<(State, State, State)>,
    /// `by_self[q]`: the pairs `(pre, post)` with `(pre, q, post) ∈ δ`.
    by_self: Vec<Vec<(State, State)>>,
    q0: State,
    qf: State,
}

impl Nfta {
    /// Builds and validates an automaton; transitions are deduplicated and
    /// symbols without an `Init` entry get the empty set.
    pub fn new(
        names: Vec<String>,
        alphabet: Alphabet,
        init: Vec<(Symbol, Vec<State>)>,
        delta: Vec<(State, State, State)>,
        q0: State,
        qf: State,
    ) -> Result<Nfta, AutomatonError> {
        let n = names.len();
        let bad = |m: String| Err(AutomatonError::Invalid(m));
        if n == 0 {
            return bad("no states".into());
        }
        if q0 >= n || qf >= n {
            return bad("q0 or qF out of range".into());
        }
        let mut init_sets = vec![Vec::new(); alphabet.len()];
        for (a, qs) in init {
            let Some(slot) = init_sets.get_mut(a.0 as usize) else {
                return Err(AutomatonError::UnknownSymbol(a));
            };
            for q in qs {
                if q >= n {
                    return bad(format!("init state {q} out of range"));
                }
                slot.push(q);
            }
        }
        for s in &mut init_sets {
            s.sort_unstable();
            s.dedup();
        }
        let mut delta = delta;
        if delta.iter().any(|&(a, b, c)| a >= n || b >= n || c >= n) {
            return bad("transition state out of range".into());
        }
        delta.sort_unstable();
        delta.dedup();
        let mut by_self = vec![Vec::new(); n];
        for &(a, b, c) in &delta {
            by_self[b].push((a, c));
        }
        Ok(Nfta { names, alphabet, init: init_sets, delta, by_self, q0, qf })
    }

    pub fn states(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, q: State) -> &str {
        &self.names[q]
    }

    pub fn state(&self, name: &str) -> Option<State> {
        self.names.iter().position(|n| n == name)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn init(&self, a: Symbol) -> &[State] {
        self.init.get(a.0 as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn delta(&self) -> &[(State, State, State)] {
        &self.delta
    }

    pub fn has_transition(&self, t: (State, State, State)) -> bool {
        self.delta.binary_search(&t).is_ok()
    }

    pub fn q0(&self) -> State {
        self.q0
    }

    pub fn qf(&self) -> State {
        self.qf
    }

    pub fn knows(&self, a: Symbol) -> bool {
        (a.0 as usize) < self.alphabet.len()
    }

    /// Writes the text format read by [`parse_automaton`].
    pub fn to_text(&self) -> String {
        let mut s = format!("states: {}\n", self.names.join(" "));
        let syms: Vec<&str> = self.alphabet.symbols().map(|a| self.alphabet.name(a)).collect();
        s += &format!("alphabet: {}\n", syms.join(" "));
        for a in self.alphabet.symbols() {
            if !self.init(a).is_empty() {
                let qs: Vec<&str> = self.init(a).iter().map(|&q| self.state_name(q)).collect();
                s += &format!("init: {} {}\n", self.alphabet.name(a), qs.join(" "));
            }
        }
        for &(a, b, c) in &self.delta {
            s += &format!("delta: {} {} {}\n", self.names[a], self.names[b], self.names[c]);
        }
        s += &format!("q0: {}\nqF: {}\n", self.names[self.q0], self.names[self.qf]);
        s
    }
}

impl fmt::Debug for Nfta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// A selecting automaton: an [`Nfta`] with a set of `k`-tuples of states.
#[derive(Clone, PartialEq, Eq)]
pub struct Nfsta {
    base: Nfta,
    k: usize,
    tuples: Vec<Vec<State>>,
}

impl Nfsta {
    pub fn new(base: Nfta, k: usize, tuples: Vec<Vec<State>>) -> Result<Nfsta, AutomatonError> {
        let mut tuples = tuples;
        for t in &tuples {
            if t.len() != k {
                return Err(AutomatonError::Invalid(format!("tuple of length {} for arity {k}", t.len())));
            }
            if t.iter().any(|&q| q >= base.states()) {
                return Err(AutomatonError::Invalid("selecting state out of range".into()));
            }
        }
        if k > 16 {
            return Err(AutomatonError::Invalid("arity above 16".into()));
        }
        tuples.sort();
        tuples.dedup();
        Ok(Nfsta { base, k, tuples })
    }

    /// The Boolean query of `base`: arity 0 and `S = {()}`.
    pub fn boolean(base: Nfta) -> Nfsta {
        Nfsta { base, k: 0, tuples: vec![Vec::new()] }
    }

    pub fn nfta(&self) -> &Nfta {
        &self.base
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn tuples(&self) -> &[Vec<State>] {
        &self.tuples
    }

    /// The distinct states of tuple `s` in order of first occurrence; mask
    /// bit `i` of an extended element stands for the `i`-th of them.
    pub fn tuple_states(&self, s: usize) -> Vec<State> {
        let mut out: Vec<State> = Vec::new();
        for &q in &self.tuples[s] {
            if !out.contains(&q) {
                out.push(q);
            }
        }
        out
    }

    /// Mask with only the bit of `q`, or 0 if `q` does not occur in tuple `s`.
    pub fn state_bit(&self, s: usize, q: State) -> u32 {
        self.tuple_states(s).iter().position(|&x| x == q).map_or(0, |i| 1 << i)
    }

    /// Mask with the bits of all states of tuple `s`.
    pub fn full_mask(&self, s: usize) -> u32 {
        (1u32 << self.tuple_states(s).len()) - 1
    }

    pub fn to_text(&self) -> String {
        let mut s = self.base.to_text();
        if self.k > 0 {
            for t in &self.tuples {
                let qs: Vec<&str> = t.iter().map(|&q| self.base.state_name(q)).collect();
                s += &format!("select: {}\n", qs.join(" "));
            }
        }
        s
    }
}

impl fmt::Debug for Nfsta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Reads the automaton text format:
///
/// ```text
/// states: q0 q1 qF
/// alphabet: a b
/// init: a q1          # one line per symbol (repeats accumulate)
/// delta: q0 q1 qF     # q0 -> qF reading q1
/// q0: q0
/// qF: qF
/// select: q1          # optional; one line per selecting tuple
/// ```
///
/// Without `select` lines the result is the Boolean query.
pub fn parse_automaton(text: &str) -> Result<Nfsta, AutomatonError> {
    let err = |line: usize, msg: String| AutomatonError::Parse { line, msg };
    let mut names: Option<Vec<String>> = None;
    let mut alphabet: Option<Alphabet> = None;
    let mut init: Vec<(usize, String, Vec<String>)> = Vec::new();
    let mut delta: Vec<(usize, Vec<String>)> = Vec::new();
    let mut q0: Option<(usize, String)> = None;
    let mut qf: Option<(usize, String)> = None;
    let mut select: Vec<(usize, Vec<String>)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, rest) = content.split_once(':').ok_or_else(|| err(line, "expected '<section>: ...'".into()))?;
        let toks: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
        match key.trim() {
            "states" => {
                if names.is_some() {
                    return Err(err(line, "repeated states line".into()));
                }
                let mut seen = std::collections::HashSet::new();
                if let Some(d) = toks.iter().find(|t| !seen.insert(t.as_str())) {
                    return Err(err(line, format!("duplicate state '{d}'")));
                }
                names = Some(toks);
            }
            "alphabet" => {
                if alphabet.is_some() {
                    return Err(err(line, "repeated alphabet line".into()));
                }
                alphabet = Some(Alphabet::from_names(&toks));
            }
            "init" => {
                let (a, qs) = toks.split_first().ok_or_else(|| err(line, "init needs a symbol".into()))?;
                init.push((line, a.clone(), qs.to_vec()));
            }
            "delta" => {
                if toks.len() != 3 {
                    return Err(err(line, format!("a transition has 3 states, found {}", toks.len())));
                }
                delta.push((line, toks));
            }
            "q0" | "qF" => {
                if toks.len() != 1 {
                    return Err(err(line, format!("{} takes one state", key.trim())));
                }
                let slot = if key.trim() == "q0" { &mut q0 } else { &mut qf };
                if slot.is_some() {
                    return Err(err(line, format!("repeated {} line", key.trim())));
                }
                *slot = Some((line, toks[0].clone()));
            }
            "select" => select.push((line, toks)),
            other => return Err(err(line, format!("unknown section '{other}'"))),
        }
    }
    let last = text.lines().count().max(1);
    let names = names.ok_or_else(|| err(last, "missing states line".into()))?;
    let alphabet = alphabet.ok_or_else(|| err(last, "missing alphabet line".into()))?;
    let state = |line: usize, s: &str| names.iter().position(|n| n == s).ok_or_else(|| err(line, format!("unknown state '{s}'")));
    let mut init_syms = Vec::new();
    for (line, a, qs) in &init {
        let sym = alphabet.get(a).ok_or_else(|| err(*line, format!("unknown symbol '{a}'")))?;
        let qs = qs.iter().map(|q| state(*line, q)).collect::<Result<Vec<_>, _>>()?;
        init_syms.push((sym, qs));
    }
    let mut trans = Vec::new();
    for (line, t) in &delta {
        trans.push((state(*line, &t[0])?, state(*line, &t[1])?, state(*line, &t[2])?));
    }
    let (l0, s0) = q0.ok_or_else(|| err(last, "missing q0 line".into()))?;
    let (lf, sf) = qf.ok_or_else(|| err(last, "missing qF line".into()))?;
    let q0 = state(l0, &s0)?;
    let qf = state(lf, &sf)?;
    let k = select.first().map(|(_, t)| t.len());
    let mut tuples = Vec::new();
    for (line, t) in &select {
        if Some(t.len()) != k {
            return Err(err(*line, "selecting tuples differ in length".into()));
        }
        tuples.push(t.iter().map(|q| state(*line, q)).collect::<Result<Vec<_>, _>>()?);
    }
    let base = Nfta::new(names, alphabet, init_syms, trans, q0, qf)?;
    match k {
        None => Ok(Nfsta::boolean(base)),
        Some(k) => Nfsta::new(base, k, tuples),
    }
}

fn atomic(a: Symbol, holed: bool, n: &Nfta, m: u32, bit: impl Fn(State) -> u32) -> Result<Element, AutomatonError> {
    if !n.knows(a) {
        return Err(AutomatonError::UnknownSymbol(a));
    }
    let kind = if holed { Kind::Context } else { Kind::Forest };
    let mut e = Element::empty(kind, n.states(), m);
    if holed {
        // the hole starts in Init(a) and may end anywhere; a reads that end
        for q4 in 0..n.states() {
            for &(q1, q2) in &n.by_self[q4] {
                for &q3 in n.init(a) {
                    e.insert(Signature::Context((q1, q2), (q3, q4)), bit(q4));
                }
            }
        }
    } else {
        for &q3 in n.init(a) {
            for &(q1, q2) in &n.by_self[q3] {
                e.insert(Signature::Forest(q1, q2), bit(q3));
            }
        }
    }
    Ok(e)
}

/// Signatures of the runs on the one-node forest `a` or context `a⊡`.
pub fn ta_atomic(a: Symbol, holed: bool, n: &Nfta) -> Result<Element, AutomatonError> {
    atomic(a, holed, n, 0, |_| 0)
}

/// Join of two plain elements.
pub fn ta_combine(op: Op, x: &Element, y: &Element) -> Result<Element, AutomatonError> {
    Ok(Element::combine(op, x, y)?)
}

/// Extended signatures for tuple `s`: each signature is paired with the
/// set of states of the tuple that the run visits (as self states).
pub fn eta_atomic(a: Symbol, holed: bool, m: &Nfsta, s: usize) -> Result<Element, AutomatonError> {
    let states = m.tuple_states(s);
    let bits = states.len() as u32;
    atomic(a, holed, m.nfta(), bits, |q| states.iter().position(|&x| x == q).map_or(0, |i| 1 << i))
}

/// Join of two extended elements; masks are united.
pub fn eta_combine(op: Op, x: &Element, y: &Element) -> Result<Element, AutomatonError> {
    Ok(Element::combine(op, x, y)?)
}

/// True iff `(q0, qF)` occurs in the forest element `e` (with any mask).
pub fn is_accepting_signature(e: &Element, n: &Nfta) -> Result<bool, AutomatonError> {
    if e.kind() != Kind::Forest {
        return Err(KindMismatch(Op::ConcatHH).into());
    }
    let sig = Signature::Forest(n.q0(), n.qf());
    Ok((0..(1u32 << e.mask_bits())).any(|r| e.contains(sig, r)))
}

#[cfg(test)]
mod tests;
