//! Brute-force references: exhaustive run search on small forests and
//! contexts, and state-set dynamic programs on trees. Nothing here uses the
//! algebra joins.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::automata::{Nfsta, Nfta, Signature, State};
use crate::tree::{ForestOrContext, NodeId, NodeRef};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    pub max_nodes: usize,
    pub max_states: usize,
    /// Cap on the number of answers `oracle_select` may produce.
    pub max_answers: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_nodes: 8, max_states: 5, max_answers: 1_000_000 }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large: {0}")]
    TooLarge(String),
}

/// Placeholder self state of the hole.
pub const HOLE_STATE: State = usize::MAX;

/// A run: one transition per item in document order (the hole included,
/// with self state [`HOLE_STATE`]).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Run {
    /// `(node id or None for the hole, (pre, self, post))`
    pub items: Vec<(Option<NodeId>, (State, State, State))>,
}

impl Run {
    pub fn of(&self, id: NodeId) -> Option<(State, State, State)> {
        self.items.iter().find(|(x, _)| *x == Some(id)).map(|(_, t)| *t)
    }
}

struct Item {
    id: Option<NodeId>,
    label: crate::tree::Symbol,
    /// items of the children, in order
    children: Vec<usize>,
    /// item whose post this item's pre must equal
    left: Option<usize>,
    parent: Option<usize>,
}

/// Items in postorder: children before parents, left siblings before right.
fn items(d: &ForestOrContext) -> (Vec<Item>, Vec<usize>) {
    let pre = d.items_preorder();
    let slot_to_pre: HashMap<usize, usize> = pre.iter().enumerate().map(|(i, n)| (n.slot(), i)).collect();
    // postorder of preorder indices
    let mut post = Vec::with_capacity(pre.len());
    let mut stack: Vec<(usize, bool)> = Vec::new();
    let roots: Vec<usize> = d.roots().map(|r| slot_to_pre[&r.slot()]).collect();
    for &r in roots.iter().rev() {
        stack.push((r, false));
    }
    while let Some((i, done)) = stack.pop() {
        if done {
            post.push(i);
            continue;
        }
        stack.push((i, true));
        let kids: Vec<usize> = pre[i].children().map(|c| slot_to_pre[&c.slot()]).collect();
        for &c in kids.iter().rev() {
            stack.push((c, false));
        }
    }
    let pos: HashMap<usize, usize> = post.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut out: Vec<Item> = Vec::with_capacity(pre.len());
    for &i in &post {
        let n: NodeRef<'_> = pre[i];
        let kids: Vec<usize> = n.children().map(|c| pos[&slot_to_pre[&c.slot()]]).collect();
        let siblings: Vec<usize> = match n.parent() {
            Some(p) => p.children().map(|c| slot_to_pre[&c.slot()]).collect(),
            None => roots.clone(),
        };
        let at = siblings.iter().position(|&x| x == i).expect("listed");
        out.push(Item {
            id: (!n.is_hole()).then(|| n.id()),
            label: n.label(),
            children: kids,
            left: (at > 0).then(|| pos[&siblings[at - 1]]),
            parent: n.parent().map(|p| pos[&slot_to_pre[&p.slot()]]),
        });
    }
    let root_items = roots.iter().map(|r| pos[r]).collect();
    (out, root_items)
}

fn check_caps(n: &Nfta, d: &ForestOrContext, cfg: &OracleConfig) -> Result<(), OracleError> {
    if d.node_count() > cfg.max_nodes || n.states() > cfg.max_states {
        return Err(OracleError::TooLarge(format!(
            "{} nodes (cap {}), {} states (cap {})",
            d.node_count(),
            cfg.max_nodes,
            n.states(),
            cfg.max_states
        )));
    }
    Ok(())
}

/// Calls `f` on every run of `n` on `d`. `fixed` pins self states of nodes;
/// `ends` pins the pre state of the first root and the post state of the
/// last root.
fn search(
    n: &Nfta,
    d: &ForestOrContext,
    fixed: &HashMap<NodeId, State>,
    ends: Option<(State, State)>,
    f: &mut dyn FnMut(&[(State, State, State)], &[Item]),
) {
    let (its, roots) = items(d);
    let q = n.states();
    let mut by_self: Vec<Vec<(State, State)>> = vec![Vec::new(); q];
    for &(a, b, c) in n.delta() {
        by_self[b].push((a, c));
    }
    let mut asg: Vec<(State, State, State)> = vec![(0, 0, 0); its.len()];
    let first_root = roots.first().copied();
    let last_root = roots.last().copied();

    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        its: &[Item],
        asg: &mut Vec<(State, State, State)>,
        n: &Nfta,
        by_self: &[Vec<(State, State)>],
        fixed: &HashMap<NodeId, State>,
        ends: Option<(State, State)>,
        first_root: Option<usize>,
        last_root: Option<usize>,
        f: &mut dyn FnMut(&[(State, State, State)], &[Item]),
    ) {
        if k == its.len() {
            f(asg, its);
            return;
        }
        let it = &its[k];
        let pre_ok = |p: State| -> bool {
            if let Some(l) = it.left {
                asg[l].2 == p
            } else if let Some(par) = it.parent {
                n.init(its[par].label).contains(&p)
            } else {
                ends.is_none_or(|(q0, _)| Some(k) != first_root || p == q0)
            }
        };
        let post_ok = |p: State| ends.is_none_or(|(_, qf)| Some(k) != last_root || p == qf);
        let mut cands: Vec<(State, State, State)> = Vec::new();
        if it.id.is_none() {
            for p in (0..n.states()).filter(|&p| pre_ok(p)) {
                for p2 in (0..n.states()).filter(|&p2| post_ok(p2)) {
                    cands.push((p, HOLE_STATE, p2));
                }
            }
        } else {
            let selfs: Vec<State> = match it.children.last() {
                Some(&c) => vec![asg[c].2],
                None => n.init(it.label).to_vec(),
            };
            let pin = it.id.and_then(|id| fixed.get(&id).copied());
            for s in selfs {
                if pin.is_some_and(|x| x != s) {
                    continue;
                }
                for &(p, p2) in &by_self[s] {
                    if pre_ok(p) && post_ok(p2) {
                        cands.push((p, s, p2));
                    }
                }
            }
        }
        for t in cands {
            asg[k] = t;
            rec(k + 1, its, asg, n, by_self, fixed, ends, first_root, last_root, f);
        }
    }
    rec(0, &its, &mut asg, n, &by_self, fixed, ends, first_root, last_root, f);
}

fn to_run(asg: &[(State, State, State)], its: &[Item], d: &ForestOrContext) -> Run {
    // report in document order
    let order: Vec<Option<NodeId>> = d.items_preorder().iter().map(|x| (!x.is_hole()).then(|| x.id())).collect();
    let by: HashMap<Option<NodeId>, (State, State, State)> = its.iter().zip(asg).map(|(i, t)| (i.id, *t)).collect();
    Run { items: order.into_iter().map(|id| (id, by[&id])).collect() }
}

/// All runs of `n` on `d`, by exhaustive search.
pub fn oracle_runs(n: &Nfta, d: &ForestOrContext, cfg: &OracleConfig) -> Result<Vec<Run>, OracleError> {
    check_caps(n, d, cfg)?;
    let mut out = Vec::new();
    search(n, d, &HashMap::new(), None, &mut |asg, its| out.push(to_run(asg, its, d)));
    Ok(out)
}

fn signature_of(asg: &[(State, State, State)], its: &[Item], roots: &[usize]) -> Signature {
    let first = asg[roots[0]].0;
    let last = asg[*roots.last().expect("nonempty")].2;
    match its.iter().position(|i| i.id.is_none()) {
        None => Signature::Forest(first, last),
        Some(h) => Signature::Context((first, last), (asg[h].0, asg[h].2)),
    }
}

/// Signatures of all runs (the identity relation for the empty forest).
pub fn oracle_signatures(n: &Nfta, d: &ForestOrContext, cfg: &OracleConfig) -> Result<BTreeSet<Signature>, OracleError> {
    Ok(oracle_ext_signatures_with(n, d, cfg, &[])?.into_iter().map(|(s, _)| s).collect())
}

/// Signatures of all runs, each with the mask of the states of tuple `s`
/// that occur as self states.
pub fn oracle_ext_signatures(
    m: &Nfsta,
    s: usize,
    d: &ForestOrContext,
    cfg: &OracleConfig,
) -> Result<BTreeSet<(Signature, u32)>, OracleError> {
    oracle_ext_signatures_with(m.nfta(), d, cfg, &m.tuple_states(s))
}

fn mask_of(asg: &[(State, State, State)], its: &[Item], states: &[State], keep: impl Fn(NodeId) -> bool) -> u32 {
    let mut r = 0;
    for (it, t) in its.iter().zip(asg) {
        if it.id.is_some_and(&keep) {
            if let Some(i) = states.iter().position(|&x| x == t.1) {
                r |= 1 << i;
            }
        }
    }
    r
}

fn oracle_ext_signatures_with(
    n: &Nfta,
    d: &ForestOrContext,
    cfg: &OracleConfig,
    states: &[State],
) -> Result<BTreeSet<(Signature, u32)>, OracleError> {
    check_caps(n, d, cfg)?;
    let mut out = BTreeSet::new();
    if d.is_empty() {
        for q in 0..n.states() {
            out.insert((Signature::Forest(q, q), 0));
        }
        return Ok(out);
    }
    let (_, roots) = items(d);
    search(n, d, &HashMap::new(), None, &mut |asg, its| {
        out.insert((signature_of(asg, its, &roots), mask_of(asg, its, states, |_| true)));
    });
    Ok(out)
}

/// The relevant extended signatures of a piece of `t`: restrictions to the
/// nodes of `sub` of the accepting runs on `t` that give node `prefix[i]`
/// the self state `tuple[i]` and visit every state of the tuple. `sub`
/// must consist of nodes of `t` (ids matching) and, if it is a context, its
/// hole stands for the nodes of `t` between the hole's neighbours in `sub`.
pub fn oracle_relevant(
    m: &Nfsta,
    s: usize,
    t: &ForestOrContext,
    sub: &ForestOrContext,
    prefix: &[NodeId],
    cfg: &OracleConfig,
) -> Result<BTreeSet<(Signature, u32)>, OracleError> {
    let n = m.nfta();
    check_caps(n, t, cfg)?;
    let tuple = &m.tuples()[s];
    let mut fixed = HashMap::new();
    for (i, &v) in prefix.iter().enumerate() {
        if let Some(&old) = fixed.get(&v) {
            if old != tuple[i] {
                return Ok(BTreeSet::new());
            }
        }
        fixed.insert(v, tuple[i]);
    }
    let inside: std::collections::HashSet<NodeId> = sub.preorder().iter().map(|x| x.id()).collect();
    // sequence of t-nodes filling the hole: children of the hole's parent
    // (or roots) strictly between its neighbours in `sub`
    let fill: Vec<NodeId> = match sub.items_preorder().into_iter().find(|x| x.is_hole()) {
        None => Vec::new(),
        Some(h) => {
            let parent = h.parent().map(|p| p.id());
            let tp = parent.map(|p| t.find(p).expect("sub node in t"));
            let list: Vec<NodeId> = match tp {
                Some(p) => p.children().map(|c| c.id()).collect(),
                None => t.roots().map(|c| c.id()).collect(),
            };
            let sibs: Vec<NodeRef<'_>> = match h.parent() {
                Some(p) => p.children().collect(),
                None => sub.roots().collect(),
            };
            let at = sibs.iter().position(|x| x.is_hole()).expect("hole listed");
            let lo = at.checked_sub(1).map(|i| sibs[i].id());
            let hi = sibs.get(at + 1).map(|x| x.id());
            let start = lo.map_or(0, |l| list.iter().position(|&x| x == l).expect("sibling in t") + 1);
            let end = hi.map_or(list.len(), |r| list.iter().position(|&x| x == r).expect("sibling in t"));
            list[start..end].to_vec()
        }
    };
    let states = m.tuple_states(s);
    let full = m.full_mask(s);
    let mut out = BTreeSet::new();
    search(n, t, &fixed, Some((n.q0(), n.qf())), &mut |asg, its| {
        let at = |id: NodeId| asg[its.iter().position(|i| i.id == Some(id)).expect("node")];
        let hole = (!fill.is_empty()).then(|| (at(fill[0]).0, at(*fill.last().expect("nonempty")).2));
        let sub_roots: Vec<_> = sub.roots().collect();
        let first = match sub_roots.first() {
            Some(x) if x.is_hole() => hole.map(|h| h.0),
            Some(x) => Some(at(x.id()).0),
            None => None,
        };
        let last = match sub_roots.last() {
            Some(x) if x.is_hole() => hole.map(|h| h.1),
            Some(x) => Some(at(x.id()).2),
            None => None,
        };
        // only runs that visit every selecting state of the tuple count
        if mask_of(asg, its, &states, |_| true) != full {
            return;
        }
        let (Some(first), Some(last)) = (first, last) else { return };
        let sig = if sub.has_hole() {
            let Some(h) = hole else { return };
            Signature::Context((first, last), h)
        } else {
            Signature::Forest(first, last)
        };
        out.insert((sig, mask_of(asg, its, &states, |id| inside.contains(&id))));
    });
    Ok(out)
}

/// Acceptance by bottom-up sets of reachable self states, sweeping the
/// children of each node left to right. A forest is read root after root
/// from `q0`.
pub fn oracle_eval(n: &Nfta, t: &ForestOrContext) -> bool {
    let fixed = HashMap::new();
    let selfs = self_sets(n, t, &fixed);
    let roots: Vec<NodeRef<'_>> = t.roots().collect();
    if roots.is_empty() {
        return n.q0() == n.qf();
    }
    let mut cur = vec![false; n.states()];
    cur[n.q0()] = true;
    for r in roots {
        cur = step(n, &cur, &selfs[r.slot()]);
    }
    cur[n.qf()]
}

fn step(n: &Nfta, from: &[bool], selfs: &[bool]) -> Vec<bool> {
    let mut out = vec![false; n.states()];
    for &(a, b, c) in n.delta() {
        if b < selfs.len() && from[a] && selfs[b] {
            out[c] = true;
        }
    }
    out
}

/// Per slot: possible self states, honouring pinned states.
fn self_sets(n: &Nfta, t: &ForestOrContext, fixed: &HashMap<NodeId, State>) -> Vec<Vec<bool>> {
    let q = n.states();
    let order = t.items_preorder();
    let mut sets = vec![Vec::new(); order.iter().map(|x| x.slot() + 1).max().unwrap_or(0)];
    for v in order.iter().rev() {
        if v.is_hole() {
            sets[v.slot()] = vec![false; q];
            continue;
        }
        let mut cur = vec![false; q];
        for &p in n.init(v.label()) {
            cur[p] = true;
        }
        for c in v.children() {
            cur = step(n, &cur, &sets[c.slot()]);
        }
        if let Some(&pin) = fixed.get(&v.id()) {
            for (x, b) in cur.iter_mut().enumerate() {
                *b &= x == pin;
            }
        }
        sets[v.slot()] = cur;
    }
    sets
}

/// Per slot: the (pre, post) pairs the rest of the tree allows, given the
/// pinned states. Pre and post are independent, so this is a pair of sets.
fn outside_sets(n: &Nfta, t: &ForestOrContext, selfs: &[Vec<bool>]) -> Vec<(Vec<bool>, Vec<bool>)> {
    let q = n.states();
    let mut out = vec![(vec![false; q], vec![false; q]); selfs.len()];
    let back = |to: &[bool], selfs: &[bool]| -> Vec<bool> {
        let mut r = vec![false; q];
        for &(a, b, c) in n.delta() {
            if to[c] && selfs[b] {
                r[a] = true;
            }
        }
        r
    };
    // process a sibling list given the allowed start and end states
    let mut lists: Vec<(Vec<usize>, Vec<bool>, Vec<bool>)> = Vec::new();
    let roots: Vec<usize> = t.roots().map(|r| r.slot()).collect();
    let mut s0 = vec![false; q];
    s0[n.q0()] = true;
    let mut sf = vec![false; q];
    sf[n.qf()] = true;
    lists.push((roots, s0, sf));
    while let Some((list, start, end)) = lists.pop() {
        let mut fwd = vec![start];
        for &c in &list {
            let nxt = step(n, fwd.last().expect("nonempty"), &selfs[c]);
            fwd.push(nxt);
        }
        let mut bwd = vec![end];
        for &c in list.iter().rev() {
            let prv = back(bwd.last().expect("nonempty"), &selfs[c]);
            bwd.push(prv);
        }
        bwd.reverse();
        for (i, &c) in list.iter().enumerate() {
            out[c] = (fwd[i].clone(), bwd[i + 1].clone());
            let v = t.node(c);
            if v.is_hole() || v.is_leaf() {
                continue;
            }
            // allowed self states of v given its outside pair
            let (pre, post) = &out[c];
            let mut allowed = vec![false; q];
            for &(a, b, cc) in n.delta() {
                if pre[a] && post[cc] && selfs[c][b] {
                    allowed[b] = true;
                }
            }
            let mut init = vec![false; q];
            for &p in n.init(v.label()) {
                init[p] = true;
            }
            lists.push((v.children().map(|x| x.slot()).collect(), init, allowed));
        }
    }
    out
}

fn feasible(n: &Nfta, selfs: &[Vec<bool>], outs: &[(Vec<bool>, Vec<bool>)], slot: usize, q: State) -> bool {
    selfs[slot][q] && n.delta().iter().any(|&(a, b, c)| b == q && outs[slot].0[a] && outs[slot].1[c])
}

/// All answers of `m` on the tree `t`: for every selecting tuple, extends
/// feasible prefixes one position at a time, deciding feasibility of each
/// node with pinned self states by a full inside/outside pass.
pub fn oracle_select(m: &Nfsta, t: &ForestOrContext, cfg: &OracleConfig) -> Result<BTreeSet<Vec<NodeId>>, OracleError> {
    let n = m.nfta();
    let mut out = BTreeSet::new();
    let nodes: Vec<(usize, NodeId)> = t.preorder().iter().map(|x| (x.slot(), x.id())).collect();
    for tuple in m.tuples() {
        let mut stack: Vec<Vec<(usize, NodeId)>> = vec![Vec::new()];
        while let Some(prefix) = stack.pop() {
            let mut fixed = HashMap::new();
            for (i, &(_, id)) in prefix.iter().enumerate() {
                fixed.insert(id, tuple[i]);
            }
            let selfs = self_sets(n, t, &fixed);
            if prefix.len() == tuple.len() {
                if oracle_accepts_with(n, t, &selfs) {
                    out.insert(prefix.iter().map(|x| x.1).collect());
                    if out.len() > cfg.max_answers {
                        return Err(OracleError::TooLarge(format!("more than {} answers", cfg.max_answers)));
                    }
                }
                continue;
            }
            let outs = outside_sets(n, t, &selfs);
            let q = tuple[prefix.len()];
            for &(slot, id) in &nodes {
                let ok = match fixed.get(&id) {
                    Some(&old) => old == q && feasible(n, &selfs, &outs, slot, q),
                    None => feasible(n, &selfs, &outs, slot, q),
                };
                if !ok {
                    continue;
                }
                let mut p = prefix.clone();
                p.push((slot, id));
                if p.len() < tuple.len() {
                    stack.push(p);
                    continue;
                }
                // feasibility of the last position is already exact
                out.insert(p.iter().map(|x| x.1).collect());
                if out.len() > cfg.max_answers {
                    return Err(OracleError::TooLarge(format!("more than {} answers", cfg.max_answers)));
                }
            }
        }
    }
    Ok(out)
}

fn oracle_accepts_with(n: &Nfta, t: &ForestOrContext, selfs: &[Vec<bool>]) -> bool {
    let mut cur = vec![false; n.states()];
    cur[n.q0()] = true;
    let mut any = false;
    for r in t.roots() {
        any = true;
        cur = step(n, &cur, &selfs[r.slot()]);
    }
    if !any {
        return n.q0() == n.qf();
    }
    cur[n.qf()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::parse_automaton;
    use crate::tree::{parse_tree_text, Alphabet, Symbol};

    fn load(aut: &str, tree: &str) -> (Nfsta, ForestOrContext) {
        let m = parse_automaton(aut).unwrap();
        let a = m.nfta().alphabet().clone();
        let t = parse_tree_text(tree, |s| a.get(s)).unwrap();
        (m, t)
    }

    #[test]
    fn single_node_has_one_run() {
        let n = Nfta::new(
            vec!["q0".into(), "q".into(), "qF".into()],
            Alphabet::from_names(&["a"]),
            vec![(Symbol(0), vec![1])],
            vec![(0, 1, 2)],
            0,
            2,
        )
        .unwrap();
        let t = ForestOrContext::atom(NodeId(1), Symbol(0), false);
        let runs = oracle_runs(&n, &t, &OracleConfig::default()).unwrap();
        assert_eq!(runs, vec![Run { items: vec![(Some(NodeId(1)), (0, 1, 2))] }]);
        assert!(oracle_eval(&n, &t));
        let states = vec!["q0".into(), "q".into(), "qF".into()];
        let empty_init = Nfta::new(states, Alphabet::from_names(&["a"]), vec![], vec![(0, 1, 2)], 0, 2).unwrap();
        assert!(oracle_runs(&empty_init, &t, &OracleConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn alternating_tree_has_the_expected_run() {
        let (m, t) = load(include_str!("../data/alternating.aut"), include_str!("../data/alternating.tree"));
        let n = m.nfta();
        let q = |s: &str| n.state(s).unwrap();
        let cfg = OracleConfig { max_nodes: 9, max_states: 6, ..Default::default() };
        let runs = oracle_runs(n, &t, &cfg).unwrap();
        let accepting: Vec<_> = runs.iter().filter(|r| r.items[0].1 .0 == q("q0") && r.items[0].1 .2 == q("qF")).collect();
        assert_eq!(accepting.len(), 1);
        let r = accepting[0];
        // the root's children run q1 -> q2 -> q1 -> q2 -> q1
        assert_eq!(r.of(NodeId(1)), Some((q("q0"), q("q1"), q("qF"))));
        assert_eq!(r.of(NodeId(2)), Some((q("q1"), q("q1"), q("q2"))));
        assert_eq!(r.of(NodeId(3)), Some((q("q1"), q("q1"), q("q2"))));
        assert_eq!(r.of(NodeId(4)), Some((q("q2"), q("q3"), q("q1"))));
        assert_eq!(r.of(NodeId(5)), Some((q("q2"), q("q3"), q("q1"))));
        assert_eq!(r.of(NodeId(6)), Some((q("q1"), q("q1"), q("q2"))));
        assert_eq!(r.of(NodeId(7)), Some((q("q2"), q("q3"), q("q1"))));
        assert_eq!(r.of(NodeId(8)), Some((q("q3"), q("q1"), q("q4"))));
        assert_eq!(r.of(NodeId(9)), Some((q("q4"), q("q3"), q("q3"))));
        assert!(oracle_eval(n, &t));
        let (_, bad) = load(include_str!("../data/alternating.aut"), include_str!("../data/rejected.tree"));
        assert!(!oracle_eval(n, &bad));
        let runs = oracle_runs(n, &bad, &cfg).unwrap();
        assert!(!runs.iter().any(|r| r.items[0].1 .0 == q("q0") && r.items[0].1 .2 == q("qF")));
    }

    #[test]
    fn pairs_fixture_selects_two_pairs() {
        let (m, t) = load(include_str!("../data/pairs.aut"), include_str!("../data/pairs.tree"));
        let got = oracle_select(&m, &t, &OracleConfig::default()).unwrap();
        let want: BTreeSet<Vec<NodeId>> = [vec![NodeId(5), NodeId(2)], vec![NodeId(6), NodeId(2)]].into_iter().collect();
        assert_eq!(got, want);
    }

    /// The state-set search agrees with answers read off all accepting runs.
    #[test]
    fn select_matches_exhaustive_runs() {
        use crate::gen::{random_nfsta, random_tree, Lcg, TreeShape};
        let mut rng = Lcg::new(9);
        let cfg = OracleConfig { max_nodes: 7, max_states: 5, ..Default::default() };
        for _ in 0..200 {
            let states = 2 + rng.below(3);
            let k = rng.below(3);
            let tuples = 1 + rng.below(2);
            let m = random_nfsta(&mut rng, states, 2, 40, k, tuples);
            let n = 1 + rng.below(6);
            let t = random_tree(&mut rng, n, 2, TreeShape::Random);
            let ids: Vec<NodeId> = t.preorder().iter().map(|x| x.id()).collect();
            let nf = m.nfta();
            let mut want = BTreeSet::new();
            for r in oracle_runs(nf, &t, &cfg).unwrap() {
                if r.items[0].1 .0 != nf.q0() || r.items[0].1 .2 != nf.qf() {
                    continue;
                }
                for tuple in m.tuples() {
                    let mut prefixes: Vec<Vec<NodeId>> = vec![vec![]];
                    for &q in tuple {
                        let picks: Vec<NodeId> = ids.iter().copied().filter(|&v| r.of(v).unwrap().1 == q).collect();
                        prefixes = prefixes.iter().flat_map(|p| picks.iter().map(move |&v| [p.clone(), vec![v]].concat())).collect();
                    }
                    want.extend(prefixes);
                }
            }
            assert_eq!(oracle_select(&m, &t, &cfg).unwrap(), want);
        }
    }

    #[test]
    fn caps_are_errors() {
        let (m, t) = load(include_str!("../data/alternating.aut"), include_str!("../data/alternating.tree"));
        assert!(matches!(oracle_runs(m.nfta(), &t, &OracleConfig::default()), Err(OracleError::TooLarge(_))));
    }
}
