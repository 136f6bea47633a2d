//! Sets of run signatures as dense bit relations, optionally split by a
//! visited-state mask, with the five joins and their residuals.
//!
//! A forest element is a relation on `Q` (row `q1`, column `q2`), a context
//! element a relation on `Q²` (row `(q1,q2)`, column `(q3,q4)`, pairs encoded
//! as `a·|Q|+b`). An element with `m` mask bits holds `2^m` such relations,
//! one per subset `r` of the selecting states.

use std::fmt;

use crate::formula::Op;
use crate::tree::Kind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Signature {
    Forest(usize, usize),
    Context((usize, usize), (usize, usize)),
}

impl Signature {
    pub fn kind(&self) -> Kind {
        match self {
            Signature::Forest(..) => Kind::Forest,
            Signature::Context(..) => Kind::Context,
        }
    }
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Element {
    kind: Option<Kind>,
    n: usize,
    m: u32,
    bits: Vec<u64>,
}

#[derive(Clone, Copy)]
struct Shape {
    dim: usize,
    wpr: usize,
}

impl Shape {
    fn new(kind: Kind, n: usize) -> Shape {
        let dim = if kind == Kind::Forest { n } else { n * n };
        Shape { dim, wpr: dim.div_ceil(64).max(1) }
    }
    fn group_words(self) -> usize {
        self.dim * self.wpr
    }
}

#[inline]
fn row(g: &[u64], s: Shape, r: usize) -> &[u64] {
    &g[r * s.wpr..(r + 1) * s.wpr]
}

#[inline]
fn or_row(g: &mut [u64], s: Shape, r: usize, src: &[u64]) {
    for (d, x) in g[r * s.wpr..(r + 1) * s.wpr].iter_mut().zip(src) {
        *d |= *x;
    }
}

#[inline]
fn get(g: &[u64], s: Shape, r: usize, c: usize) -> bool {
    g[r * s.wpr + c / 64] >> (c % 64) & 1 == 1
}

#[inline]
fn set(g: &mut [u64], s: Shape, r: usize, c: usize) {
    g[r * s.wpr + c / 64] |= 1 << (c % 64);
}

#[inline]
fn meets(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).any(|(x, y)| x & y != 0)
}

fn ones(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(i, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                return None;
            }
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(i * 64 + b)
        })
    })
}

/// A forest relation flattened to one bit per pair, in the row layout of a
/// context relation.
fn flatten(f: &[u64], n: usize) -> Vec<u64> {
    let sh = Shape::new(Kind::Forest, n);
    let sv = Shape::new(Kind::Context, n);
    let mut out = vec![0u64; sv.wpr];
    for q1 in 0..n {
        for q2 in ones(row(f, sh, q1)) {
            let p = q1 * n + q2;
            out[p / 64] |= 1 << (p % 64);
        }
    }
    out
}

fn unflatten_into(v: &[u64], n: usize, out: &mut [u64]) {
    let sh = Shape::new(Kind::Forest, n);
    for p in ones(v) {
        set(out, sh, p / n, p % n);
    }
}

// ------------------------------------------------------------------ joins
// Each accumulates (ORs) into `out`.

fn compose(a: &[u64], b: &[u64], s: Shape, out: &mut [u64]) {
    for r in 0..s.dim {
        for mid in ones(row(a, s, r)) {
            or_row(out, s, r, row(b, s, mid));
        }
    }
}

fn join(op: Op, x: &[u64], y: &[u64], n: usize, out: &mut [u64]) {
    let sh = Shape::new(Kind::Forest, n);
    let sv = Shape::new(Kind::Context, n);
    match op {
        Op::ConcatHH => compose(x, y, sh, out),
        Op::ApplyVV => compose(x, y, sv, out),
        Op::ApplyVH => {
            let fv = flatten(y, n);
            for p in 0..sv.dim {
                if meets(row(x, sv, p), &fv) {
                    set(out, sh, p / n, p % n);
                }
            }
        }
        Op::ConcatHV => {
            for q1 in 0..n {
                for q2 in ones(row(x, sh, q1)) {
                    for q3 in 0..n {
                        or_row(out, sv, q1 * n + q3, row(y, sv, q2 * n + q3));
                    }
                }
            }
        }
        Op::ConcatVH => {
            for q2 in 0..n {
                for q5 in ones(row(y, sh, q2)) {
                    for q1 in 0..n {
                        or_row(out, sv, q1 * n + q5, row(x, sv, q1 * n + q2));
                    }
                }
            }
        }
    }
}

/// Left operands `x` such that `x op y` meets `t` for some `y` in `y`.
fn residual_left(op: Op, y: &[u64], t: &[u64], n: usize, out: &mut [u64]) {
    let sh = Shape::new(Kind::Forest, n);
    let sv = Shape::new(Kind::Context, n);
    match op {
        Op::ConcatHH | Op::ApplyVV => {
            let s = if op == Op::ConcatHH { sh } else { sv };
            for r in 0..s.dim {
                let tr = row(t, s, r);
                for mid in 0..s.dim {
                    if meets(row(y, s, mid), tr) {
                        set(out, s, r, mid);
                    }
                }
            }
        }
        Op::ApplyVH => {
            let fv = flatten(y, n);
            let tv = flatten(t, n);
            for p in ones(&tv) {
                or_row(out, sv, p, &fv);
            }
        }
        Op::ConcatHV => {
            // y: context ((q2,q3),m), t: ((q1,q3),m), x: (q1,q2)
            for q1 in 0..n {
                for q2 in 0..n {
                    if (0..n).any(|q3| meets(row(y, sv, q2 * n + q3), row(t, sv, q1 * n + q3))) {
                        set(out, sh, q1, q2);
                    }
                }
            }
        }
        Op::ConcatVH => {
            // y: forest (q2,q5), t: ((q1,q5),m), x: ((q1,q2),m)
            for q2 in 0..n {
                for q5 in ones(row(y, sh, q2)) {
                    for q1 in 0..n {
                        or_row(out, sv, q1 * n + q2, row(t, sv, q1 * n + q5));
                    }
                }
            }
        }
    }
}

/// Right operands `y` such that `x op y` meets `t` for some `x` in `x`.
fn residual_right(op: Op, x: &[u64], t: &[u64], n: usize, out: &mut [u64]) {
    let sh = Shape::new(Kind::Forest, n);
    let sv = Shape::new(Kind::Context, n);
    match op {
        Op::ConcatHH | Op::ApplyVV => {
            let s = if op == Op::ConcatHH { sh } else { sv };
            for r in 0..s.dim {
                let tr = row(t, s, r);
                if tr.iter().all(|&w| w == 0) {
                    continue;
                }
                for mid in ones(row(x, s, r)) {
                    or_row(out, s, mid, tr);
                }
            }
        }
        Op::ApplyVH => {
            let tv = flatten(t, n);
            let mut acc = vec![0u64; sv.wpr];
            for p in ones(&tv) {
                for (a, b) in acc.iter_mut().zip(row(x, sv, p)) {
                    *a |= *b;
                }
            }
            unflatten_into(&acc, n, out);
        }
        Op::ConcatHV => {
            // x: forest (q1,q2), t: ((q1,q3),m), y: ((q2,q3),m)
            for q1 in 0..n {
                for q2 in ones(row(x, sh, q1)) {
                    for q3 in 0..n {
                        or_row(out, sv, q2 * n + q3, row(t, sv, q1 * n + q3));
                    }
                }
            }
        }
        Op::ConcatVH => {
            // x: ((q1,q2),m), t: ((q1,q5),m), y: (q2,q5)
            for q2 in 0..n {
                for q5 in 0..n {
                    if (0..n).any(|q1| meets(row(x, sv, q1 * n + q2), row(t, sv, q1 * n + q5))) {
                        set(out, sh, q2, q5);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("operand kinds do not match {0:?}")]
pub struct KindMismatch(pub Op);

impl Element {
    pub fn empty(kind: Kind, n: usize, m: u32) -> Element {
        let s = Shape::new(kind, n);
        Element { kind: Some(kind), n, m, bits: vec![0; s.group_words() << m] }
    }

    /// `id_Q` or `id_{Q²}`, with the empty mask.
    pub fn identity(kind: Kind, n: usize, m: u32) -> Element {
        let mut e = Element::empty(kind, n, m);
        let s = e.shape();
        for i in 0..s.dim {
            set(&mut e.bits, s, i, i);
        }
        e
    }

    fn shape(&self) -> Shape {
        Shape::new(self.kind(), self.n)
    }

    pub fn kind(&self) -> Kind {
        self.kind.expect("element is initialized")
    }

    pub fn states(&self) -> usize {
        self.n
    }

    /// Number of mask bits (0 for plain elements).
    pub fn mask_bits(&self) -> u32 {
        self.m
    }

    pub fn group(&self, r: u32) -> &[u64] {
        let gw = self.shape().group_words();
        &self.bits[r as usize * gw..(r as usize + 1) * gw]
    }

    fn group_mut(&mut self, r: u32) -> &mut [u64] {
        let gw = self.shape().group_words();
        &mut self.bits[r as usize * gw..(r as usize + 1) * gw]
    }

    fn group_nonempty(&self, r: u32) -> bool {
        self.group(r).iter().any(|&w| w != 0)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Number of (signature, mask) pairs.
    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn index(&self, sig: Signature) -> (usize, usize) {
        assert_eq!(sig.kind(), self.kind(), "signature kind");
        let n = self.n;
        match sig {
            Signature::Forest(a, b) => (a, b),
            Signature::Context((a, b), (c, d)) => (a * n + b, c * n + d),
        }
    }

    fn signature(&self, r: usize, c: usize) -> Signature {
        let n = self.n;
        match self.kind() {
            Kind::Forest => Signature::Forest(r, c),
            Kind::Context => Signature::Context((r / n, r % n), (c / n, c % n)),
        }
    }

    pub fn contains(&self, sig: Signature, r: u32) -> bool {
        let (a, b) = self.index(sig);
        get(self.group(r), self.shape(), a, b)
    }

    pub fn insert(&mut self, sig: Signature, r: u32) {
        let (a, b) = self.index(sig);
        let s = self.shape();
        set(self.group_mut(r), s, a, b);
    }

    /// All (signature, mask) pairs in increasing order.
    pub fn iter(&self) -> Vec<(Signature, u32)> {
        let s = self.shape();
        let mut out = Vec::new();
        for r in 0..(1u32 << self.m) {
            let g = self.group(r);
            for a in 0..s.dim {
                for b in ones(row(g, s, a)) {
                    out.push((self.signature(a, b), r));
                }
            }
        }
        out.sort();
        out
    }

    /// Drops the masks: union over all groups.
    pub fn project(&self) -> Element {
        let mut out = Element::empty(self.kind(), self.n, 0);
        for r in 0..(1u32 << self.m) {
            for (d, x) in out.bits.iter_mut().zip(self.group(r)) {
                *d |= *x;
            }
        }
        out
    }

    /// Keeps only the pairs whose mask is exactly `r`.
    pub fn restrict_mask(&self, r: u32) -> Element {
        let mut out = Element::empty(self.kind(), self.n, self.m);
        out.group_mut(r).copy_from_slice(self.group(r));
        out
    }

    /// Keeps only the given signature (with any mask).
    pub fn restrict_signature(&self, sig: Signature) -> Element {
        let mut out = Element::empty(self.kind(), self.n, self.m);
        for r in 0..(1u32 << self.m) {
            if self.contains(sig, r) {
                out.insert(sig, r);
            }
        }
        out
    }

    pub fn intersect(&self, other: &Element) -> Element {
        assert_eq!((self.kind, self.n, self.m), (other.kind, other.n, other.m));
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect();
        Element { bits, ..self.clone() }
    }

    pub fn union(&self, other: &Element) -> Element {
        assert_eq!((self.kind, self.n, self.m), (other.kind, other.n, other.m));
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a | b).collect();
        Element { bits, ..self.clone() }
    }

    /// Union of the masks of all pairs.
    pub fn visited_mask(&self) -> u32 {
        (0..(1u32 << self.m)).filter(|&r| self.group_nonempty(r)).fold(0, |a, r| a | r)
    }

    fn check(op: Op, x: &Element, y: &Element) -> Result<(), KindMismatch> {
        let (kl, kr) = op.operand_kinds();
        if x.kind != Some(kl) || y.kind != Some(kr) || x.n != y.n || x.m != y.m {
            return Err(KindMismatch(op));
        }
        Ok(())
    }

    /// The join `x op y`; masks are united.
    pub fn combine(op: Op, x: &Element, y: &Element) -> Result<Element, KindMismatch> {
        Self::check(op, x, y)?;
        let mut out = Element::empty(op.result_kind(), x.n, x.m);
        let groups = 1u32 << x.m;
        for r1 in (0..groups).filter(|&r| x.group_nonempty(r)) {
            for r2 in (0..groups).filter(|&r| y.group_nonempty(r)) {
                let gw = out.shape().group_words();
                let off = (r1 | r2) as usize * gw;
                join(op, x.group(r1), y.group(r2), x.n, &mut out.bits[off..off + gw]);
            }
        }
        Ok(out)
    }

    /// All left operands `x'` (as pairs with masks) for which `{x'} op y`
    /// meets `target` for some pair of `y`.
    pub fn residual_left(op: Op, y: &Element, target: &Element) -> Result<Element, KindMismatch> {
        let (kl, kr) = op.operand_kinds();
        if y.kind != Some(kr) || target.kind != Some(op.result_kind()) || y.m != target.m {
            return Err(KindMismatch(op));
        }
        let mut out = Element::empty(kl, y.n, y.m);
        let groups = 1u32 << y.m;
        let gw = out.shape().group_words();
        for ry in (0..groups).filter(|&r| y.group_nonempty(r)) {
            for rx in 0..groups {
                let t = target.group(rx | ry);
                if t.iter().all(|&w| w == 0) {
                    continue;
                }
                let off = rx as usize * gw;
                residual_left(op, y.group(ry), t, y.n, &mut out.bits[off..off + gw]);
            }
        }
        Ok(out)
    }

    /// All right operands `y'` for which `x op {y'}` meets `target`.
    pub fn residual_right(op: Op, x: &Element, target: &Element) -> Result<Element, KindMismatch> {
        let (kl, kr) = op.operand_kinds();
        if x.kind != Some(kl) || target.kind != Some(op.result_kind()) || x.m != target.m {
            return Err(KindMismatch(op));
        }
        let mut out = Element::empty(kr, x.n, x.m);
        let groups = 1u32 << x.m;
        let gw = out.shape().group_words();
        for rx in (0..groups).filter(|&r| x.group_nonempty(r)) {
            for ry in 0..groups {
                let t = target.group(rx | ry);
                if t.iter().all(|&w| w == 0) {
                    continue;
                }
                let off = ry as usize * gw;
                residual_right(op, x.group(rx), t, x.n, &mut out.bits[off..off + gw]);
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind.is_none() {
            return write!(f, "Element(uninit)");
        }
        write!(f, "{:?}[", self.kind())?;
        for (i, (s, r)) in self.iter().into_iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match s {
                Signature::Forest(a, b) => write!(f, "({a},{b})")?,
                Signature::Context((a, b), (c, d)) => write!(f, "(({a},{b}),({c},{d}))")?,
            }
            if self.m > 0 {
                write!(f, "/{r:b}")?;
            }
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self, n: u64) -> u64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (self.0 >> 33) % n
        }
    }

    fn all_sigs(kind: Kind, n: usize) -> Vec<Signature> {
        let mut v = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if kind == Kind::Forest {
                    v.push(Signature::Forest(a, b));
                } else {
                    for c in 0..n {
                        for d in 0..n {
                            v.push(Signature::Context((a, b), (c, d)));
                        }
                    }
                }
            }
        }
        v
    }

    fn random(rng: &mut Lcg, kind: Kind, n: usize, m: u32, density: u64) -> Element {
        let mut e = Element::empty(kind, n, m);
        for s in all_sigs(kind, n) {
            for r in 0..(1 << m) {
                if rng.next(100) < density {
                    e.insert(s, r);
                }
            }
        }
        e
    }

    /// The five joins on single signatures, straight from their definitions.
    fn join_one(op: Op, x: Signature, y: Signature) -> Option<Signature> {
        use Signature::*;
        match (op, x, y) {
            (Op::ConcatHH, Forest(a, b), Forest(c, d)) => (b == c).then_some(Forest(a, d)),
            (Op::ApplyVV, Context(p, q), Context(r, s)) => (q == r).then_some(Context(p, s)),
            (Op::ApplyVH, Context(p, (c, d)), Forest(e, f)) => ((c, d) == (e, f)).then_some(Forest(p.0, p.1)),
            (Op::ConcatHV, Forest(a, b), Context((c, d), h)) => (b == c).then_some(Context((a, d), h)),
            (Op::ConcatVH, Context((a, b), h), Forest(c, d)) => (b == c).then_some(Context((a, d), h)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn joins_match_pointwise_definition() {
        let mut rng = Lcg(3);
        for n in 1..=4 {
            for op in Op::ALL {
                for m in 0..=2 {
                    let (kl, kr) = op.operand_kinds();
                    let x = random(&mut rng, kl, n, m, 20);
                    let y = random(&mut rng, kr, n, m, 20);
                    let got = Element::combine(op, &x, &y).unwrap();
                    let mut want = Element::empty(op.result_kind(), n, m);
                    for (sx, rx) in x.iter() {
                        for (sy, ry) in y.iter() {
                            if let Some(s) = join_one(op, sx, sy) {
                                want.insert(s, rx | ry);
                            }
                        }
                    }
                    assert_eq!(got, want, "{op:?} n={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn residuals_match_pointwise_definition() {
        let mut rng = Lcg(5);
        for n in 1..=3 {
            for op in Op::ALL {
                for m in 0..=2 {
                    let (kl, kr) = op.operand_kinds();
                    let x = random(&mut rng, kl, n, m, 25);
                    let y = random(&mut rng, kr, n, m, 25);
                    let t = random(&mut rng, op.result_kind(), n, m, 40);
                    let hits = |a: Signature, ra: u32, b: Signature, rb: u32| {
                        join_one(op, a, b).is_some_and(|s| t.contains(s, ra | rb))
                    };
                    let left = Element::residual_left(op, &y, &t).unwrap();
                    for sx in all_sigs(kl, n) {
                        for rx in 0..(1 << m) {
                            let want = y.iter().into_iter().any(|(sy, ry)| hits(sx, rx, sy, ry));
                            assert_eq!(left.contains(sx, rx), want, "left {op:?} {sx:?}");
                        }
                    }
                    let right = Element::residual_right(op, &x, &t).unwrap();
                    for sy in all_sigs(kr, n) {
                        for ry in 0..(1 << m) {
                            let want = x.iter().into_iter().any(|(sx, rx)| hits(sx, rx, sy, ry));
                            assert_eq!(right.contains(sy, ry), want, "right {op:?} {sy:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn identities_are_neutral() {
        let mut rng = Lcg(9);
        for n in 1..=5 {
            let f = random(&mut rng, Kind::Forest, n, 1, 30);
            let c = random(&mut rng, Kind::Context, n, 1, 10);
            let ih = Element::identity(Kind::Forest, n, 1);
            let iv = Element::identity(Kind::Context, n, 1);
            assert_eq!(Element::combine(Op::ConcatHH, &ih, &f).unwrap(), f);
            assert_eq!(Element::combine(Op::ConcatHH, &f, &ih).unwrap(), f);
            assert_eq!(Element::combine(Op::ApplyVV, &iv, &c).unwrap(), c);
            assert_eq!(Element::combine(Op::ApplyVV, &c, &iv).unwrap(), c);
            assert_eq!(Element::combine(Op::ApplyVH, &iv, &f).unwrap(), f);
            assert_eq!(Element::combine(Op::ConcatHV, &ih, &c).unwrap(), c);
            assert_eq!(Element::combine(Op::ConcatVH, &c, &ih).unwrap(), c);
        }
    }

    #[test]
    fn kind_mismatch() {
        let f = Element::empty(Kind::Forest, 2, 0);
        assert_eq!(Element::combine(Op::ApplyVH, &f, &f), Err(KindMismatch(Op::ApplyVH)));
        let g = Element::empty(Kind::Forest, 3, 0);
        assert!(Element::combine(Op::ConcatHH, &f, &g).is_err());
    }

    #[test]
    fn wide_state_sets() {
        // more than 64 columns per row in context relations
        let n = 9;
        let mut c = Element::empty(Kind::Context, n, 0);
        c.insert(Signature::Context((8, 7), (8, 8)), 0);
        let mut f = Element::empty(Kind::Forest, n, 0);
        f.insert(Signature::Forest(8, 8), 0);
        let r = Element::combine(Op::ApplyVH, &c, &f).unwrap();
        assert_eq!(r.iter(), vec![(Signature::Forest(8, 7), 0)]);
        let iv = Element::identity(Kind::Context, n, 0);
        assert_eq!(Element::combine(Op::ApplyVV, &c, &iv).unwrap(), c);
    }
}
