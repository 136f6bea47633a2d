//! The `forestq` command line: evaluation, enumeration, update streams,
//! randomized cross-checks and the scaling benchmark.
//!
//! Exit codes: 0 ok, 1 usage, 2 parse (or an update the tree rejects),
//! 3 check failure.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::automata::{parse_automaton, Element, Nfsta, Signature};
use crate::engine::{Engine, QueryAnnotator};
use crate::formula::Formula;
use crate::gen::{random_nfsta, random_piece, random_tree, Lcg, TreeShape, UpdateGen};
use crate::laws::{violated_axioms, TransitionAlgebra};
use crate::oracle::{oracle_eval, oracle_ext_signatures, oracle_select, oracle_signatures, OracleConfig, OracleError};
use crate::tree::{
    parse_tree_text, parse_update_script, write_tree_text, write_update, Alphabet, ForestOrContext, Kind, NodeId, TreeUpdate,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "forestq", version, about = "Tree-automaton queries over dynamic trees")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print whether the automaton accepts the tree.
    Eval { tree: PathBuf, automaton: PathBuf },
    /// Print all answers, one tuple of node ids per line, then `#count <m>`.
    Enum {
        tree: PathBuf,
        automaton: PathBuf,
        /// Updates to apply one by one; enumeration restarts after each.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Stop each enumeration after this many answers.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Apply updates one by one, printing acceptance after each.
    UpdateStream { tree: PathBuf, automaton: PathBuf, script: PathBuf },
    /// Cross-check the engine against the brute-force oracles on random instances.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        /// Largest random tree.
        #[arg(long, default_value_t = 40)]
        max_nodes: usize,
        #[arg(long, default_value_t = 4)]
        max_states: usize,
        #[arg(long, default_value_t = 2)]
        max_arity: usize,
        /// Updates per trial.
        #[arg(long, default_value_t = 5)]
        updates: usize,
        /// Largest forest or context checked against exhaustive runs.
        #[arg(long, default_value_t = 6)]
        piece_nodes: usize,
        /// Oracle caps.
        #[arg(long, default_value_t = 8)]
        oracle_nodes: usize,
        #[arg(long, default_value_t = 5)]
        oracle_states: usize,
        #[arg(long, default_value_t = 1_000_000)]
        oracle_answers: usize,
        /// Swap the operands of forest concatenation in the engine.
        #[arg(long)]
        mutate: bool,
    },
    /// Time build, updates and enumeration delay on random trees.
    Bench {
        /// Tree sizes, ascending (default 2^10 .. 2^20).
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Updates timed per size.
        #[arg(long, default_value_t = 1000)]
        updates: usize,
        /// Answers timed per size.
        #[arg(long, default_value_t = 1000)]
        answers: usize,
    },
}

/// Parses arguments and runs; returns the exit code.
pub fn main_with_args(args: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            code
        }
    }
}

struct Failure(i32, String);

impl Failure {
    fn usage(msg: impl Into<String>) -> Failure {
        Failure(EXIT_USAGE, msg.into())
    }
    fn parse(msg: impl Into<String>) -> Failure {
        Failure(EXIT_PARSE, msg.into())
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let r = match cli.cmd {
        Command::Eval { tree, automaton } => cmd_eval(&tree, &automaton, out),
        Command::Enum { tree, automaton, script, limit } => cmd_enum(&tree, &automaton, script.as_deref(), limit, out),
        Command::UpdateStream { tree, automaton, script } => cmd_update_stream(&tree, &automaton, &script, out),
        Command::Check {
            seed,
            trials,
            max_nodes,
            max_states,
            max_arity,
            updates,
            piece_nodes,
            oracle_nodes,
            oracle_states,
            oracle_answers,
            mutate,
        } => {
            let opts = CheckOptions {
                seed,
                trials,
                max_nodes,
                max_states,
                max_arity,
                updates,
                piece_nodes,
                oracle: OracleConfig { max_nodes: oracle_nodes, max_states: oracle_states, max_answers: oracle_answers },
                mutate,
            };
            cmd_check(&opts, out)
        }
        Command::Bench { sizes, seed, updates, answers } => {
            let sizes = if sizes.is_empty() { (10..=20).map(|e| 1usize << e).collect() } else { sizes };
            cmd_bench(&sizes, seed, updates, answers, out)
        }
    };
    match r {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load(tree: &Path, automaton: &Path) -> Result<(Nfsta, ForestOrContext), Failure> {
    let m = parse_automaton(&read(automaton)?).map_err(|e| Failure::parse(format!("{}: {e}", automaton.display())))?;
    let al = m.nfta().alphabet();
    let t = parse_tree_text(&read(tree)?, |s| al.get(s)).map_err(|e| Failure::parse(format!("{}: {e}", tree.display())))?;
    if !t.is_tree() {
        return Err(Failure::parse(format!("{}: expected exactly one root", tree.display())));
    }
    Ok((m, t))
}

fn load_script(path: &Path, al: &Alphabet) -> Result<Vec<(usize, TreeUpdate)>, Failure> {
    parse_update_script(&read(path)?, |s| al.get(s)).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn io(e: std::io::Error) -> Failure {
    Failure(EXIT_USAGE, format!("write failed: {e}"))
}

fn engine(t: &ForestOrContext, m: Nfsta) -> Result<Engine, Failure> {
    Engine::new(t, m).map_err(|e| Failure::parse(e.to_string()))
}

fn apply(e: &mut Engine, line: usize, u: &TreeUpdate, path: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let created = e.apply_update(u).map_err(|x| Failure::parse(format!("{}: line {line}: {x}", path.display())))?;
    debug_assert!(e.formula().audit().is_ok(), "invariants after {u:?}");
    writeln!(out, "#update applied").map_err(io)?;
    if let Some(v) = created {
        writeln!(out, "#new {v}").map_err(io)?;
    }
    Ok(())
}

fn cmd_eval(tree: &Path, automaton: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let (m, t) = load(tree, automaton)?;
    let e = engine(&t, m)?;
    writeln!(out, "accepted: {}", e.is_accepted()).map_err(io)
}

fn print_answers(e: &mut Engine, limit: Option<usize>, out: &mut dyn Write) -> Result<(), Failure> {
    let mut sess = e.enum_start();
    let mut count = 0;
    while limit.is_none_or(|l| count < l) {
        let Some(a) = e.next_answer(&mut sess).expect("fresh session") else { break };
        let line: Vec<String> = a.iter().map(NodeId::to_string).collect();
        writeln!(out, "{}", line.join(" ")).map_err(io)?;
        count += 1;
    }
    writeln!(out, "#count {count}").map_err(io)
}

fn cmd_enum(tree: &Path, automaton: &Path, script: Option<&Path>, limit: Option<usize>, out: &mut dyn Write) -> Result<(), Failure> {
    let (m, t) = load(tree, automaton)?;
    if m.arity() == 0 || m.tuples().is_empty() {
        return Err(Failure::usage("enum needs a selecting automaton with at least one tuple of arity >= 1"));
    }
    let updates = match script {
        Some(p) => load_script(p, m.nfta().alphabet())?,
        None => Vec::new(),
    };
    let mut e = engine(&t, m)?;
    print_answers(&mut e, limit, out)?;
    for (line, u) in &updates {
        apply(&mut e, *line, u, script.expect("updates come from a script"), out)?;
        print_answers(&mut e, limit, out)?;
    }
    Ok(())
}

fn cmd_update_stream(tree: &Path, automaton: &Path, script: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let (m, t) = load(tree, automaton)?;
    let updates = load_script(script, m.nfta().alphabet())?;
    let mut e = engine(&t, m)?;
    writeln!(out, "accepted: {}", e.is_accepted()).map_err(io)?;
    for (line, u) in &updates {
        apply(&mut e, *line, u, script, out)?;
        writeln!(out, "accepted: {}", e.is_accepted()).map_err(io)?;
    }
    Ok(())
}

/// Parameters of `check`.
#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub seed: u64,
    pub trials: u64,
    pub max_nodes: usize,
    pub max_states: usize,
    pub max_arity: usize,
    pub updates: usize,
    pub piece_nodes: usize,
    pub oracle: OracleConfig,
    pub mutate: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            seed: 1,
            trials: 200,
            max_nodes: 40,
            max_states: 4,
            max_arity: 2,
            updates: 5,
            piece_nodes: 6,
            oracle: OracleConfig::default(),
            mutate: false,
        }
    }
}

/// One random instance of `check`.
#[derive(Clone, Debug)]
struct Trial {
    params: String,
    nfsta: Nfsta,
    tree: ForestOrContext,
    updates: Vec<TreeUpdate>,
    piece: ForestOrContext,
    axioms: TransitionAlgebra,
    axiom_seed: u64,
}

fn make_trial(o: &CheckOptions, i: u64) -> Trial {
    let mut rng = Lcg::new(o.seed.wrapping_mul(1_000_003).wrapping_add(i));
    let states = 2 + rng.below(o.max_states.max(2) - 1);
    let k = rng.below(o.max_arity + 1);
    let tuples = rng.below(4);
    let density = 20 + rng.below(30) as u32;
    let n = 1 + rng.below(o.max_nodes.max(1));
    let nfsta = random_nfsta(&mut rng, states, 2, density, k, tuples);
    let tree = random_tree(&mut rng, n, 2, TreeShape::Random);
    // updates are drawn against the evolving formula so they are valid
    let mut f = Formula::construct(&tree).expect("random trees are valid");
    let mut gen = UpdateGen::new(tree.preorder().iter().map(|x| x.id()), 2);
    let mut updates = Vec::new();
    for _ in 0..o.updates {
        let u = gen.next(&mut rng, &f);
        let c = f.apply_update(&u).expect("generated updates are valid");
        gen.record(&u, c);
        updates.push(u);
    }
    let pn = rng.below(o.piece_nodes + 1);
    let kind = if rng.chance(50) { Kind::Forest } else { Kind::Context };
    let piece = random_piece(&mut rng, pn, 2, kind);
    let axioms = TransitionAlgebra { n: states.min(3), m: rng.below(3) as u32 };
    let axiom_seed = rng.next_u32() as u64;
    let params = format!(
        "trial {i}: seed {} states {states} arity {k} tuples {tuples} density {density} nodes {n} updates {} piece {pn}",
        o.seed, o.updates
    );
    Trial { params, nfsta, tree, updates, piece, axioms, axiom_seed }
}

enum Verdict {
    Ok,
    /// Updates not applicable (only while shrinking).
    Invalid,
    Mismatch(String),
    TooLarge(OracleError),
}

fn engine_for(t: &ForestOrContext, m: &Nfsta, mutate: bool) -> Engine {
    let f = Formula::construct(t).expect("valid tree");
    let mut ann = QueryAnnotator::new(Arc::new(m.clone()));
    if mutate {
        ann = ann.with_swapped_concat();
    }
    Engine::annotate_with(f, ann).expect("labels of the alphabet")
}

fn compare_answers(e: &mut Engine, cfg: &OracleConfig, stage: &str) -> Verdict {
    let t = e.formula().represented_tree();
    if e.is_accepted() != oracle_eval(e.nfsta().nfta(), &t) {
        return Verdict::Mismatch(format!("{stage}: acceptance differs from the oracle"));
    }
    let want = match oracle_select(e.nfsta(), &t, cfg) {
        Ok(w) => w,
        Err(x) => return Verdict::TooLarge(x),
    };
    let got = e.answers();
    let order = e.formula().leaf_order();
    let rank = |v: &NodeId| order.iter().position(|x| x == v);
    let keys: Vec<Vec<Option<usize>>> = got.iter().map(|a| a.iter().map(rank).collect()).collect();
    if keys.windows(2).any(|w| w[0] >= w[1]) {
        return Verdict::Mismatch(format!("{stage}: answers not strictly increasing"));
    }
    let set: BTreeSet<Vec<NodeId>> = got.into_iter().collect();
    if set != want {
        let extra: Vec<_> = set.difference(&want).take(3).collect();
        let missing: Vec<_> = want.difference(&set).take(3).collect();
        return Verdict::Mismatch(format!("{stage}: answers differ, extra {extra:?} missing {missing:?}"));
    }
    if !e.formula().audit().is_ok() {
        return Verdict::Mismatch(format!("{stage}: formula invariants violated"));
    }
    Verdict::Ok
}

fn compare_piece(m: &Nfsta, piece: &ForestOrContext, cfg: &OracleConfig, mutate: bool) -> Verdict {
    let mut ann = QueryAnnotator::new(Arc::new(m.clone()));
    if mutate {
        ann = ann.with_swapped_concat();
    }
    let got = ann.evaluate(piece);
    let tracks = m.tuples().len();
    for (s, g) in got.iter().enumerate() {
        let want = if tracks == 0 {
            oracle_signatures(m.nfta(), piece, cfg).map(|w| w.into_iter().map(|x| (x, 0)).collect())
        } else {
            oracle_ext_signatures(m, s, piece, cfg)
        };
        let want: BTreeSet<(Signature, u32)> = match want {
            Ok(w) => w,
            Err(x) => return Verdict::TooLarge(x),
        };
        if g.iter().into_iter().collect::<BTreeSet<_>>() != want {
            return Verdict::Mismatch(format!("signature set of a {}-node piece differs on track {s}", piece.node_count()));
        }
    }
    Verdict::Ok
}

fn verdict(t: &Trial, o: &CheckOptions) -> Verdict {
    let mut e = engine_for(&t.tree, &t.nfsta, o.mutate);
    match compare_answers(&mut e, &o.oracle, "initial tree") {
        Verdict::Ok => {}
        v => return v,
    }
    for (i, u) in t.updates.iter().enumerate() {
        if e.apply_update(u).is_err() {
            return Verdict::Invalid;
        }
        match compare_answers(&mut e, &o.oracle, &format!("after update {}", i + 1)) {
            Verdict::Ok => {}
            v => return v,
        }
    }
    match compare_piece(&t.nfsta, &t.piece, &o.oracle, o.mutate) {
        Verdict::Ok => {}
        v => return v,
    }
    let mut rng = Lcg::new(t.axiom_seed);
    let alg = &t.axioms;
    let f: Vec<Element> = (0..3).map(|_| alg.random(&mut rng, Kind::Forest, 30)).collect();
    let c: Vec<Element> = (0..3).map(|_| alg.random(&mut rng, Kind::Context, 10)).collect();
    let bad = violated_axioms(alg, [&f[0], &f[1], &f[2]], [&c[0], &c[1], &c[2]]);
    if !bad.is_empty() {
        return Verdict::Mismatch(format!("axioms {bad:?} violated"));
    }
    Verdict::Ok
}

/// Greedily drops updates and tree leaves while the mismatch persists.
fn shrink(mut t: Trial, o: &CheckOptions) -> Trial {
    let fails = |t: &Trial| matches!(verdict(t, o), Verdict::Mismatch(_));
    loop {
        let mut progress = false;
        for i in (0..t.updates.len()).rev() {
            let mut c = t.clone();
            c.updates.remove(i);
            if fails(&c) {
                t = c;
                progress = true;
            }
        }
        let leaves: Vec<NodeId> = t.tree.preorder().iter().filter(|x| x.is_leaf() && x.parent().is_some()).map(|x| x.id()).collect();
        for v in leaves {
            let Ok(smaller) = t.tree.apply_update(&TreeUpdate::Delete(v), NodeId::fresh()) else { continue };
            let c = Trial { tree: smaller, ..t.clone() };
            if fails(&c) {
                t = c;
                progress = true;
            }
        }
        if !progress {
            return t;
        }
    }
}

fn dump(t: &Trial) -> String {
    let al = t.nfsta.nfta().alphabet();
    let mut s = String::new();
    let _ = writeln!(s, "# {}", t.params);
    let _ = writeln!(s, "# automaton");
    s.push_str(&t.nfsta.to_text());
    let _ = writeln!(s, "# tree");
    s.push_str(&write_tree_text(&t.tree, al));
    let _ = writeln!(s, "# updates");
    for u in &t.updates {
        let _ = writeln!(s, "{}", write_update(u, al));
    }
    let _ = writeln!(s, "# piece: {}", t.piece.to_term(al));
    s
}

/// Runs the randomized suite; on the first mismatch prints a shrunk
/// reproduction and fails with exit code 3.
fn cmd_check(o: &CheckOptions, out: &mut dyn Write) -> Result<(), Failure> {
    for i in 0..o.trials {
        let t = make_trial(o, i);
        match verdict(&t, o) {
            Verdict::Ok => {}
            Verdict::Invalid => unreachable!("generated updates are valid"),
            Verdict::TooLarge(x) => return Err(Failure(EXIT_CHECK, format!("{}: {x}", t.params))),
            Verdict::Mismatch(msg) => {
                let small = shrink(t.clone(), o);
                let why = match verdict(&small, o) {
                    Verdict::Mismatch(m) => m,
                    _ => msg,
                };
                writeln!(out, "mismatch: {}: {why}", t.params).map_err(io)?;
                write!(out, "{}", dump(&small)).map_err(io)?;
                return Err(Failure(EXIT_CHECK, format!("mismatch in {}", t.params)));
            }
        }
    }
    writeln!(out, "ok: {} trials", o.trials).map_err(io)
}

/// Selects every `a`-labelled node: each node keeps the state its label
/// allows while reading its children, so every choice yields one run.
pub fn bench_automaton() -> Nfsta {
    let text = "\
states: q0 x s qF
alphabet: a b
init: a x s
init: b x
delta: x x x
delta: x s x
delta: s x s
delta: s s s
delta: q0 x qF
delta: q0 s qF
q0: q0
qF: qF
select: s
";
    parse_automaton(text).expect("fixed automaton")
}

/// One row of the benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub build_ns: f64,
    pub update_ns: f64,
    pub delay_ns: f64,
    pub height: u32,
    pub bound10log2: f64,
}

pub fn bench_size(n: usize, seed: u64, updates: usize, answers: usize) -> BenchRow {
    let mut rng = Lcg::new(seed.wrapping_add(n as u64));
    let t = random_tree(&mut rng, n, 2, TreeShape::Random);
    let m = bench_automaton();
    let start = Instant::now();
    let mut e = Engine::new(&t, m).expect("valid");
    let build = start.elapsed().as_nanos() as f64;
    let mut gen = UpdateGen::new(t.preorder().iter().map(|x| x.id()), 2);
    let mut spent = 0u128;
    for _ in 0..updates {
        let u = gen.next(&mut rng, e.formula());
        let start = Instant::now();
        let c = e.apply_update(&u).expect("generated updates are valid");
        spent += start.elapsed().as_nanos();
        gen.record(&u, c);
    }
    let mut sess = e.enum_start();
    let mut got = 0;
    let start = Instant::now();
    while got < answers && e.next_answer(&mut sess).expect("fresh session").is_some() {
        got += 1;
    }
    let delay = start.elapsed().as_nanos() as f64 / got.max(1) as f64;
    let size = e.formula().len();
    BenchRow {
        n,
        build_ns: build,
        update_ns: spent as f64 / updates.max(1) as f64,
        delay_ns: delay,
        height: e.height(),
        bound10log2: 10.0 * (size.max(2) as f64).log2(),
    }
}

fn cmd_bench(sizes: &[usize], seed: u64, updates: usize, answers: usize, out: &mut dyn Write) -> Result<(), Failure> {
    if sizes.windows(2).any(|w| w[0] > w[1]) || sizes.contains(&0) {
        return Err(Failure::usage("sizes must be positive and ascending"));
    }
    writeln!(out, "n,build_ns,update_ns,delay_ns,height,bound10log2").map_err(io)?;
    for &n in sizes {
        let r = bench_size(n, seed, updates, answers);
        writeln!(out, "{},{:.0},{:.0},{:.0},{},{:.1}", r.n, r.build_ns, r.update_ns, r.delay_ns, r.height, r.bound10log2)
            .map_err(io)?;
    }
    Ok(())
}
