use std::path::PathBuf;

use forestq::cli::{main_with_args, EXIT_CHECK, EXIT_OK, EXIT_PARSE, EXIT_USAGE};

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// A file under the temp dir, unique per test.
fn scratch(name: &str, text: &str) -> String {
    let mut p = PathBuf::from(std::env::temp_dir());
    p.push(format!("forestq-cli-{}-{name}", std::process::id()));
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("forestq").chain(args.iter().copied()).map(String::from);
    let code = main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn eval_prints_acceptance() {
    let (code, out, _) = run(&["eval", &data("alternating.tree"), &data("alternating.aut")]);
    assert_eq!((code, out.as_str()), (EXIT_OK, "accepted: true\n"));
    let (code, out, _) = run(&["eval", &data("rejected.tree"), &data("alternating.aut")]);
    assert_eq!((code, out.as_str()), (EXIT_OK, "accepted: false\n"));
}

#[test]
fn enum_lists_answers_and_count() {
    let (code, out, _) = run(&["enum", &data("pairs.tree"), &data("pairs.aut")]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    let mut answers = lines[..2].to_vec();
    answers.sort();
    assert_eq!(answers, ["5 2", "6 2"]);
    assert_eq!(lines[2], "#count 2");
}

#[test]
fn enum_limit_stops_early() {
    let (code, out, _) = run(&["enum", &data("pairs.tree"), &data("pairs.aut"), "--limit", "1"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.ends_with("#count 1\n"), "{out}");
}

#[test]
fn enum_script_reenumerates_after_each_update() {
    let script = scratch("delete.upd", "# remove one a-leaf\ndelete 5\ninsertR 6 a\n");
    let (code, out, err) = run(&["enum", &data("pairs.tree"), &data("pairs.aut"), "--script", &script]);
    assert_eq!(code, EXIT_OK, "{err}");
    let blocks: Vec<&str> = out.split("#update applied\n").collect();
    assert_eq!(blocks.len(), 3);
    assert!(blocks[0].ends_with("#count 2\n"));
    assert_eq!(blocks[1], "6 2\n#count 1\n");
    assert!(blocks[2].starts_with("#new 8\n"), "{}", blocks[2]);
}

#[test]
fn update_stream_prints_acceptance_after_each_update() {
    let script = scratch("stream.upd", "relab 2 b\nrelab 2 a\n");
    let (code, out, _) = run(&["update-stream", &data("alternating.tree"), &data("alternating.aut"), &script]);
    assert_eq!(code, EXIT_OK);
    let acc: Vec<&str> = out.lines().filter(|l| l.starts_with("accepted:")).collect();
    assert_eq!(acc, ["accepted: true", "accepted: false", "accepted: true"]);
}

#[test]
fn malformed_inputs_exit_with_parse_error() {
    let script = scratch("bad.upd", "delete 5\nfrobnicate 3\n");
    let (code, _, err) = run(&["enum", &data("pairs.tree"), &data("pairs.aut"), "--script", &script]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("line 2"), "{err}");
    let tree = scratch("bad.tree", "1 - a -\n2 9 b -\n");
    let (code, _, err) = run(&["eval", &tree, &data("pairs.aut")]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["eval", "/nonexistent/t", &data("pairs.aut")]).0, EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    // boolean automaton has nothing to enumerate
    assert_eq!(run(&["enum", &data("alternating.tree"), &data("alternating.aut")]).0, EXIT_USAGE);
    assert_eq!(run(&["bench", "--sizes", "8,4"]).0, EXIT_USAGE);
}

#[test]
fn check_passes_and_catches_a_broken_join() {
    let (code, out, _) = run(&["check", "--trials", "30"]);
    assert_eq!((code, out.as_str()), (EXIT_OK, "ok: 30 trials\n"));
    let (code, out, _) = run(&["check", "--trials", "50", "--mutate"]);
    assert_eq!(code, EXIT_CHECK);
    assert!(out.contains("mismatch"), "{out}");
}

#[test]
fn check_reports_oracle_caps() {
    let (code, out, err) = run(&["check", "--trials", "5", "--oracle-answers", "0", "--max-arity", "1", "--max-nodes", "30"]);
    assert_eq!(code, EXIT_CHECK, "{out}{err}");
    assert!(format!("{out}{err}").contains("too large"), "{out}{err}");
}

#[test]
fn bench_prints_one_row_per_size() {
    let (code, out, _) = run(&["bench", "--sizes", "64,128", "--updates", "20", "--answers", "20"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n,build_ns,update_ns,delay_ns,height,bound10log2");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("64,") && lines[2].starts_with("128,"));
}
