//! Random instances checked against the brute-force references, as the
//! `check` subcommand does.
//!
//! cargo run --release --example cross_check [trials]

use forestq::cli::main_with_args;

fn main() {
    let trials = std::env::args().nth(1).unwrap_or_else(|| "100".into());
    let args = ["forestq", "check", "--trials", &trials, "--seed", "7"].map(String::from);
    let code = main_with_args(args, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
