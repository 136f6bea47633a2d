fn main() {
    let code = forestq::cli::main_with_args(std::env::args(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
