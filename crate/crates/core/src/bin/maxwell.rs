fn main() {
    let mut stdout = std::io::stdout().lock();
    let code = maxwell_core::cli::main_with_args(std::env::args().skip(1), &mut stdout);
    std::process::exit(code);
}
