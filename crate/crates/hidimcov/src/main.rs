fn main() {
    let code = hidimcov::cli::dispatch(std::env::args());
    std::process::exit(code);
}
