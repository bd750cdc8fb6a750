fn main() {
    std::process::exit(opx::cli::dispatch(std::env::args()));
}
