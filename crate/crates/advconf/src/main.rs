fn main() {
    std::process::exit(advconf::cli::run_cli(std::env::args()));
}
