fn main() {
    std::process::exit(hazardsim::cli::dispatch(std::env::args()));
}
