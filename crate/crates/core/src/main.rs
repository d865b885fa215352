fn main() {
    std::process::exit(ghzgrid::cli::run(std::env::args_os()));
}
