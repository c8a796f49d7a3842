fn main() {
    std::process::exit(stsdiscord::cli::run(std::env::args_os()));
}
