fn main() {
    std::process::exit(heurist::cli::run(std::env::args_os()));
}
