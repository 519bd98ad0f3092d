fn main() {
    std::process::exit(hmmic::cli::run(std::env::args_os()));
}
