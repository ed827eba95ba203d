fn main() {
    std::process::exit(gmrf_stego::cli::run(std::env::args_os()));
}
