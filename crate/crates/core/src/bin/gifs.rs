fn main() {
    std::process::exit(gifs::cli::run(std::env::args_os()));
}
