fn main() {
    std::process::exit(saddle_moulds::cli::run(std::env::args_os()));
}
