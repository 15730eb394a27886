fn main() {
    std::process::exit(gmplab_cli::dispatch(std::env::args_os()));
}
