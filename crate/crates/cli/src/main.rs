fn main() {
    std::process::exit(anderson_cli::dispatch(std::env::args_os()));
}
