fn main() {
    std::process::exit(pearcey_lab::cli::main_with_args(std::env::args_os()));
}
