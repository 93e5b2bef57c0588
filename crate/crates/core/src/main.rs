fn main() {
    std::process::exit(perturbshield::cli::main_from_args(std::env::args_os()));
}
