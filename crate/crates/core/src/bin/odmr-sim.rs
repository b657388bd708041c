fn main() {
    std::process::exit(odmr_sim::cli::main_with_args(std::env::args_os()));
}
