fn main() {
    std::process::exit(ising_qfi::cli::run(std::env::args_os()));
}
