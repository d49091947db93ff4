fn main() {
    std::process::exit(sosk_core::cli::main_with_env());
}
