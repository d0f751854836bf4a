fn main() {
    std::process::exit(hill_orbits::cli::main_with_env());
}
