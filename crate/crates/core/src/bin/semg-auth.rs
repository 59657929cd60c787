fn main() {
    std::process::exit(semg_auth::cli::main());
}
