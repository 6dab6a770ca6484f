fn main() {
    std::process::exit(corner_pencil::cli::main());
}
