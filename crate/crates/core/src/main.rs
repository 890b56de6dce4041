fn main() {
    std::process::exit(clgnet::cli::main());
}
