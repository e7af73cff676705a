fn main() {
    std::process::exit(xfclone::cli::main());
}
