fn main() {
    std::process::exit(decfem::cli::run());
}
