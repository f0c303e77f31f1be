fn main() {
    std::process::exit(fracpde::cli::main_entry());
}
