fn main() {
    std::process::exit(weakrec::cli::run());
}
