fn main() {
    std::process::exit(qt_rbm::cli::run());
}
