fn main() {
    std::process::exit(chanchart::runner::run_cli());
}
