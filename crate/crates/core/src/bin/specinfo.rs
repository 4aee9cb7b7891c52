fn main() {
    std::process::exit(infostab::harness::main_with_args(std::env::args_os()));
}
