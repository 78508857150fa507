fn main() {
    std::process::exit(aset::cli::main_with_args(std::env::args_os()));
}
