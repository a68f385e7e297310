fn main() {
    std::process::exit(rawbench_cli::main_with(std::env::args_os()));
}
