fn main() {
    std::process::exit(coclass_frame::cli::main_with_args(std::env::args_os()));
}
