fn main() {
    std::process::exit(lecam_cli::run(std::env::args_os()));
}
