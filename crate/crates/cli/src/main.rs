fn main() {
    std::process::exit(tiltwell_cli::run(std::env::args_os()));
}
