fn main() {
    std::process::exit(aip_cli::run_from(std::env::args_os()));
}
