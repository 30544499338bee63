fn main() {
    std::process::exit(vpdpo_cli::cli_run(std::env::args_os()));
}
