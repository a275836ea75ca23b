fn main() {
    std::process::exit(cogs_cli::run(std::env::args_os()));
}
