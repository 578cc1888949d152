fn main() {
    std::process::exit(hitomi::cli::cli_main(std::env::args_os()));
}
