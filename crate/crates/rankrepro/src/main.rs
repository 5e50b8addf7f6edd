fn main() {
    std::process::exit(rankrepro::cli::cli_main(std::env::args_os()));
}
