fn main() {
    std::process::exit(vff_cli::run(std::env::args_os()));
}
