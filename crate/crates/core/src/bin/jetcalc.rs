fn main() {
    std::process::exit(jetcalc::cli::run(std::env::args_os()));
}
