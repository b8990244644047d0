fn main() {
    std::process::exit(gibbs_mcid_cli::run(std::env::args_os()));
}
