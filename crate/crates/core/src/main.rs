fn main() {
    std::process::exit(ggmm_sr::cli::run(std::env::args_os()));
}
