fn main() {
    std::process::exit(wgs_bench::cli::run(std::env::args_os()));
}
